import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from rieszlab.errors import ToleranceNotMet, UnsupportedDimension
from rieszlab.quadrature import (QuadratureSpec, frame_from_axis, gauss_jacobi_01,
                                 integrate_1d_adaptive, integrate_1d_graded,
                                 integrate_box_adaptive, ray_box_clip, sphere_area, sphere_rule)


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0.0)
    q = QuadratureSpec().replace(rel_tol=1e-6)
    assert q.rel_tol == 1e-6
    assert q.as_dict()["rel_tol"] == 1e-6


@pytest.mark.parametrize("k, area", [(0, 2.0), (1, 2 * math.pi), (2, 4 * math.pi), (3, 2 * math.pi ** 2)])
def test_sphere_area(k, area):
    assert sphere_area(k) == pytest.approx(area, rel=1e-14)


def test_gk_polynomial_exact():
    assert integrate_1d_adaptive(lambda t: t ** 2, 0.0, 1.0).value == pytest.approx(1 / 3, rel=1e-15)


def test_adaptive_against_scipy_quad():
    f = lambda t: np.exp(-t) * np.cos(5 * t)
    ref = integrate.quad(f, 0.0, 3.0, epsabs=0, epsrel=1e-13)[0]
    res = integrate_1d_adaptive(f, 0.0, 3.0, QuadratureSpec(rel_tol=1e-12))
    assert res.value == pytest.approx(ref, rel=1e-11)
    assert res.error >= 0


def test_breakpoints_handle_kinks():
    res = integrate_1d_adaptive(lambda t: np.abs(t - 0.3), 0.0, 1.0, points=[0.3])
    assert res.value == pytest.approx(0.5 * (0.09 + 0.49), rel=1e-13)


def test_graded_endpoint_singularity():
    # int_0^1 t^-0.7 dt = 1/0.3
    res = integrate_1d_graded(lambda t: t ** -0.7, 0.0, 1.0, QuadratureSpec(rel_tol=1e-10),
                              singular_end="a", exponent=-0.7)
    assert res.value == pytest.approx(1 / 0.3, rel=1e-9)
    res = integrate_1d_graded(lambda t: (1 - t) ** -0.5, 0.0, 1.0, singular_end="b", exponent=-0.5)
    assert res.value == pytest.approx(2.0, rel=1e-9)


def test_tolerance_failure_reports_best_value():
    q = QuadratureSpec(rel_tol=1e-14, max_subdivisions=20)
    with pytest.raises(ToleranceNotMet) as info:
        integrate_1d_adaptive(lambda t: np.sign(t - 1 / math.pi), 0.0, 1.0, q)
    assert info.value.value is not None
    res = integrate_1d_adaptive(lambda t: np.sign(t - 1 / math.pi), 0.0, 1.0, q, raise_on_fail=False)
    assert res.value == pytest.approx(1 - 2 / math.pi, abs=1e-3)


def test_box_adaptive_gaussian_2d():
    f = lambda x: np.exp(-np.sum(x ** 2, axis=1))
    res = integrate_box_adaptive(f, [-4, -4], [4, 4], QuadratureSpec(rel_tol=1e-10))
    assert res.value == pytest.approx(math.pi * special.erf(4) ** 2, rel=1e-9)


def test_box_adaptive_vector_output_3d():
    f = lambda x: np.stack([np.ones(len(x)), x[:, 0] * x[:, 1] * x[:, 2]], axis=1)
    res = integrate_box_adaptive(f, [0, 0, 0], [1, 2, 3])
    assert res.value[0] == pytest.approx(6.0)
    assert res.value[1] == pytest.approx(0.5 * 2 * 4.5)


@given(st.integers(min_value=0, max_value=12), st.floats(min_value=-0.9, max_value=3.0))
def test_gauss_jacobi_moments(k, beta):
    # int_0^1 u^beta u^k du = 1/(k + beta + 1)
    u, w = gauss_jacobi_01(10, beta)
    assert np.dot(w, u ** k) == pytest.approx(1.0 / (k + beta + 1), rel=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_sphere_rule_area_and_moments(d):
    rule = sphere_rule(d, 8)
    assert rule.integrate(lambda x: np.ones(len(x))) == pytest.approx(sphere_area(d - 1), rel=1e-13)
    # int x_1^2 = area / d, int x_1^4 = 3 area / (d (d + 2))
    assert rule.integrate(lambda x: x[:, 0] ** 2) == pytest.approx(sphere_area(d - 1) / d, rel=1e-12)
    assert rule.integrate(lambda x: x[:, -1] ** 4) == pytest.approx(
        3 * sphere_area(d - 1) / (d * (d + 2)), rel=1e-12)
    assert np.allclose(np.linalg.norm(rule.nodes, axis=1), 1.0)


def test_sphere_rule_dimension_guard():
    with pytest.raises(UnsupportedDimension):
        sphere_rule(7, 4)


@given(st.lists(st.floats(min_value=-1, max_value=1), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 1e-3))
def test_frame_from_axis_orthonormal(v):
    f = frame_from_axis(v, 3)
    assert np.allclose(f @ f.T, np.eye(3), atol=1e-12)
    assert np.allclose(f[0], np.asarray(v) / np.linalg.norm(v))


def test_ray_box_clip():
    dirs = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
    t0, t1 = ray_box_clip(np.array([0.0, 0.0]), dirs, np.array([1.0, -1.0]), np.array([2.0, 1.0]))
    assert (t0[0], t1[0]) == (1.0, 2.0)
    assert t0[1] > t1[1]  # misses the box
    assert t0[2] > t1[2]
