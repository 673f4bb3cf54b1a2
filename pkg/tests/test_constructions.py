import math

import numpy as np
import pytest
from scipy import integrate

from rieszlab.constructions import (SIXTEEN_PI2, Counterexample5Spec, SlabMeasureSpec, bump_profile,
                                    counterexample_report, mollified_fields, nu_measure,
                                    prop21_measure, radial_convolution, slab_majorant, slab_volume,
                                    u5_profile)
from rieszlab.measures import Params, total_mass
from rieszlab.quadrature import QuadratureSpec, sphere_area
from rieszlab.riesz import riesz_vector


def test_slab_spec_validation():
    with pytest.raises(ValueError):
        SlabMeasureSpec(d=3, s=2.0)
    with pytest.raises(ValueError):
        SlabMeasureSpec(delta=0.6)


@pytest.mark.parametrize("delta", [0.02, 0.1, 0.3])
def test_slab_volume_d3(delta):
    # cylinder plus the half-disc rim revolved about the axis (Pappus)
    expect = 2 * math.pi * delta + math.pi ** 2 * delta ** 2 + 4 * math.pi * delta ** 3 / 3
    assert slab_volume(3, delta) == pytest.approx(expect, rel=1e-13)


@pytest.mark.parametrize("delta", [0.05, 0.2])
def test_slab_unit_mass_independent(delta):
    mu = prop21_measure(SlabMeasureSpec(d=3, delta=delta))
    f = lambda x1, rho: 2 * math.pi * rho * mu(np.array([x1, rho, 0.0]))
    mass = integrate.dblquad(f, 0, 1 + delta, -delta, delta, epsabs=1e-12, epsrel=1e-10)[0]
    assert mass == pytest.approx(1.0, rel=1e-7)


def test_slab_peak_below_twice_mean():
    delta = 0.1
    mu = prop21_measure(SlabMeasureSpec(d=4, delta=delta))
    assert mu(np.zeros(4)) < 2.0 / slab_volume(4, delta)
    assert total_mass(mu, QuadratureSpec(rel_tol=1e-8)) == pytest.approx(1.0, rel=1e-6)


def test_slab_majorant_bounds_component():
    delta, s = 0.1, 0.5
    mu = prop21_measure(SlabMeasureSpec(d=3, s=s, delta=delta))
    q = QuadratureSpec(rel_tol=1e-6)
    for x in ([0.0, 0.0, 0.0], [0.05, 0.5, 0.0], [-0.02, 0.0, 1.02]):
        x = np.asarray(x)
        comp = abs(riesz_vector(mu, x, Params(3, s), q).vector[0])
        bound = slab_majorant(mu, x, s, delta, q)
        assert comp <= bound["direct"] * (1 + 1e-6)
        assert bound["mass_delta"] > 0


def _radial_lap(f, r, h):
    # f'' + (4/r) f' in R^5 with five-point stencils
    d1 = (f(r - 2 * h) - 8 * f(r - h) + 8 * f(r + h) - f(r + 2 * h)) / (12 * h)
    d2 = (-f(r - 2 * h) + 16 * f(r - h) - 30 * f(r) + 16 * f(r + h) - f(r + 2 * h)) / (12 * h * h)
    return d2 + 4.0 / r * d1


def test_u5_profile_derivatives():
    u = u5_profile()
    for r in (1.3, 2.0, 3.7):
        assert u.grad(r) == pytest.approx((u.value(r + 1e-6) - u.value(r - 1e-6)) / 2e-6, rel=1e-7)
        assert u.laplacian(r) == pytest.approx(_radial_lap(u.value, r, 1e-3), rel=1e-6)
    assert u.value(1.0) == pytest.approx(2 / 3) and u.grad(0.5) == 0.0
    assert u.grad(2.0) == pytest.approx(-3 / 16)


def test_bump_unit_mass_and_bilaplacian():
    spec = Counterexample5Spec(delta=0.1)
    phi = bump_profile(spec)
    mass = integrate.quad(lambda t: sphere_area(4) * phi.value(t) * t ** 4, 0, 0.1, epsrel=1e-12)[0]
    assert mass == pytest.approx(1.0, rel=1e-10)
    for r in (0.02, 0.05, 0.08):
        assert phi.laplacian(r) == pytest.approx(_radial_lap(phi.value, r, 1e-4), rel=1e-4)
        assert phi.bilaplacian(r) == pytest.approx(_radial_lap(phi.laplacian, r, 1e-4), rel=1e-4)


def test_spec_validation_counterexample():
    with pytest.raises(ValueError):
        Counterexample5Spec(delta=0.3)
    with pytest.raises(ValueError):
        Counterexample5Spec(bump_exponent=6)


def test_convolution_constant_region():
    # u is constant on the unit ball, so u * phi = 2/3 well inside it
    spec = Counterexample5Spec(delta=0.1)
    u, phi = u5_profile(), bump_profile(spec)
    for r in (0.3, 0.85):
        assert radial_convolution(u.value, phi.value, 0.1, r) == pytest.approx(2 / 3, rel=1e-12)
    assert radial_convolution(lambda t: np.ones_like(t), phi.value, 0.1, 0.0) == pytest.approx(1.0)


def _conv_oracle(f, g, r, delta, radial_component=False):
    # direct 5-d integral in (t, theta) about the origin of g
    def inner(th, t):
        w = math.sqrt(r * r + t * t - 2 * r * t * math.cos(th))
        val = float(f(w))
        if radial_component:
            val *= (r - t * math.cos(th)) / w
        return sphere_area(3) * math.sin(th) ** 3 * val * float(g(t)) * t ** 4
    return integrate.dblquad(inner, 0, delta, 0, math.pi, epsabs=1e-13, epsrel=1e-11)[0]


@pytest.mark.parametrize("r", [0.97, 1.04, 2.0])
def test_convolution_against_direct_quadrature(r):
    spec = Counterexample5Spec(delta=0.1)
    u, phi = u5_profile(), bump_profile(spec)
    assert radial_convolution(u.value, phi.value, 0.1, r) == pytest.approx(
        _conv_oracle(u.value, phi.value, r, 0.1), rel=1e-8)
    assert radial_convolution(u.grad, phi.value, 0.1, r, degree=1) == pytest.approx(
        _conv_oracle(u.grad, phi.value, r, 0.1, True), rel=1e-7)


def test_convolution_gradient_matches_difference_quotient():
    spec = Counterexample5Spec(delta=0.1)
    u, phi = u5_profile(), bump_profile(spec)
    r, h = 1.02, 1e-4
    fd = (radial_convolution(u.value, phi.value, 0.1, r + h)
          - radial_convolution(u.value, phi.value, 0.1, r - h)) / (2 * h)
    assert radial_convolution(u.grad, phi.value, 0.1, r, degree=1) == pytest.approx(fd, rel=1e-6)


def test_nu_mass_and_far_field():
    spec = Counterexample5Spec(delta=0.2)
    nu = nu_measure(spec)
    q = QuadratureSpec(rel_tol=1e-9)
    # flux of grad(Delta U) = grad(-2/r^3) through a large sphere
    assert total_mass(nu, q) == pytest.approx(SIXTEEN_PI2, rel=1e-6)
    val = riesz_vector(nu, np.array([2.0, 0, 0, 0, 0]), Params(5, 2.0), q).vector
    grad = mollified_fields(spec).grad_U(2.0)[0]
    assert val[0] == pytest.approx(SIXTEEN_PI2 * grad, rel=1e-6)
    assert val[0] == pytest.approx(SIXTEEN_PI2 * -3 / 16, rel=5e-3)  # the small-delta limit
    assert mollified_fields(spec) is mollified_fields(spec)


def test_counterexample_report_small():
    rep = counterexample_report(Counterexample5Spec(delta=0.2), n_test=6, n_support=7)
    out = rep["outputs"]
    assert out["route_gap_rel"] <= 1e-2
    assert out["c_hat_rel_dev"] <= 2e-2
    assert set(rep["error_estimates"]) <= set(out)
    assert len(out["route_direct"]) == 6
