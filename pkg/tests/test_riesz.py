import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.spatial.transform import Rotation

from rieszlab import corpus
from rieszlab.errors import InvalidPower
from rieszlab.measures import Params
from rieszlab.quadrature import QuadratureSpec, sphere_area
from rieszlab.riesz import (RieszValue, log_potential, potential, riesz_potential,
                            riesz_potential_gradient_fd, riesz_radial_component, riesz_truncated,
                            riesz_vector)

Q = QuadratureSpec(rel_tol=1e-10)


def _ball_volume(d):
    return sphere_area(d - 1) / d


@pytest.mark.parametrize("d", [3, 4, 5])
@pytest.mark.parametrize("r", [0.4, 0.9, 1.7, 3.0])
def test_newtonian_uniform_ball(d, r):
    # at s = d-1 the field of a uniform ball is that of the mass inside |x|
    rho0 = 1.5
    mu = corpus.uniform_ball(d, rho0=rho0)
    x = np.zeros(d)
    x[0] = r
    inside = rho0 * _ball_volume(d) * min(r, 1.0) ** d
    val = riesz_vector(mu, x, Params(d, d - 1.0), Q)
    expect = -inside * x / r ** d
    assert np.allclose(val.vector, expect, rtol=1e-8, atol=1e-12)
    assert val.method == "polar_split"


@pytest.mark.parametrize("d, power", [(2, 0.5), (3, 0.5), (3, 2.5), (5, 1.0)])
def test_centre_potential_uniform_ball(d, power):
    mu = corpus.uniform_ball(d, radius=0.7)
    expect = sphere_area(d - 1) * 0.7 ** (d - power) / (d - power)
    assert potential(mu, np.zeros(d), power, Q) == pytest.approx(expect, rel=1e-9)


def test_potential_rejects_nonintegrable_power():
    with pytest.raises(InvalidPower):
        potential(corpus.bump(3), np.zeros(3), 3.0)


def test_log_potential_at_centre():
    # -int_B log|y| dy over the unit disc is pi/2
    mu = corpus.uniform_ball(2)
    assert log_potential(mu, np.zeros(2), Q) == pytest.approx(math.pi / 2, rel=1e-9)


def test_radial_component_against_scipy():
    d, s, r = 3, 0.5, 2.0
    mu = corpus.bump(3)

    def inner(c, t):
        return (t * c - r) / (t * t + r * r - 2 * t * r * c) ** ((s + 1) / 2)

    ref = 2 * math.pi * integrate.dblquad(lambda c, t: t * t * mu.density(t) * inner(c, t),
                                          0, 1, -1, 1, epsabs=0, epsrel=1e-12)[0]
    assert riesz_radial_component(mu, r, Params(d, s), Q) == pytest.approx(ref, rel=1e-9)
    x = np.array([0.0, r, 0.0])
    assert np.allclose(riesz_vector(mu, x, Params(d, s), Q).vector, [0, ref, 0], rtol=1e-8, atol=1e-14)


@pytest.mark.parametrize("s", [0.4, 1.0, 1.6, 2.3])
def test_radial_component_inside_support_matches_vector(s):
    mu = corpus.annulus(3)
    x = np.array([0.0, 0.0, 1.2])
    vec = riesz_vector(mu, x, Params(3, s), QuadratureSpec(rel_tol=1e-9)).vector
    rad = riesz_radial_component(mu, 1.2, Params(3, s), QuadratureSpec(rel_tol=1e-9))
    assert vec[2] == pytest.approx(rad, rel=1e-6)


def test_truncation_beyond_support_gap_changes_nothing():
    mu = corpus.bump(3)
    x = np.array([1.5, 0.0, 0.0])
    p = Params(3, 0.8)
    full = riesz_vector(mu, x, p, Q).vector
    cut = riesz_truncated(mu, x, 0.3, p, Q)
    assert np.allclose(cut.vector, full, rtol=1e-9)
    assert cut.method == "truncated"
    with pytest.raises(ValueError):
        riesz_truncated(mu, x, 0.0, p)


def test_truncated_field_vanishes_at_centre_of_symmetry():
    mu = corpus.uniform_ball(3)
    assert np.allclose(riesz_truncated(mu, np.zeros(3), 0.2, Params(3, 1.5), Q).vector, 0, atol=1e-12)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.5])
def test_gradient_identity_radial(s):
    mu = corpus.shell_pair(4)
    x = np.array([0.0, 1.0, 0.0, 0.0])  # inside the empty gap
    p = Params(4, s)
    fd = riesz_potential_gradient_fd(mu, x, p, Q)
    exact = riesz_vector(mu, x, p, Q).vector
    assert np.linalg.norm(fd - exact) <= 1e-6 * np.linalg.norm(exact)


def test_potential_branches():
    mu = corpus.bump(3)
    x = np.array([1.4, 0.0, 0.0])
    assert riesz_potential(mu, x, Params(3, 2.0)) == pytest.approx(potential(mu, x, 1.0))
    assert riesz_potential(mu, x, Params(3, 1.0)) == pytest.approx(log_potential(mu, x))


def test_value_validation():
    with pytest.raises(ValueError):
        RieszValue(np.zeros(3), -1.0, "polar_split")
    with pytest.raises(ValueError):
        RieszValue(np.zeros(3), 0.0, "other")
    with pytest.raises(ValueError):
        riesz_vector(corpus.bump(3), np.zeros(2), Params(3, 0.5))


@settings(max_examples=6)
@given(st.lists(st.floats(-math.pi, math.pi), min_size=3, max_size=3))
def test_rotation_equivariance(angles):
    # R(Q# mu)(Q x) = Q R mu(x)
    mu = corpus.slab(3, delta=0.2)
    Qm = Rotation.from_euler("zyx", angles).as_matrix()
    x = np.array([0.5, 0.0, 0.0])
    p = Params(3, 0.5)
    q = QuadratureSpec(rel_tol=1e-7)
    base = riesz_vector(mu, x, p, q)
    rot = riesz_vector(mu.rotated(Qm), Qm @ x, p, q)
    assert np.linalg.norm(rot.vector - Qm @ base.vector) <= 1e-6 * base.norm
