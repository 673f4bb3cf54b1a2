import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from rieszlab.errors import NegativityViolation, UnsupportedBall
from rieszlab.measures import (AnalyticDensity, Ball, LatticeDensity, MassProfile, Measure, Params,
                               Symmetry, mass_in_ball, radial_measure, read_lattice, total_mass,
                               write_lattice)
from rieszlab.quadrature import QuadratureSpec, sphere_area
from rieszlab import corpus


def test_params_validation_and_regime():
    with pytest.raises(ValueError):
        Params(3, 3.0)
    with pytest.raises(ValueError):
        Params(1, 0.5)
    assert Params(3, 1.5).divergence_regime
    assert not Params(3, 2.0).divergence_regime
    assert Params(3, 2.0).regime == "s>=1,s=d-1"


def test_ball_validation():
    with pytest.raises(UnsupportedBall):
        Ball((0.0, np.inf), 1.0)
    with pytest.raises(ValueError):
        Ball((0.0, 0.0), 0.0)


def test_negative_density_rejected():
    with pytest.raises(NegativityViolation):
        radial_measure(lambda t: t * (1 - t) * (t - 0.5), (0.0, 1.0), 3)
    mu = radial_measure(lambda t: t * (1 - t) * (t - 0.5), (0.0, 1.0), 3, sign_allowed=True)
    assert mu.sign_allowed


def test_discontinuous_profile_needs_flag():
    with pytest.raises(ValueError):
        radial_measure(lambda t: np.ones_like(t), (0.0, 1.0), 3)
    corpus.uniform_ball(3)  # opted in


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_uniform_ball_mass(d):
    mu = corpus.uniform_ball(d, rho0=2.0)
    assert total_mass(mu) == pytest.approx(2.0 * sphere_area(d - 1) / d, rel=1e-12)


def test_mass_profile_against_scipy():
    mu = corpus.shell_pair(3)
    m = MassProfile(mu.density, 3, QuadratureSpec(rel_tol=1e-12))
    ref = integrate.quad(lambda t: 4 * math.pi * t * t * mu.density(t), 0, 1.0,
                         points=[0.25, 0.75], epsrel=1e-13)[0]
    assert m(1.0) == pytest.approx(ref, rel=1e-11)
    assert m(0.1) == 0.0
    assert m(5.0) == m.total


def test_mass_in_offcentre_ball_uniform():
    # B(0,1) meets B(c,1) with |c|=1 in a lens of volume 5 pi / 12
    mu = corpus.uniform_ball(3)
    val = mass_in_ball(mu, Ball((1.0, 0.0, 0.0), 1.0), QuadratureSpec(rel_tol=1e-9))
    assert val == pytest.approx(5 * math.pi / 12, rel=1e-7)


def test_mass_in_ball_disjoint_is_zero():
    assert mass_in_ball(corpus.bump(3), Ball((5.0, 0.0, 0.0), 1.0)) == 0.0


def _lattice(d=2, seed=0):
    rng = np.random.default_rng(seed)
    vals = rng.uniform(0, 1, size=(5,) * d)
    return LatticeDensity(tuple([-1.0] * d), 0.5, vals)


def test_lattice_interpolates_nodes_and_total():
    lat = _lattice()
    i, j = 2, 3
    assert lat(np.array([[-1 + 0.5 * i, -1 + 0.5 * j]]))[0] == pytest.approx(lat.values[i, j])
    ref = integrate.dblquad(lambda y, x: lat(np.array([[x, y]]))[0], -1, 1, -1, 1, epsabs=1e-11)[0]
    assert lat.exact_total() == pytest.approx(ref, rel=1e-8)
    assert lat(np.array([[5.0, 5.0]]))[0] == 0.0


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_lattice_round_trip(tmp_path, fmt):
    lat = _lattice(d=3, seed=1)
    path = tmp_path / f"lat.{fmt}"
    write_lattice(lat, path)
    back = read_lattice(path)
    assert back.origin == lat.origin and back.spacing == lat.spacing
    assert np.array_equal(back.values, lat.values)


def test_lattice_csv_rejects_bad_count(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# rieszlab-lattice v1\n2,0.5,0,0\n2,2\n1,2\n3\n")
    with pytest.raises(ValueError):
        read_lattice(path)


def test_lattice_total_via_polar_matches_trapezoid():
    lat = LatticeDensity((-1.0, -1.0, -1.0), 1.0, np.pad(np.ones((1, 1, 1)), 1))
    mu = Measure(lat, 3)
    # a tent function of mass 1
    assert total_mass(mu) == pytest.approx(1.0)
    val = mass_in_ball(mu, Ball((0.0, 0.0, 0.0), 2.0), QuadratureSpec(rel_tol=1e-8))
    assert val == pytest.approx(1.0, rel=1e-6)


def test_analytic_symmetry_frames():
    sym = Symmetry("axis", (0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    frame, mode = sym.frame_at(np.array([0.3, 0.0, 0.0]))
    assert mode == "axis" and np.allclose(frame[0], [1, 0, 0])
    frame, mode = sym.frame_at(np.array([0.3, 0.0, 2.0]))
    assert mode == "meridian" and np.allclose(frame[1], [0, 0, 1])
    assert np.allclose(frame @ frame.T, np.eye(3))


@settings(max_examples=10)
@given(st.floats(min_value=0.3, max_value=3.0), st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_rescaled_mass_scaling(r, x0):
    # nu(A) = r^-s mu(x0 + r A): total mass scales as r^-s
    s = 0.5
    mu = corpus.bump(3).as_analytic()
    nu = mu.rescaled(np.asarray(x0), r, s)
    q = QuadratureSpec(rel_tol=1e-7)
    assert total_mass(nu, q) == pytest.approx(r ** -s * total_mass(corpus.bump(3)), rel=1e-5)


def test_rotation_preserves_values():
    from scipy.spatial.transform import Rotation
    mu = corpus.slab(3, delta=0.2)
    Q = Rotation.from_euler("xyz", [0.3, -0.4, 1.1]).as_matrix()
    nu = mu.rotated(Q)
    pts = np.random.default_rng(3).uniform(-1.5, 1.5, size=(50, 3))
    assert np.allclose(nu(pts @ Q.T), mu(pts))


def test_analytic_support_checks():
    dens = AnalyticDensity(rho=lambda x: np.where(np.linalg.norm(x, axis=-1) < 1, 1.0, 0.0),
                           support_box=((-1, -1), (1, 1)),
                           support_predicate=lambda x: np.linalg.norm(x, axis=-1) <= 1)
    assert dens.check_support()
    with pytest.raises(ValueError):
        AnalyticDensity(rho=lambda x: 0 * x[..., 0], support_box=((0, 0), (-1, 1)),
                        support_predicate=lambda x: True)
