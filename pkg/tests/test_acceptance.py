"""Acceptance criteria, one test per criterion (criterion 5 split in three).

Each test records a single PASS/FAIL line which is printed at the end of the
session (see ``conftest.py``) and, when the file is run as a script, to
stdout. Tolerances are the ones stated for each criterion.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from rieszlab import (Ball, Params, QuadratureSpec, divergence_flux, lemma_rhs, mass_in_ball,
                      riesz_potential, riesz_vector, surface_flux)
from rieszlab.constructions import (SIXTEEN_PI2, THREE_PI2, Counterexample5Spec, SlabMeasureSpec,
                                    counterexample_report, prop21_measure, remark_report)
from rieszlab.corpus import builtin, off_support_queries, random_radial
from rieszlab.flux import lemma_rhs_by_parts
from rieszlab.maxprinciple import SupSearchSpec, mp_report, radial_witness, theta
from rieszlab.riesz import riesz_potential_gradient_fd

pytestmark = pytest.mark.acceptance

RESULTS: dict = {}


def record(key: str, ok: bool, detail: str) -> None:
    line = f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[key] = line
    print(line)


def _z(d, *c):
    return tuple(list(c) + [0.0] * (d - len(c)))


def flux_corpus():
    """Ten (measure, d, s, ball) instances: radial bumps, annuli, slabs."""
    return [
        ("bump", builtin("bump", 3), 0.3, Ball(_z(3), 0.7)),
        ("annulus", builtin("annulus", 3), 0.5, Ball(_z(3, 0.5), 0.8)),
        ("shell_pair", builtin("shell_pair", 3), 1.2, Ball(_z(3), 1.0)),
        ("random_radial_1", random_radial(1, 3), 0.5, Ball(_z(3, 0.3, 0.2), 0.9)),
        ("bump", builtin("bump", 4), 1.5, Ball(_z(4, 0.4, 0.3), 0.6)),
        ("annulus", builtin("annulus", 4), 1.5, Ball(_z(4), 1.2)),
        ("bump", builtin("bump", 5), 2.0, Ball(_z(5, 0.5), 0.7)),
        ("annulus_far_ball", builtin("annulus", 5), 2.0, Ball(_z(5, 3.0), 0.5)),
        ("slab", builtin("slab", 3, delta=0.1), 0.5, Ball(_z(3), 0.5)),
        ("slab", builtin("slab", 3, delta=0.1), 1.2, Ball(_z(3, 0.3), 1.2)),
    ]


FLUX_Q = QuadratureSpec(rel_tol=1e-6)


@pytest.fixture(scope="module")
def flux_values():
    out = []
    for name, mu, s, ball in flux_corpus():
        p = Params(mu.d, s)
        out.append((name, mu, p, ball, surface_flux(mu, ball, p, FLUX_Q),
                    divergence_flux(mu, ball, p, FLUX_Q)))
    return out


def test_criterion_1_flux_identity(flux_values):
    t0 = time.perf_counter()
    worst = 0.0
    for name, mu, p, ball, surf, div in flux_values:
        worst = max(worst, abs(surf - div) / abs(div))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-3
    record("1", ok, f"max |surface-divergence|/|divergence| = {worst:.2e} over {len(flux_values)} instances")
    assert ok


def test_criterion_2_gradient_identity():
    t0 = time.perf_counter()
    # slab points run at a looser tolerance: the off-axis point is a 2-angle integral
    q_radial, q_slab = QuadratureSpec(rel_tol=1e-10), QuadratureSpec(rel_tol=1e-8)
    cases = []
    rng = np.random.default_rng(7)
    for mu, s in [(builtin("bump", 3), 0.5), (builtin("annulus", 3), 1.0), (builtin("shell_pair", 3), 1.5),
                  (builtin("bump", 4), 2.2), (builtin("annulus", 5), 2.0), (random_radial(3, 3), 0.7),
                  (random_radial(4, 4), 1.2)]:
        for x in off_support_queries(mu, 7, seed=int(rng.integers(1 << 30))):
            if np.linalg.norm(x) > 0.05:
                cases.append((mu, Params(mu.d, s), x, q_radial))
    cases = cases[:48]
    slab = builtin("slab", 3, delta=0.1)
    cases += [(slab, Params(3, 0.5), np.array([0.6, 0.0, 0.0]), q_slab),
              (slab, Params(3, 0.5), np.array([0.4, 0.5, 0.3]), q_slab)]
    worst = 0.0
    for mu, p, x, q in cases:
        exact = riesz_vector(mu, x, p, q).vector
        fd = riesz_potential_gradient_fd(mu, x, p, q)
        worst = max(worst, float(np.linalg.norm(fd - exact) / np.linalg.norm(exact)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and elapsed < 120
    record("2", ok, f"{len(cases)} points, max relative gap {worst:.2e}, {elapsed:.0f}s (limit 120s)")
    assert ok


def test_criterion_3_comparability(flux_values):
    brackets: dict = {}
    worst_bp = 0.0
    q_bp = QuadratureSpec(rel_tol=1e-9)
    instances = [(mu, p, ball, surf) for _, mu, p, ball, surf, _ in flux_values]
    rng = np.random.default_rng(3)
    for k in range(10):
        d, s = [(3, 0.3), (3, 0.5), (3, 1.2), (4, 1.5), (5, 2.0)][k % 5]
        mu = random_radial(100 + k, d)
        c = np.zeros(d)
        c[:2] = rng.uniform(-0.6, 0.6, size=2)
        ball = Ball(tuple(c), float(rng.uniform(0.3, 1.2)))
        p = Params(d, s)
        instances.append((mu, p, ball, surface_flux(mu, ball, p, FLUX_Q)))
    for mu, p, ball, surf in instances:
        rhs = lemma_rhs(mu, ball, p, FLUX_Q)
        ratio = abs(surf) / rhs
        lo, hi = brackets.get((p.d, p.s), (math.inf, 0.0))
        brackets[(p.d, p.s)] = (min(lo, ratio), max(hi, ratio))
        bp = lemma_rhs_by_parts(mu, ball, p, q_bp)
        ref = lemma_rhs(mu, ball, p, q_bp)
        worst_bp = max(worst_bp, abs(bp - ref) / abs(ref))
    lo = min(b[0] for b in brackets.values())
    hi = max(b[1] for b in brackets.values())
    text = ", ".join(f"(d={d},s={s}): [{a:.3g}, {b:.3g}]" for (d, s), (a, b) in sorted(brackets.items()))
    ok = 0.01 <= lo and hi <= 100 and worst_bp <= 1e-6
    record("3", ok, f"|flux|/rhs in [{lo:.3g}, {hi:.3g}]; per (d,s) {text}; by-parts gap {worst_bp:.1e}")
    assert ok


def test_criterion_4_component_ratio():
    t0 = time.perf_counter()
    p = Params(3, 0.5)
    spec = SupSearchSpec(component=0, coarse_points=9)
    q = QuadratureSpec(rel_tol=1e-5)
    deltas = [0.2, 0.1, 0.05, 0.02]
    ratios = []
    for delta in deltas:
        mu = prop21_measure(SlabMeasureSpec(3, 0.5, delta))
        ratios.append(mp_report(mu, p, spec, q).ratio)
    elapsed = time.perf_counter() - t0
    increasing = all(b > a for a, b in zip(ratios[:-1], ratios[1:]))
    exceeds = any(r > 10 for dl, r in zip(deltas, ratios) if dl <= 0.05)
    ok = increasing and exceeds and elapsed < 600
    record("4", ok, "ratios " + ", ".join(f"delta={dl}: {r:.3f}" for dl, r in zip(deltas, ratios))
           + f"; {elapsed:.0f}s (limit 600s)")
    assert ok


@pytest.fixture(scope="module")
def counterexample_reports():
    t0 = time.perf_counter()
    reps = {dl: counterexample_report(Counterexample5Spec(delta=dl)) for dl in (0.2, 0.1, 0.05)}
    return reps, time.perf_counter() - t0


def test_criterion_5i_dual_routes(counterexample_reports):
    reps, elapsed = counterexample_reports
    out = reps[0.05]["outputs"]
    ok = out["route_gap_rel"] <= 1e-2 and abs(out["c_hat"] - SIXTEEN_PI2) / SIXTEEN_PI2 <= 0.02
    record("5(i)", ok, f"route gap {out['route_gap_rel']:.2e}, c_hat = {out['c_hat']:.5f} "
           f"(16 pi^2 = {SIXTEEN_PI2:.5f})")
    assert ok


def test_criterion_5ii_far_value(counterexample_reports):
    reps, _ = counterexample_reports
    val = reps[0.05]["outputs"]["R2nu_at_2e1"]
    ok = abs(val - THREE_PI2) / THREE_PI2 <= 0.1
    record("5(ii)", ok, f"|R^2 nu(2e1)| = {val:.5f} vs 3 pi^2 = {THREE_PI2:.5f}")
    assert ok


def test_criterion_5iii_support_sup(counterexample_reports):
    reps, elapsed = counterexample_reports
    ratios = [reps[dl]["outputs"]["support_ratio"] for dl in (0.2, 0.1, 0.05)]
    sups = [reps[dl]["outputs"]["support_sup"] for dl in (0.2, 0.1, 0.05)]
    decreasing = all(b < a for a, b in zip(sups[:-1], sups[1:]))
    small = ratios[-1] <= 0.1
    ok = decreasing and small and elapsed < 900
    record("5(iii)", ok, "support sup / |R^2 nu(2e1)|: "
           + ", ".join(f"delta={dl}: {r:.3f}" for dl, r in zip((0.2, 0.1, 0.05), ratios))
           + f"; decreasing={decreasing}; <= 0.1 at delta=0.05: {small}; {elapsed:.0f}s")
    assert ok


def test_criterion_6_remark():
    rep = remark_report(Counterexample5Spec(delta=0.05))
    out = rep["outputs"]
    u = np.array(out["u_eta"])
    r1 = np.array(out["R1_nu"])
    pointwise = float(np.max(np.abs(u - r1) / np.maximum(np.abs(r1), 1e-300)))
    far = out["u_eta_at_2e1"]
    # points where R_1 nu vanishes by symmetry are compared on the global scale
    scaled = out["gap_u_eta_vs_R1_rel"]
    ok = scaled <= 1e-2 and abs(far - THREE_PI2) / THREE_PI2 <= 0.1
    record("6", ok, f"max |u_eta - R_1^2 nu| / max|R_1^2 nu| = {scaled:.2e} over {len(u)} points "
           f"(pointwise max {pointwise:.2e}); |u_eta(2e1)| = {far:.4f}")
    assert ok


# calibration sweep over seeds 1000..1019 gave a max ratio of 1.042; 1.5x margin
RADIAL_RATIO_BRACKET = 1.56


def test_criterion_7_radial_witness():
    worst = 0.0
    n_queries = 0
    ratios = []
    failures = []
    for d, s in [(3, 0.5), (3, 1.5), (4, 2.2)]:
        p = Params(d, s)
        for seed in range(20):
            mu = random_radial(seed, d)
            for w in off_support_queries(mu, 4, seed):
                n_queries += 1
                try:
                    res = radial_witness(mu, p, w)
                except Exception as exc:  # any failure counts against the criterion
                    failures.append(f"seed {seed}: {exc}")
                    continue
                worst = max(worst, res.mass_mismatch / float(mass_in_ball(mu, Ball(_z(d), 10.0))))
            ratios.append(mp_report(mu, p, SupSearchSpec(), QuadratureSpec(rel_tol=1e-6)).ratio)
    top = max(ratios)
    ok = not failures and worst <= 1e-8 and top < RADIAL_RATIO_BRACKET
    record("7", ok, f"{n_queries} off-support queries, {len(failures)} failures, max mass mismatch "
           f"{worst:.1e} x total; global/support sup ratio in [{min(ratios):.3f}, {top:.3f}] "
           f"(bracket {RADIAL_RATIO_BRACKET})")
    assert ok


def test_criterion_8_scaling():
    rng = np.random.default_rng(11)
    q = QuadratureSpec(rel_tol=1e-8)
    worst_r, worst_t = 0.0, 0.0
    for k in range(10):
        d, s = [(3, 0.5), (3, 1.5), (4, 2.2)][k % 3]
        mu = random_radial(200 + k, d) if k % 2 else builtin("annulus", d)
        p = Params(d, s)
        x0 = rng.uniform(-0.5, 0.5, size=d)
        r = float(rng.uniform(0.3, 2.0))
        nu = mu.rescaled(x0, r, s)
        y = rng.uniform(-1.5, 1.5, size=d)
        a = riesz_vector(nu, y, p, q)
        b = riesz_vector(mu, x0 + r * y, p, q)
        tol = a.error_estimate + b.error_estimate + 1e-7 * np.linalg.norm(b.vector)
        worst_r = max(worst_r, float(np.linalg.norm(a.vector - b.vector)) / tol)
        t = float(rng.uniform(0.2, 1.0))
        th_nu = theta(nu, y, t, s, q)
        th_mu = theta(mu, x0 + r * y, r * t, s, q)
        tol_t = 1e-7 * max(abs(th_mu), 1e-12)
        worst_t = max(worst_t, abs(th_nu - th_mu) / tol_t)
    ok = worst_r <= 1 and worst_t <= 1
    record("8", ok, f"10 rescalings; transform gap / combined tolerance <= {worst_r:.2e}, "
           f"theta gap / tolerance <= {worst_t:.2e}")
    assert ok


if __name__ == "__main__":  # pragma: no cover
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
