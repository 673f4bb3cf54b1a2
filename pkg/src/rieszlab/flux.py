"""Flux of the Riesz transform through a sphere, computed three ways.

``surface_flux`` integrates ``R^s mu . n`` over the sphere. ``divergence_flux``
uses ``div_x (y - x)/|y - x|**(s+1) = -(d-s-1) |y - x|**-(s+1)`` and Fubini:

    flux = -(d-s-1) int_0^T K_B(t) m'(t) dt,

where ``m'(t)`` is the shell density of ``mu`` about the ball centre and
``K_B(t) = int_B |x - y|**-(s+1) dx`` for any ``|y - c| = t``. ``lemma_rhs``
is the two-term comparison quantity built from the same shell density.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import RegimeViolation
from .measures import Ball, MassProfile, Measure, Params, mass_in_ball
from .quadrature import (DEFAULT_SPEC, QuadratureSpec, _angles_to_dirs,
                         gauss_legendre, integrate_1d_adaptive, integrate_box_adaptive,
                         sphere_area, sphere_rule)
from .parallel import pmap
from .riesz import riesz_vector

__all__ = [
    "FluxReport", "surface_flux", "divergence_flux", "lemma_rhs", "lemma_rhs_by_parts",
    "ball_kernel_integral", "shell_density", "flux_report",
]


@dataclass(frozen=True)
class FluxReport:
    surface_value: float
    divergence_value: float
    rhs_value: float
    ratios: tuple
    tolerances_used: QuadratureSpec = field(default=DEFAULT_SPEC)
    by_parts_value: float | None = None

    def __post_init__(self):
        vals = [self.surface_value, self.divergence_value, self.rhs_value]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("flux report values must be finite")

    def as_dict(self) -> dict:
        return {
            "surface_value": self.surface_value,
            "divergence_value": self.divergence_value,
            "rhs_value": self.rhs_value,
            "by_parts_value": self.by_parts_value,
            "ratios": list(self.ratios),
            "tolerances_used": self.tolerances_used.as_dict(),
        }


def _is_empty(mu: Measure) -> bool:
    lo, hi = mu.support_box
    return bool(np.all(hi - lo == 0))


def _check(mu: Measure, ball: Ball, p: Params):
    if p.d != mu.d or ball.d != mu.d:
        raise ValueError("dimension mismatch between measure, ball and params")


def _centred_radial(mu: Measure, c) -> bool:
    return mu.is_radial and float(np.linalg.norm(c)) == 0.0


def _frame_mode(mu: Measure, c):
    sym = mu.symmetry
    if sym is None:
        return np.eye(mu.d), "full"
    return sym.frame_at(c)


def _angle_box(d: int, mode: str):
    if mode == "axis":
        return [0.0], [np.pi]
    if mode == "meridian":
        return [0.0, 0.0], [np.pi, np.pi]
    return [0.0] * (d - 1), [np.pi] * (d - 2) + [2 * np.pi]


def _axis_crossings(mu: Measure, c, frame, t):
    """Polar angles at which the sphere ``|y - c| = t`` meets break spheres."""
    sym = mu.symmetry
    if sym is None or sym.kind != "point":
        return []
    radii = mu._sphere_radii()
    w = np.asarray(c, dtype=float) - np.asarray(sym.center, dtype=float)
    wa = float(np.dot(w, frame[0]))
    out = []
    if abs(wa) > 0:
        dist2 = float(np.dot(w, w))
        for b in radii:
            cos_th = (b * b - t * t - dist2) / (2 * t * wa)
            if -1 < cos_th < 1:
                out.append(math.acos(cos_th))
    return out


# ---------------------------------------------------------------------------
# shell density


def shell_density(mu: Measure, center, t, q: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """``m'(t) = int_{|y - c| = t} rho dsigma``, the derivative of ``mu(B(c, t))``.

    Origin-centred radial measures use ``omega_{d-1} h(t) t**(d-1)``;
    otherwise the density is integrated over the sphere in the polar angles
    left after the measure's symmetry about ``c``.
    """
    c = np.asarray(center, dtype=float)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if _centred_radial(mu, c):
        return MassProfile(mu.density, mu.d, q).derivative(ts)
    frame, mode = _frame_mode(mu, c)
    lo, hi = _angle_box(mu.d, mode)
    out = np.empty(len(ts))
    for i, tv in enumerate(ts):
        if tv <= 0:
            out[i] = 0.0
            continue

        def f(angles, tv=tv):
            dirs, jac = _angles_to_dirs(angles, mu.d, mode)
            return mu(c + tv * (dirs @ frame[:mu.d])) * jac

        splits = None
        if mode == "axis":
            splits = [_axis_crossings(mu, c, frame, tv)]
        res = integrate_box_adaptive(f, lo, hi, q, initial_splits=splits)
        out[i] = float(res.value) * tv ** (mu.d - 1)
    return out


# ---------------------------------------------------------------------------
# kernel mass of a ball


def ball_kernel_integral(a: float, radius: float, d: int, power: float,
                         q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``K(a) = int_{B(0, radius)} |x - y|**-power dx`` for ``|y| = a``.

    Integrated along rays from ``y``: a ray in direction at polar angle
    ``theta`` runs through the ball over ``[L1, L2]`` and contributes
    ``(L2**e - L1**e)/e`` with ``e = d - power``.
    """
    if not power < d:
        raise ValueError("power must be below d")
    e = d - power
    r = float(radius)
    a = float(abs(a))
    wsph = sphere_area(d - 2)
    if a <= r:
        # theta measured from the direction pointing away from the centre
        def f(th):
            ln = -a * np.cos(th) + np.sqrt(np.maximum(r * r - (a * np.sin(th)) ** 2, 0.0))
            return np.sin(th) ** (d - 2) * ln ** e

        res = integrate_1d_adaptive(f, 0.0, np.pi, q, points=[0.5 * np.pi])
        return wsph / e * res.value

    # outside: sin(theta) = (r/a) sin(phi) on the cone of directions hitting the ball
    ratio = r / a

    def g(phi):
        sth = ratio * np.sin(phi)
        cth = np.sqrt(1.0 - sth * sth)
        half = r * np.cos(phi)
        l1 = a * cth - half
        l2 = a * cth + half
        return sth ** (d - 2) * (l2 ** e - l1 ** e) * ratio * np.cos(phi) / cth

    res = integrate_1d_adaptive(g, 0.0, 0.5 * np.pi, q)
    return wsph / e * res.value


# ---------------------------------------------------------------------------
# the three routes


def surface_flux(mu: Measure, ball: Ball, p: Params, q: QuadratureSpec = DEFAULT_SPEC,
                 return_error: bool = False):
    """``int_{dB} R^s mu . n dsigma``.

    Origin-centred radial measures need one evaluation. With an
    axisymmetric configuration the integrand depends on the polar angle
    only and composite Gauss-Legendre panels (``q.sphere_order`` nodes)
    are used; otherwise the product sphere rule. The error estimate
    compares with a rule of half the order.
    """
    _check(mu, ball, p)
    c = np.asarray(ball.center, dtype=float)
    r = float(ball.radius)
    d = mu.d
    if _is_empty(mu):
        return (0.0, 0.0) if return_error else 0.0
    area = sphere_area(d - 1) * r ** (d - 1)

    def normal_component(units):
        pts = c + r * units
        res = pmap(lambda x: riesz_vector(mu, x, p, q), pts)
        vals = np.array([float(np.dot(rv.vector, n)) for rv, n in zip(res, units)])
        errs = np.array([rv.error_estimate for rv in res])
        return vals, errs

    if _centred_radial(mu, c):
        e = np.zeros((1, d))
        e[0, 0] = 1.0
        v, err = normal_component(e)
        val, error = area * v[0], area * err[0]
    else:
        frame, mode = _frame_mode(mu, c)
        if mode == "axis":
            edges = sorted({0.0, 0.5 * np.pi, np.pi, *_axis_crossings(mu, c, frame, r)})
            val, error = _axis_surface(normal_component, edges, frame, d, r, q.sphere_order)
        else:
            val, error = _sphere_rule_surface(normal_component, d, r, q.sphere_order)
    if return_error:
        return float(val), float(error)
    return float(val)


def _axis_panels(edges, n):
    xg, wg = gauss_legendre(n)
    th, w = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        th.append(0.5 * (a + b) + 0.5 * (b - a) * xg)
        w.append(0.5 * (b - a) * wg)
    return np.concatenate(th), np.concatenate(w)


def _axis_surface(normal_component, edges, frame, d, r, order):
    def rule(n):
        th, w = _axis_panels(edges, n)
        dirs, jac = _angles_to_dirs(th[:, None], d, "axis")
        v, err = normal_component(dirs @ frame[:d])
        scale = r ** (d - 1)
        return scale * np.sum(w * jac * v), scale * np.sum(w * jac * err)

    hi, err_hi = rule(order)
    lo, _ = rule(max(2, order // 2))
    return hi, abs(hi - lo) + err_hi


def _sphere_rule_surface(normal_component, d, r, order):
    def rule(n):
        sr = sphere_rule(d, n)
        v, err = normal_component(sr.nodes)
        scale = r ** (d - 1)
        return scale * np.dot(sr.weights, v), scale * np.dot(sr.weights, err)

    hi, err_hi = rule(order)
    lo, _ = rule(max(2, order // 2))
    return hi, abs(hi - lo) + err_hi


def _outer_radius(mu: Measure, c) -> float:
    """Largest distance from ``c`` to the support."""
    if _centred_radial(mu, c):
        return float(mu.density.support[1])
    lo, hi = mu.support_box
    far = np.maximum(np.abs(lo - c), np.abs(hi - c))
    return float(np.linalg.norm(far))


def _inner_radius(mu: Measure, c) -> float:
    """Distance from ``c`` to the support box (0 if inside)."""
    if _centred_radial(mu, c):
        return float(mu.density.support[0])
    lo, hi = mu.support_box
    return float(np.linalg.norm(np.maximum(0.0, np.maximum(lo - c, c - hi))))


def _radial_points(mu: Measure, c, t0, t1, extra=()):
    pts = list(mu.shell_breaks(c)) + list(extra)
    if _centred_radial(mu, c):
        pts += list(mu.density.breaks)
    return sorted({float(v) for v in pts if t0 < v < t1})


def divergence_flux(mu: Measure, ball: Ball, p: Params, q: QuadratureSpec = DEFAULT_SPEC,
                    return_error: bool = False):
    """Volume form of the flux, ``-(d-s-1) int_B int |y-x|**-(s+1) dmu(y) dx``.

    The sign is that of ``div_x (y-x)/|y-x|**(s+1)``; a nonnegative
    measure therefore has negative flux.
    """
    _check(mu, ball, p)
    if not p.divergence_regime:
        raise RegimeViolation(f"volume form needs s < d - 1, got s={p.s}, d={p.d}")
    if _is_empty(mu):
        return (0.0, 0.0) if return_error else 0.0
    c = np.asarray(ball.center, dtype=float)
    r = float(ball.radius)
    d, power = mu.d, p.s + 1.0
    t0 = _inner_radius(mu, c)
    t1 = _outer_radius(mu, c)
    if not t1 > t0:
        return (0.0, 0.0) if return_error else 0.0
    inner_q = q.replace(rel_tol=min(q.rel_tol, 1e-10))

    def f(t):
        k = np.array([ball_kernel_integral(tv, r, d, power, inner_q) for tv in t])
        return k * shell_density(mu, c, t, inner_q)

    res = integrate_1d_adaptive(f, t0, t1, q, points=_radial_points(mu, c, t0, t1, (r,)))
    val = -(d - p.s - 1.0) * res.value + 0.0
    err = (d - p.s - 1.0) * res.error
    return (float(val), float(err)) if return_error else float(val)


def _mass_profile(mu: Measure, c, q):
    if _centred_radial(mu, c):
        prof = MassProfile(mu.density, mu.d, q)
        return lambda t: float(prof(t))
    return lambda t: mass_in_ball(mu, Ball(tuple(c), float(t)), q)


def lemma_rhs(mu: Measure, ball: Ball, p: Params, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``r**(d-s-1) mu(B) + r**d int_r^T t**-(s+1) m'(t) dt``.

    ``T`` is the largest distance from the centre to the support, beyond
    which the shell density vanishes.
    """
    _check(mu, ball, p)
    if not p.divergence_regime:
        raise RegimeViolation(f"comparison quantity needs s < d - 1, got s={p.s}, d={p.d}")
    if _is_empty(mu):
        return 0.0
    c = np.asarray(ball.center, dtype=float)
    r = float(ball.radius)
    d, s = mu.d, p.s
    mass = _mass_profile(mu, c, q)(r)
    first = r ** (d - s - 1.0) * mass
    t0 = max(r, _inner_radius(mu, c))
    t1 = _outer_radius(mu, c)
    tail = 0.0
    if t1 > t0:
        res = integrate_1d_adaptive(lambda t: t ** (-(s + 1.0)) * shell_density(mu, c, t, q),
                                    t0, t1, q, points=_radial_points(mu, c, t0, t1))
        tail = res.value
    return float(first + r ** d * tail)


def lemma_rhs_by_parts(mu: Measure, ball: Ball, p: Params, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """The same quantity with the tail integrated by parts.

    ``int_r^T t**-(s+1) dm = -m(r) r**-(s+1) + m(T) T**-(s+1)
    + (s+1) int_r^T m(t) t**-(s+2) dt``, with ``m(t) = mu(B(c, t))``
    evaluated directly as ball masses. The boundary term at ``T`` is kept.
    """
    _check(mu, ball, p)
    if not p.divergence_regime:
        raise RegimeViolation(f"comparison quantity needs s < d - 1, got s={p.s}, d={p.d}")
    if _is_empty(mu):
        return 0.0
    c = np.asarray(ball.center, dtype=float)
    r = float(ball.radius)
    d, s = mu.d, p.s
    m = _mass_profile(mu, c, q)
    m_r = m(r)
    t1 = _outer_radius(mu, c)
    tail = 0.0
    if t1 > r:
        res = integrate_1d_adaptive(
            lambda t: np.array([m(tv) for tv in t]) * t ** (-(s + 2.0)), r, t1, q,
            points=_radial_points(mu, c, r, t1))
        m_T = m(t1)
        tail = -m_r * r ** (-(s + 1.0)) + m_T * t1 ** (-(s + 1.0)) + (s + 1.0) * res.value
    return float(r ** (d - s - 1.0) * m_r + r ** d * tail)


def flux_report(mu: Measure, ball: Ball, p: Params, q: QuadratureSpec = DEFAULT_SPEC,
                by_parts: bool = False) -> FluxReport:
    """All routes side by side.

    ``ratios`` holds ``surface/divergence`` and ``|surface|/rhs``; a ratio
    is NaN when its denominator does not exceed ``q.abs_tol``.
    """
    surf = surface_flux(mu, ball, p, q)
    div = divergence_flux(mu, ball, p, q)
    rhs = lemma_rhs(mu, ball, p, q)
    bp = lemma_rhs_by_parts(mu, ball, p, q) if by_parts else None
    r1 = surf / div if abs(div) > q.abs_tol else float("nan")
    r2 = abs(surf) / rhs if abs(rhs) > q.abs_tol else float("nan")
    return FluxReport(surf, div, rhs, (r1, r2), q, bp)

