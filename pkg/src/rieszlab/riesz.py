"""Riesz transforms, truncations and potentials of measures with density."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import InvalidPower
from .measures import Measure, Params, RadialProfile
from .quadrature import (DEFAULT_SPEC, QuadratureSpec, gauss_legendre, integrate_1d_adaptive,
                         sphere_area)

__all__ = [
    "RieszValue", "riesz_vector", "riesz_truncated", "riesz_radial_component", "potential",
    "log_potential", "riesz_potential", "riesz_potential_gradient_fd",
]

METHODS = ("polar_split", "radial_reduction", "truncated")


@dataclass(frozen=True)
class RieszValue:
    vector: np.ndarray
    error_estimate: float
    method: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.error_estimate >= 0:
            raise ValueError("error estimate must be nonnegative")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


def _as_point(mu: Measure, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (mu.d,):
        raise ValueError(f"point must have {mu.d} coordinates, got shape {x.shape}")
    return x


def _check(mu: Measure, p: Params):
    if p.d != mu.d:
        raise ValueError(f"Params.d={p.d} does not match measure dimension {mu.d}")


def riesz_vector(mu: Measure, x, p: Params, q: QuadratureSpec = DEFAULT_SPEC) -> RieszValue:
    """``R^s mu(x) = int (y - x) / |y - x|**(s+1) dmu(y)``."""
    _check(mu, p)
    x = _as_point(mu, x)
    res = mu.polar_integral(x, p.s, q, kernel="vector")
    return RieszValue(np.asarray(res.value, dtype=float), float(res.error), "polar_split")


def riesz_truncated(mu: Measure, x, eps: float, p: Params, q: QuadratureSpec = DEFAULT_SPEC) -> RieszValue:
    """The transform with the ball ``|y - x| <= eps`` removed."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    _check(mu, p)
    x = _as_point(mu, x)
    res = mu.polar_integral(x, p.s, q, kernel="vector", inner_radius=float(eps))
    return RieszValue(np.asarray(res.value, dtype=float), float(res.error), "truncated")


def potential(mu: Measure, x, power: float, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int |y - x|**-power dmu(y)`` for ``power < d``."""
    x = _as_point(mu, x)
    if not power < mu.d:
        raise InvalidPower(f"power {power} is not integrable in dimension {mu.d}")
    return float(mu.polar_integral(x, float(power), q, kernel="scalar").value)


def log_potential(mu: Measure, x, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``-int log|y - x| dmu(y)``; its gradient is the s = 1 transform."""
    x = _as_point(mu, x)
    return float(mu.polar_integral(x, 0.0, q, kernel="log").value)


def riesz_potential(mu: Measure, x, p: Params, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``U^s(x) = 1/(s-1) int |y - x|**(1-s) dmu(y)``, logarithmic at s = 1.

    In both branches ``grad U^s = R^s mu``.
    """
    _check(mu, p)
    if p.s == 1.0:
        return log_potential(mu, x, q)
    return potential(mu, x, p.s - 1.0, q) / (p.s - 1.0)


def riesz_potential_gradient_fd(mu: Measure, x, p: Params, q: QuadratureSpec = DEFAULT_SPEC,
                                h: float | None = None, length_scale: float = 1.0) -> np.ndarray:
    """Central differences of ``U^s`` with one Richardson step.

    The default step is ``rel_tol**(1/3) * length_scale``; with one
    extrapolation the truncation error is O(h**4).
    """
    x = _as_point(mu, x)
    if h is None:
        h = q.rel_tol ** (1.0 / 3.0) * length_scale
    grad = np.zeros(mu.d)
    for j in range(mu.d):
        e = np.zeros(mu.d)
        e[j] = 1.0

        def central(step):
            return (riesz_potential(mu, x + step * e, p, q)
                    - riesz_potential(mu, x - step * e, p, q)) / (2 * step)

        d1 = central(h)
        d2 = central(h / 2)
        grad[j] = (4 * d2 - d1) / 3
    return grad


# ---------------------------------------------------------------------------
# radial reduction

_N_PANEL_NODES = 16


def _angular_factor(r, delta, d, s):
    """``omega_{d-2} int_0^pi sin^{d-2} th (t cos th - r) D**(-(s+1)/2) dth``.

    Here ``t = r + delta`` and ``D = delta**2 + 4 t r sin(th/2)**2``; the
    offset is passed separately so that ``t`` extremely close to ``r``
    keeps full relative precision. Panels grow geometrically away from
    th = 0 starting at the width of the near-singular zone.
    """
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    t = r + delta
    eps = np.maximum(np.abs(delta) / np.sqrt(np.maximum(t * r, 1e-300)), 1e-40)
    n_doublings = int(np.ceil(np.log2(np.pi / eps.min()))) + 1
    edges = np.concatenate([np.zeros((len(t), 1)),
                            eps[:, None] * 2.0 ** np.arange(n_doublings)[None, :],
                            np.full((len(t), 1), np.pi)], axis=1)
    edges = np.minimum(edges, np.pi)
    a, b = edges[:, :-1], edges[:, 1:]
    xg, wg = gauss_legendre(_N_PANEL_NODES)
    th = 0.5 * (a + b)[..., None] + 0.5 * (b - a)[..., None] * xg
    w = 0.5 * (b - a)[..., None] * wg
    tt = t[:, None, None]
    dd = delta[:, None, None]
    half = np.sin(0.5 * th) ** 2
    dist2 = dd ** 2 + 4.0 * tt * r * half
    f = np.sin(th) ** (d - 2) * (dd - 2.0 * tt * half) * dist2 ** (-(s + 1) / 2)
    return sphere_area(d - 2) * np.sum(f * w, axis=(1, 2))


def riesz_radial_component(mu, r: float, p: Params, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Signed radial component of ``R^s mu`` at any point with ``|x| = r``.

    Computed from the two-dimensional reduction
    ``int h(t) t**(d-1) lambda(t, r) dt`` where ``lambda`` is the angular
    factor above. Near ``t = r`` the integrand behaves like
    ``|t - r|**(d-1-s)``; a power substitution on each side removes it.
    """
    prof = mu.density if isinstance(mu, Measure) else mu
    if not isinstance(prof, RadialProfile):
        raise TypeError("riesz_radial_component needs a radial profile")
    if isinstance(mu, Measure):
        _check(mu, p)
    if not r > 0:
        raise ValueError("r must be positive")
    d, s = p.d, p.s
    t0, t1 = prof.support
    knots = sorted({t0, t1, *prof.breaks})
    if t0 < r < t1:
        knots = sorted(set(knots) | {r})
    # power substitution strength so that u**(m(d-s)-1) is at least linear
    m = int(min(12, max(2, math.ceil(2.0 / (d - s)))))

    def piece(a, b):
        # integrate on [a, b]; grade towards whichever end equals r
        def g(t):
            return prof(t) * t ** (d - 1) * _angular_factor(r, t - r, d, s)

        if a == r or b == r:
            sgn = 1.0 if a == r else -1.0
            length = b - a

            def fu(u):
                delta = sgn * length * u ** m
                tt = r + delta
                return (prof(tt) * tt ** (d - 1) * _angular_factor(r, delta, d, s)
                        * length * m * u ** (m - 1))

            return integrate_1d_adaptive(fu, 0.0, 1.0, q)
        return integrate_1d_adaptive(g, a, b, q)

    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        if b > a:
            total += piece(a, b).value
    return float(total)
