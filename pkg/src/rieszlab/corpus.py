"""Built-in test measures and seeded random radial profiles."""

from __future__ import annotations

import numpy as np

from .measures import Measure, radial_measure

__all__ = ["BUILTINS", "builtin", "random_radial", "random_radial_corpus", "off_support_queries"]


def _poly_bump(center, width, power=3):
    def h(t):
        x = (np.asarray(t, dtype=float) - center) / width
        return np.where(np.abs(x) < 1, np.clip(1 - x * x, 0, None) ** power, 0.0)
    return h


def uniform_ball(d: int, rho0: float = 1.0, radius: float = 1.0) -> Measure:
    """Constant density on a ball (discontinuous at the boundary)."""
    return radial_measure(lambda t: np.where(np.asarray(t) <= radius, rho0, 0.0), (0.0, radius), d,
                          breaks=(radius,), allow_discontinuity=True, note="indicator of a ball",
                          name=f"uniform_ball(d={d})")


def bump(d: int, radius: float = 1.0) -> Measure:
    """``(1 - (t/R)^2)^2`` on the ball of radius ``R``."""
    return radial_measure(lambda t: np.clip(1 - (np.asarray(t) / radius) ** 2, 0, None) ** 2,
                          (0.0, radius), d, name=f"bump(d={d})")


def annulus(d: int, inner: float = 1.0, outer: float = 1.5) -> Measure:
    """Smooth profile on the shell ``inner <= |x| <= outer``."""
    c, w = 0.5 * (inner + outer), 0.5 * (outer - inner)
    return radial_measure(_poly_bump(c, w, 2), (inner, outer), d, name=f"annulus(d={d})")


def shell_pair(d: int) -> Measure:
    """Two disjoint smooth shells, leaving an empty gap between them."""
    h1, h2 = _poly_bump(0.5, 0.25, 3), _poly_bump(1.5, 0.3, 3)
    return radial_measure(lambda t: h1(t) + 0.5 * h2(t), (0.25, 1.8), d,
                          breaks=(0.75, 1.2), name=f"shell_pair(d={d})")


def slab(d: int = 3, delta: float = 0.1, s: float = 0.5) -> Measure:
    from .constructions import SlabMeasureSpec, prop21_measure
    return prop21_measure(SlabMeasureSpec(d=d, s=s, delta=delta))


BUILTINS = {
    "uniform_ball": uniform_ball,
    "bump": bump,
    "annulus": annulus,
    "shell_pair": shell_pair,
    "slab": slab,
}


def builtin(name: str, d: int, **kwargs) -> Measure:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown corpus measure {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(d, **kwargs)


def random_radial(seed: int, d: int) -> Measure:
    """A nonnegative radial profile built from 1-3 C^2 bumps.

    The bumps may leave gaps, so the support can be a union of shells.
    The profile is reproducible from ``seed``.
    """
    rng = np.random.default_rng(seed)
    t0 = float(rng.choice([0.0, rng.uniform(0.2, 0.8)]))
    n = int(rng.integers(1, 4))
    span = float(rng.uniform(0.6, 1.6))
    edges = np.sort(rng.uniform(t0, t0 + span, size=2 * n))
    edges[0], edges[-1] = t0, t0 + span
    bumps, breaks = [], []
    for k in range(n):
        a, b = edges[2 * k], edges[2 * k + 1]
        if b - a < 0.05:
            b = a + 0.05
        bumps.append((_poly_bump(0.5 * (a + b), 0.5 * (b - a), 3), float(rng.uniform(0.3, 2.0))))
        breaks += [a, b]
    t1 = max(breaks)

    def h(t):
        return sum(w * f(t) for f, w in bumps)

    inner = [b for b in breaks if t0 < b < t1]
    return radial_measure(h, (t0, t1), d, breaks=tuple(sorted(set(inner))),
                          name=f"random_radial(seed={seed},d={d})")


def random_radial_corpus(n: int, d: int, seed: int = 0) -> list:
    return [random_radial(seed + k, d) for k in range(n)]


def off_support_queries(mu: Measure, n: int = 6, seed: int = 0) -> np.ndarray:
    """Points outside the support of a radial measure, in random directions.

    Radii are drawn from the hole, the gaps between shells and the exterior.
    """
    rng = np.random.default_rng(seed)
    t0, t1 = mu.density.support
    grid = np.linspace(0.0, 2.0 * t1, 801)[1:]
    pts = grid[:, None] * np.eye(mu.d)[0]
    off = grid[~mu.support_contains(pts)]
    if len(off) == 0:
        return np.empty((0, mu.d))
    radii = rng.choice(off, size=min(n, len(off)), replace=False)
    dirs = rng.normal(size=(len(radii), mu.d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return radii[:, None] * dirs
