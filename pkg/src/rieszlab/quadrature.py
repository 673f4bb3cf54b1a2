"""Deterministic quadrature engine.

Three layers live here:

* fixed rules (Gauss-Kronrod, Gauss-Legendre, Gauss-Jacobi, product
  rules on the unit sphere),
* a batched adaptive cubature driver for boxes in one or more dimensions,
* :func:`integrate_polar_singular`, which integrates a density against a
  weakly singular radial kernel by working in polar coordinates about the
  singular point.

Every routine is a pure function of its inputs; no global state is touched
and results are bit-for-bit reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import special

from .errors import InvalidPower, ToleranceNotMet, UnsupportedDimension

__all__ = [
    "QuadratureSpec",
    "QuadResult",
    "SphereRule",
    "sphere_area",
    "sphere_rule",
    "gauss_legendre",
    "gauss_jacobi_01",
    "integrate_1d_adaptive",
    "integrate_1d_graded",
    "integrate_box_adaptive",
    "integrate_polar_singular",
    "frame_from_axis",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and rule sizes shared by every integral in the package.

    ``ray_order`` is the Gauss-Legendre order used on each smooth piece of
    a ray in the polar integrator; ``angular_rule`` ("gk7" or "gk15") is
    the tensor Kronrod rule for two-angle direction integrals.

    ``cancellation_floor``: integrands that report their absolute
    integral ``L1`` are converged once the error is below
    ``rel_tol * max(|value|, cancellation_floor * L1)``, so results that
    cancel to nearly zero do not demand unattainable relative accuracy.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-13
    max_subdivisions: int = 4000
    sphere_order: int = 16
    split_radius_factor: float = 0.5
    ray_order: int = 16
    angular_rule: str = "gk15"
    cancellation_floor: float = 1e-3

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.sphere_order < 2:
            raise ValueError("sphere_order must be >= 2")
        if not self.split_radius_factor > 0:
            raise ValueError("split_radius_factor must be positive")
        if self.ray_order < 2:
            raise ValueError("ray_order must be >= 2")
        if self.angular_rule not in ("gk7", "gk15"):
            raise ValueError("angular_rule must be 'gk7' or 'gk15'")
        if not 0 <= self.cancellation_floor <= 1:
            raise ValueError("cancellation_floor must lie in [0, 1]")

    def replace(self, **changes) -> "QuadratureSpec":
        fields = dict(self.__dict__)
        fields.update(changes)
        return QuadratureSpec(**fields)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray | float
    error: float
    n_regions: int = 1

    def __iter__(self):
        yield self.value
        yield self.error


# ---------------------------------------------------------------------------
# fixed rules

# QUADPACK 7/15 point Gauss-Kronrod pair on [-1, 1].
_XGK15 = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK15 = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG7 = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# 3/7 point Gauss-Kronrod pair, used for tensor rules in 3+ dimensions.
_XGK7 = np.array([0.960491268708020283423507092629080,
                  0.774596669241483377035853079956480,
                  0.434243749346802558002071502844628,
                  0.0])
_WGK7 = np.array([0.104656226026467265193823857192073,
                  0.268488089868333440728569280666710,
                  0.401397414775962222905051818618432,
                  0.450916538658474142345110087045571])
_WG3 = np.array([0.555555555555555555555555555555556,
                 0.888888888888888888888888888888889])


def _mirror(x_half, w_half):
    x = np.concatenate([-x_half[:-1], x_half[::-1]])
    w = np.concatenate([w_half[:-1], w_half[::-1]])
    return x, w


def _kronrod_pair(name):
    if name == "gk15":
        x, wk = _mirror(_XGK15, _WGK15)
        gauss_half = np.zeros(8)
        gauss_half[1::2] = _WG7
    elif name == "gk7":
        x, wk = _mirror(_XGK7, _WGK7)
        gauss_half = np.zeros(4)
        gauss_half[1::2] = _WG3
    else:
        raise ValueError(f"unknown rule {name!r}")
    _, wg = _mirror(np.zeros_like(gauss_half), gauss_half)
    return x, wk, wg


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def gauss_jacobi_01(n: int, beta: float):
    """Nodes/weights for ``int_0^1 u**beta f(u) du``."""
    x, w = special.roots_jacobi(n, 0.0, beta)
    u = 0.5 * (x + 1.0)
    w = w * 0.5 ** (beta + 1.0)
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


def sphere_area(k: int) -> float:
    """Surface measure of the unit sphere S^k in R^(k+1)."""
    if k < 0:
        raise ValueError("sphere dimension must be >= 0")
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


@dataclass(frozen=True)
class SphereRule:
    d: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.weights)

    def integrate(self, f) -> np.ndarray:
        """Apply the rule to ``f(nodes) -> (n, ...)``."""
        vals = np.asarray(f(self.nodes))
        return np.tensordot(self.weights, vals, axes=(0, 0))


@lru_cache(maxsize=64)
def sphere_rule(d: int, order: int) -> SphereRule:
    """Product rule on S^(d-1).

    Polar angles use Gauss-Jacobi rules in ``cos(theta)`` that absorb the
    ``sin**k`` Jacobian, the azimuth uses ``2*order`` equispaced points.
    The rule is exact for spherical polynomials of degree ``2*order - 1``.
    """
    if not 2 <= d <= 6:
        raise UnsupportedDimension(f"sphere rules are provided for 2 <= d <= 6, got {d}")
    if order < 2:
        raise ValueError("order must be >= 2")
    n_phi = 2 * order
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    w_phi = np.full(n_phi, 2.0 * np.pi / n_phi)
    # coordinates built from the last two axes backwards
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    wts = w_phi
    for k in range(1, d - 1):
        # sin(theta)**k dtheta = (1 - c^2)**((k-1)/2) dc
        a = (k - 1) / 2.0
        c, wc = special.roots_jacobi(order, a, a)
        sn = np.sqrt(1.0 - c * c)
        new_pts = np.concatenate(
            [np.repeat(c, len(wts))[:, None],
             (sn[:, None, None] * pts[None, :, :]).reshape(-1, pts.shape[1])],
            axis=1,
        )
        wts = (wc[:, None] * wts[None, :]).ravel()
        pts = new_pts
    pts.setflags(write=False)
    wts.setflags(write=False)
    return SphereRule(d=d, nodes=pts, weights=wts)


# ---------------------------------------------------------------------------
# adaptive cubature


@lru_cache(maxsize=None)
def _tensor_rule(rule: str, k: int):
    x, wk, wg = _kronrod_pair(rule)
    n = len(x)
    grids = np.meshgrid(*([x] * k), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    wk_t = wk
    for _ in range(k - 1):
        wk_t = np.multiply.outer(wk_t, wk)
    wk_t = wk_t.reshape(-1)
    # weights with the embedded Gauss rule along one axis only
    wg_dims = []
    for j in range(k):
        w = np.ones(1)
        for i in range(k):
            w = np.multiply.outer(w, wg if i == j else wk)
        wg_dims.append(w.reshape(-1))
    return nodes, wk_t, np.array(wg_dims), n


def _norm(v):
    v = np.asarray(v)
    if v.ndim == 0:
        return abs(float(v))
    return float(np.sqrt(np.sum(np.abs(v) ** 2)))


def _eval_regions(f, lo, hi, rule, control):
    """Apply the tensor rule to each region. Returns (values, err, err_dims)."""
    m, k = lo.shape
    nodes, wk, wg_dims, _ = _tensor_rule(rule, k)
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = center[:, None, :] + half[:, None, :] * nodes[None, :, :]
    vals = np.asarray(f(pts.reshape(-1, k)), dtype=float)
    out_shape = vals.shape[1:]
    vals = vals.reshape((m, len(wk)) + out_shape)
    jac = np.prod(half, axis=1)
    est = np.einsum("mn...,n->m...", vals, wk) * jac.reshape((m,) + (1,) * len(out_shape))
    ctrl = vals if control is None else vals[(slice(None), slice(None)) + tuple(control)]
    cjac = jac.reshape((m,) + (1,) * (ctrl.ndim - 2))
    kron = cjac * np.einsum("mn...,n->m...", ctrl, wk)
    # QUADPACK-style scaling of |K - G| by the integral of |f - mean|
    mean = np.einsum("mn...,n->m...", ctrl, wk) / np.sum(wk)
    resasc = cjac * np.einsum("mn...,n->m...", np.abs(ctrl - mean[:, None, ...]), wk)
    floor = 50.0 * np.finfo(float).eps * np.abs(kron)
    err_dims = np.empty((m, k))
    for j in range(k):
        diff = np.abs(kron - cjac * np.einsum("mn...,n->m...", ctrl, wg_dims[j]))
        safe = np.where(resasc > 0, resasc, 1.0)
        scaled = np.where(resasc > 0, resasc * np.minimum(1.0, (200.0 * diff / safe) ** 1.5), diff)
        scaled = np.maximum(scaled, floor)
        err_dims[:, j] = np.sqrt(np.sum(scaled.reshape(m, -1) ** 2, axis=1))
    return est, np.sum(err_dims, axis=1), err_dims


def integrate_box_adaptive(f, lo, hi, q: QuadratureSpec = DEFAULT_SPEC, *, rule=None,
                           initial_splits=None, control=None, l1_index=None, raise_on_fail=True):
    """Adaptive cubature of ``f`` over the box ``[lo, hi]``.

    ``f`` maps points of shape ``(n, k)`` to values of shape ``(n, ...)``.
    Tensor Gauss-Kronrod rules are used (15 points per axis up to k = 2,
    7 points per axis beyond). Regions are bisected along the axis with the
    largest embedded-rule discrepancy; all regions that dominate the global
    error are split in one batch so that ``f`` sees large vectorized calls.

    ``initial_splits`` optionally lists, per axis, interior points at which
    the box is cut before the first pass (known kinks). ``control``
    selects the slice of the output used for error control (for integrands
    that return auxiliary columns). ``l1_index`` optionally points at an
    output holding the integral of ``|f|``, which enables the
    cancellation floor of :class:`QuadratureSpec`.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    k = lo.size
    if rule is None:
        rule = "gk15" if k <= 2 else "gk7"
    # initial regions
    edges = []
    for j in range(k):
        pts = [lo[j], hi[j]]
        if initial_splits is not None and initial_splits[j] is not None:
            pts += [p for p in np.atleast_1d(initial_splits[j]) if lo[j] < p < hi[j]]
        edges.append(np.unique(np.array(pts, dtype=float)))
    lows, highs = [], []
    for idx in np.ndindex(*[len(e) - 1 for e in edges]):
        lows.append([edges[j][i] for j, i in enumerate(idx)])
        highs.append([edges[j][i + 1] for j, i in enumerate(idx)])
    reg_lo = np.array(lows)
    reg_hi = np.array(highs)
    width0 = np.where(hi > lo, hi - lo, 1.0)

    est, err, err_dims = _eval_regions(f, reg_lo, reg_hi, rule, control)
    n_evals_regions = len(reg_lo)
    while True:
        total = est.sum(axis=0)
        ctrl_total = total if control is None else total[control]
        size = _norm(ctrl_total)
        if l1_index is not None:
            size = max(size, q.cancellation_floor * abs(float(total[l1_index])))
        tol = max(q.abs_tol, q.rel_tol * size)
        total_err = float(err.sum())
        if total_err <= tol:
            return QuadResult(total, total_err, len(reg_lo))
        # candidates that can still be split
        split_dim = np.argmax(err_dims, axis=1)
        widths = (reg_hi - reg_lo)[np.arange(len(reg_lo)), split_dim]
        splittable = widths > 1e-13 * width0[split_dim]
        order = np.argsort(-err, kind="stable")
        order = order[splittable[order]]
        frozen_err = float(err[~splittable].sum())
        if len(order) == 0 or frozen_err > 0.5 * tol or n_evals_regions >= q.max_subdivisions:
            msg = (f"adaptive cubature did not reach tolerance {tol:.3g}: "
                   f"error estimate {total_err:.3g} after {n_evals_regions} regions")
            if raise_on_fail:
                raise ToleranceNotMet(msg, value=total, error=total_err)
            return QuadResult(total, total_err, len(reg_lo))
        # split the smallest prefix whose removal brings the rest under tol/2
        remaining = total_err - np.cumsum(err[order])
        n_split = int(np.searchsorted(-remaining, -0.5 * tol, side="right")) + 1
        n_split = max(1, min(n_split, len(order), len(reg_lo)))
        n_split = min(n_split, max(1, q.max_subdivisions - n_evals_regions))
        chosen = order[:n_split]
        keep = np.ones(len(reg_lo), dtype=bool)
        keep[chosen] = False
        dims = split_dim[chosen]
        mid = 0.5 * (reg_lo[chosen, dims] + reg_hi[chosen, dims])
        lo_a, hi_a = reg_lo[chosen].copy(), reg_hi[chosen].copy()
        hi_a[np.arange(n_split), dims] = mid
        lo_b, hi_b = reg_lo[chosen].copy(), reg_hi[chosen].copy()
        lo_b[np.arange(n_split), dims] = mid
        new_lo = np.concatenate([lo_a, lo_b])
        new_hi = np.concatenate([hi_a, hi_b])
        e2, r2, d2 = _eval_regions(f, new_lo, new_hi, rule, control)
        n_evals_regions += len(new_lo)
        reg_lo = np.concatenate([reg_lo[keep], new_lo])
        reg_hi = np.concatenate([reg_hi[keep], new_hi])
        est = np.concatenate([est[keep], e2])
        err = np.concatenate([err[keep], r2])
        err_dims = np.concatenate([err_dims[keep], d2])


def integrate_1d_adaptive(f, a: float, b: float, q: QuadratureSpec = DEFAULT_SPEC, *,
                          points=None, control=None, raise_on_fail=True) -> QuadResult:
    """Adaptive Gauss-Kronrod (7/15) integration of ``f`` over ``[a, b]``.

    ``f`` is called with a 1-D array of abscissae and must return an array
    whose first axis matches. Vector-valued integrands are allowed.
    ``points`` are interior breakpoints (kinks, integrable singularities);
    the rule never evaluates ``f`` at interval endpoints.

    >>> integrate_1d_adaptive(lambda t: t**2, 0.0, 1.0).value
    0.3333333333333333
    """
    if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
        raise ValueError("need finite a < b")
    res = integrate_box_adaptive(
        lambda x: f(x[:, 0]), [a], [b], q, rule="gk15",
        initial_splits=[points] if points is not None else None,
        control=control, raise_on_fail=raise_on_fail,
    )
    val = res.value
    if np.ndim(val) == 0:
        val = float(val)
    return QuadResult(val, res.error, res.n_regions)


def integrate_1d_graded(f, a: float, b: float, q: QuadratureSpec = DEFAULT_SPEC, *,
                        singular_end: str = "a", exponent: float = 0.0, points=None) -> QuadResult:
    """Integrate ``f`` on ``[a, b]`` with an algebraic endpoint singularity.

    For ``f ~ |t - end|**exponent`` (``exponent > -1``) the substitution
    ``t = end +/- (b - a) u**m`` with ``m = ceil(2 / (1 + exponent))``
    (at least 2, at most 12) turns the integrand into ``u**(m(1+e)-1)``,
    which adaptive Gauss-Kronrod handles without stalling.
    """
    if not exponent > -1:
        raise ValueError("endpoint exponent must exceed -1")
    if not a < b:
        raise ValueError("need a < b")
    m = int(min(12, max(2, math.ceil(2.0 / (1.0 + exponent)))))
    length = b - a
    if singular_end == "a":
        def g(u):
            return f(a + length * u ** m) * (length * m * u ** (m - 1))

        pts = None if points is None else [((p - a) / length) ** (1.0 / m) for p in points if a < p < b]
    elif singular_end == "b":
        def g(u):
            return f(b - length * u ** m) * (length * m * u ** (m - 1))

        pts = None if points is None else [((b - p) / length) ** (1.0 / m) for p in points if a < p < b]
    else:
        raise ValueError("singular_end must be 'a' or 'b'")
    return integrate_1d_adaptive(g, 0.0, 1.0, q, points=pts)


# ---------------------------------------------------------------------------
# polar integration about a singular point


def frame_from_axis(axis, d: int) -> np.ndarray:
    """Orthonormal frame (rows) whose first row is ``axis``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    m = np.eye(d)
    # Householder reflection sending e1 to axis
    v = m[0] - axis
    nv = np.linalg.norm(v)
    if nv < 1e-14:
        return m
    v = v / nv
    h = m - 2.0 * np.outer(v, v)
    return h  # rows: h[0] == axis


def _angles_to_dirs(angles, d, mode):
    """Map angle tuples to unit vectors in frame coordinates plus Jacobian.

    ``mode="axis"``: one polar angle, invariant about frame row 0.
    ``mode="meridian"``: polar angle about row 0 and an azimuth in [0, pi]
    measured from row 1; the integrand is assumed invariant under the
    rotations fixing rows 0 and 1, whose orbits contribute
    ``omega_{d-3} sin(psi)**(d-3)``.
    ``mode="full"``: hyperspherical angles.
    """
    if mode == "axis":
        th = angles[:, 0]
        v = np.zeros((len(th), d))
        v[:, 0] = np.cos(th)
        v[:, 1] = np.sin(th)
        jac = sphere_area(d - 2) * np.sin(th) ** (d - 2) if d > 2 else np.full(len(th), 2.0)
        return v, jac
    if mode == "meridian":
        th, psi = angles[:, 0], angles[:, 1]
        v = np.zeros((len(th), d))
        st = np.sin(th)
        v[:, 0] = np.cos(th)
        v[:, 1] = st * np.cos(psi)
        v[:, 2] = st * np.sin(psi)
        jac = sphere_area(d - 3) * st ** (d - 2) * np.sin(psi) ** (d - 3)
        return v, jac
    n = angles.shape[0]
    v = np.empty((n, d))
    jac = np.ones(n)
    sprod = np.ones(n)
    for j in range(d - 2):
        th = angles[:, j]
        v[:, j] = sprod * np.cos(th)
        s = np.sin(th)
        jac = jac * s ** (d - 2 - j)
        sprod = sprod * s
    phi = angles[:, d - 2]
    v[:, d - 2] = sprod * np.cos(phi)
    v[:, d - 1] = sprod * np.sin(phi)
    return v, jac


def ray_box_clip(x, dirs, lo, hi):
    """Parameter interval [t0, t1] (t >= 0) where ``x + t*dir`` lies in the box."""
    x = np.asarray(x, dtype=float)
    t0 = np.zeros(len(dirs))
    t1 = np.full(len(dirs), np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        for j in range(len(x)):
            w = dirs[:, j]
            a = (lo[j] - x[j]) / w
            b = (hi[j] - x[j]) / w
            tmin = np.minimum(a, b)
            tmax = np.maximum(a, b)
            zero = w == 0
            inside = (lo[j] <= x[j]) & (x[j] <= hi[j])
            tmin = np.where(zero, -np.inf if inside else np.inf, tmin)
            tmax = np.where(zero, np.inf if inside else -np.inf, tmax)
            t0 = np.maximum(t0, tmin)
            t1 = np.minimum(t1, tmax)
    return t0, t1


_N_GRADED = 6  # geometric levels r0 * 4**-k used near the singular point


def _ray_integrals(rho, x, dirs, t_lo, t_hi, beta, breaks, scale, n, kernel, low_order):
    """Integrate ``rho(x + t*dir) * t**beta * k(t)`` along each ray.

    Returns an array (m, 3): the n-point result, a lower-order result used
    only for an error estimate, and the n-point integral of the absolute
    value. Empty rays and zero-length pieces are
    dropped before any density evaluation.
    """
    m = len(dirs)
    out = np.zeros((m, 3))
    live = t_hi > t_lo
    if not np.any(live):
        return out
    dirs = dirs[live]
    t_lo = t_lo[live]
    t_hi = t_hi[live]
    ml = len(dirs)
    graded = scale * 4.0 ** -np.arange(_N_GRADED)
    cands = [t_lo[:, None], t_hi[:, None], np.broadcast_to(graded, (ml, _N_GRADED))]
    if breaks is not None:
        cands.append(breaks[live])
    bp = np.concatenate(cands, axis=1)
    bp = np.where(np.isnan(bp), t_hi[:, None], bp)
    bp = np.clip(bp, t_lo[:, None], t_hi[:, None])
    bp.sort(axis=1)
    a = bp[:, :-1]
    b = bp[:, 1:]
    # pack nonempty pieces to the left and drop all-empty columns
    empty = ~(b > a)
    perm = np.argsort(empty, axis=1, kind="stable")
    a = np.take_along_axis(a, perm, axis=1)
    b = np.take_along_axis(b, perm, axis=1)
    n_cols = int(np.max(np.sum(~empty, axis=1)))
    a = a[:, :n_cols]
    b = b[:, :n_cols]
    b = np.where(b > a, b, a)
    starts_at_zero = (t_lo == 0.0) & (a[:, 0] == 0.0)
    xdim = len(x)
    for col, order in enumerate((n, low_order)):
        xg, wg = gauss_legendre(order)
        tt = 0.5 * (a + b)[..., None] + 0.5 * (b - a)[..., None] * xg
        ww = 0.5 * (b - a)[..., None] * wg
        # first piece of rays starting at the singular point: Gauss-Jacobi
        use_jacobi = bool(np.any(starts_at_zero)) and beta != 0.0
        if use_jacobi:
            uj, wj = gauss_jacobi_01(order, beta)
            b0 = b[:, 0]
            sel = starts_at_zero[:, None]
            tt[:, 0, :] = np.where(sel, b0[:, None] * uj, tt[:, 0, :])
            jac_first = np.where(sel, b0[:, None] ** (beta + 1.0) * wj, ww[:, 0, :])
        pts = x[None, None, None, :] + tt[..., None] * dirs[:, None, None, :]
        vals = rho(pts.reshape(-1, xdim)).reshape(tt.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            tpos = np.where(tt > 0, tt, 1.0)
            logk = -np.log(tpos) if kernel == "log" else 1.0
            integrand = vals * tpos ** beta * logk
            if use_jacobi:
                # the Jacobi weight already carries t**beta
                lk0 = logk[:, 0, :] if kernel == "log" else 1.0
                integrand[:, 0, :] = np.where(starts_at_zero[:, None], vals[:, 0, :] * lk0,
                                              integrand[:, 0, :])
                ww = ww.copy()
                ww[:, 0, :] = jac_first
        integrand = np.where(np.isfinite(integrand), integrand, 0.0)
        out[live, col] = np.sum(integrand * ww, axis=(1, 2))
        if col == 0:
            out[live, 2] = np.sum(np.abs(integrand) * ww, axis=(1, 2))
    return out


def integrate_polar_singular(rho, x, power: float, d: int, far_domain, q: QuadratureSpec = DEFAULT_SPEC,
                             *, kernel: str = "scalar", frame=None, mode: str = "full",
                             ray_breaks=None, critical_angles=None, inner_radius: float = 0.0,
                             outer_radius: float = np.inf, scale: float | None = None) -> QuadResult:
    """Integrate ``rho(y) * K(y - x)`` over R^d in polar coordinates about ``x``.

    Kernels (``kernel``):

    ``"scalar"``  ``|y - x|**-power``
    ``"vector"``  ``(y - x) / |y - x|**(power + 1)`` (magnitude ``|y-x|**-power``)
    ``"log"``     ``-log|y - x|`` (``power`` ignored)

    The radial factor ``t**(d-1-power)`` is absorbed into a Gauss-Jacobi
    rule on the first piece of every ray, so no evaluation at ``y = x``
    takes place; the remaining ray is cut at ``split = scale *
    split_radius_factor`` and a geometric ladder below it, at the density's
    kinks (``ray_breaks(x, dirs) -> (m, K)`` with NaN padding) and at the
    boundary of ``far_domain`` (a ``(lo, hi)`` box containing the support).
    The angular integral is adaptive.

    ``frame`` is an orthonormal basis (rows). ``mode`` declares the
    symmetry of the integrand about ``x``: ``"axis"`` (invariant under
    rotations fixing ``frame[0]``: one polar angle), ``"meridian"``
    (invariant under rotations fixing ``frame[0]`` and ``frame[1]``: two
    angles in any dimension) or ``"full"``. Vector results are assembled
    in the invariant directions only.

    ``inner_radius``/``outer_radius`` restrict to ``inner < |y-x| < outer``.
    """
    if kernel not in ("scalar", "vector", "log"):
        raise ValueError(f"unknown kernel {kernel!r}")
    if mode not in ("full", "axis", "meridian"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "meridian" and d < 3:
        mode = "full"
    if kernel != "log" and not power < d:
        raise InvalidPower(f"kernel power {power} is not integrable in dimension {d}")
    x = np.asarray(x, dtype=float)
    lo, hi = (np.asarray(v, dtype=float) for v in far_domain)
    beta = float(d - 1) if kernel == "log" else float(d - 1 - power)
    if scale is None:
        scale = float(np.max(hi - lo)) if np.all(np.isfinite(hi - lo)) else 1.0
    split = q.split_radius_factor * scale
    frame = np.eye(d) if frame is None else np.asarray(frame, dtype=float)
    n = q.ray_order
    low = max(2, n // 2)
    vector = kernel == "vector"
    n_inv = {"axis": 1, "meridian": 2, "full": d}[mode]
    l1 = (2, 0) if vector else (2,)

    def integrand(angles):
        v, jac = _angles_to_dirs(angles, d, mode)
        dirs = v @ frame
        t0, t1 = ray_box_clip(x, dirs, lo, hi)
        t0 = np.maximum(t0, inner_radius)
        t1 = np.minimum(t1, outer_radius)
        t1 = np.where((t1 > t0) & np.isfinite(t1), t1, t0)
        brk = ray_breaks(x, dirs) if ray_breaks is not None else None
        ri = _ray_integrals(rho, x, dirs, t0, t1, beta, brk, split, n, kernel, low)
        ri = ri * jac[:, None]
        if not vector:
            return ri
        # (m, 3, n_inv): both orders along the invariant frame rows, then |.|
        vec = ri[:, :, None] * v[:, None, :n_inv]
        vec[:, 2, :] = ri[:, 2:3]
        return vec

    if mode == "axis":
        splits = [np.linspace(0.0, np.pi, 5)[1:-1]]
        if critical_angles is not None:
            splits = [np.concatenate([splits[0], np.atleast_1d(critical_angles)])]
        res = integrate_box_adaptive(integrand, [0.0], [np.pi], q, rule="gk15",
                                     initial_splits=splits, control=(0,), l1_index=l1)
    elif mode == "meridian":
        half = [np.array([np.pi / 2])] * 2
        res = integrate_box_adaptive(integrand, [0.0, 0.0], [np.pi, np.pi], q,
                                     rule=q.angular_rule, initial_splits=half, control=(0,),
                                     l1_index=l1)
    else:
        k = d - 1
        lo_a = np.zeros(k)
        hi_a = np.full(k, np.pi)
        hi_a[-1] = 2.0 * np.pi
        splits = [np.array([np.pi / 2])] * (k - 1) + [np.array([np.pi / 2, np.pi, 1.5 * np.pi])]
        res = integrate_box_adaptive(integrand, lo_a, hi_a, q, rule=q.angular_rule if k == 2 else None,
                                     initial_splits=splits, control=(0,), l1_index=l1)
    val = np.asarray(res.value)
    main = val[0]
    ray_err = _norm(val[0] - val[1]) if np.all(np.isfinite(val)) else np.inf
    if vector:
        main = main @ frame[:n_inv]
    if np.ndim(main) == 0:
        main = float(main)
    return QuadResult(main, res.error + ray_err, res.n_regions)
