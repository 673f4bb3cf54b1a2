"""Sup-norm searches for Riesz transforms, the density functional theta, and
the radial witness construction.

All searches are heuristic lower bounds on suprema over continua: a coarse
grid followed by rounds of local refinement around the running best. When
the measure is radial or axisymmetric the search runs in the reduced
coordinates (radius, or axial height and distance to the axis), since the
quantities searched are invariant under the symmetry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import csv
import io
import math

import numpy as np

from .errors import NegativityViolation, NoWitness
from .measures import (AnalyticDensity, Ball, MassProfile, Measure, Params, RadialProfile,
                       mass_in_ball, total_mass)
from .quadrature import DEFAULT_SPEC, QuadratureSpec, frame_from_axis
from .parallel import pmap
from .riesz import riesz_vector

__all__ = [
    "SupSearchSpec", "SupResult", "MPReport", "WitnessResult", "sup_norm", "theta_sup",
    "theta", "radial_witness", "mp_report", "total_variation", "SEARCH_SPEC",
]

# quadrature used for grid scans; sup searches only need a few digits
SEARCH_SPEC = QuadratureSpec(rel_tol=1e-5)


@dataclass(frozen=True)
class SupSearchSpec:
    """Grid search settings.

    ``box`` is an explicit ``(lo, hi)`` search box in R^d; when omitted it
    is a cube about the support box centre with half-width ``box_factor``
    times the support's largest half-width. ``spacing`` is the coarse grid
    step in reduced coordinates; when omitted ``coarse_points`` points are
    laid along the longest reduced axis.
    """

    spacing: float | None = None
    box: tuple | None = None
    box_factor: float = 3.0
    coarse_points: int = 13
    refine_rounds: int = 2
    refine_factor: float = 3.0
    support_samples: int = 60
    component: int | None = None
    use_symmetry: bool = True
    theta_radii: int = 8
    max_enlargements: int = 3

    def __post_init__(self):
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be >= 0")
        if not self.refine_factor > 1:
            raise ValueError("refine_factor must exceed 1")
        if self.box is None and not self.box_factor >= 2:
            raise ValueError("search box must contain twice the support box")
        if self.spacing is not None and not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if self.coarse_points < 2 or self.support_samples < 1:
            raise ValueError("need at least 2 coarse points and 1 support sample")

    def replace(self, **changes) -> "SupSearchSpec":
        from dataclasses import replace
        return replace(self, **changes)

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        if self.box is not None:
            out["box"] = [list(map(float, self.box[0])), list(map(float, self.box[1]))]
        return out


@dataclass
class SupResult:
    value: float
    argmax: np.ndarray
    n_evals: int
    exclusion_ok: bool = True
    box: tuple | None = None
    samples: list = field(default_factory=list, repr=False)

    def grid_csv(self) -> str:
        """Scanned points and values as CSV text (for plotting)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if not self.samples:
            return ""
        d = len(self.samples[0][0])
        w.writerow([f"x{j + 1}" for j in range(d)] + ["value"])
        for x, v in self.samples:
            w.writerow([repr(float(c)) for c in x] + [repr(float(v))])
        return buf.getvalue()


@dataclass(frozen=True)
class MPReport:
    sup_support: float
    sup_global: float
    ratio: float
    argmax_support: tuple
    argmax_global: tuple
    theta_sup: float | None = None

    def as_dict(self) -> dict:
        return {
            "sup_support": self.sup_support, "sup_global": self.sup_global,
            "ratio": self.ratio, "argmax_support": list(self.argmax_support),
            "argmax_global": list(self.argmax_global), "theta_sup": self.theta_sup,
        }


# ---------------------------------------------------------------------------
# reduced coordinates


class _Coords:
    """Map between reduced search coordinates and points of R^d."""

    def __init__(self, mu: Measure, spec: SupSearchSpec):
        d = mu.d
        self.d = d
        sym = mu.symmetry if spec.use_symmetry else None
        comp = spec.component
        self.kind = "full"
        if sym is not None and sym.kind == "point":
            # every component attains its sup along its own axis
            self.kind = "radial"
            self.center = np.asarray(sym.center, dtype=float)
            self.axis = np.eye(d)[comp if comp is not None else 0]
        elif sym is not None and sym.kind == "axis":
            a = np.asarray(sym.direction, dtype=float)
            a = a / np.linalg.norm(a)
            if comp is None or abs(abs(a[comp]) - 1.0) < 1e-12:
                self.kind = "meridian"
                self.center = np.asarray(sym.center, dtype=float)
                self.frame = frame_from_axis(a, d)

    def to_points(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if self.kind == "radial":
            return self.center + u[:, :1] * self.axis
        if self.kind == "meridian":
            return self.center + u[:, :1] * self.frame[0] + u[:, 1:2] * self.frame[1]
        return u

    def box(self, lo, hi):
        """Reduced box covering the symmetric hull of the R^d box ``[lo, hi]``."""
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        if self.kind == "full":
            return lo, hi
        corners = np.array([[(lo, hi)[b][j] for j, b in enumerate(bits)]
                            for bits in np.ndindex(*([2] * self.d))]) - self.center
        if self.kind == "radial":
            return np.array([0.0]), np.array([np.linalg.norm(corners, axis=1).max()])
        h = corners @ self.frame[0]
        rad = np.linalg.norm(corners - np.outer(h, self.frame[0]), axis=1)
        return np.array([h.min(), 0.0]), np.array([h.max(), rad.max()])

    def support_box(self, mu: Measure):
        """Reduced box of the support (tight for the reduced kinds)."""
        lo, hi = mu.support_box
        if self.kind == "radial" and mu.is_radial:
            t0, t1 = mu.density.support
            return np.array([t0]), np.array([t1])
        if self.kind == "meridian":
            # axis-symmetric support boxes are products with the axis range
            h = np.array([lo, hi]) @ self.frame[0] - self.center @ self.frame[0]
            lo_h, hi_h = h.min(), h.max()
            # distance to the axis is bounded by the half-width orthogonal to it
            half = 0.5 * (hi - lo)
            a = np.abs(self.frame[0])
            k = int(np.argmax(a))
            if a[k] > 1 - 1e-12:
                perp = float(np.max(np.delete(half, k)))
            else:
                perp = math.sqrt(max(float(np.sum(half ** 2) - (half @ a) ** 2), 0.0))
            return np.array([lo_h, 0.0]), np.array([hi_h, perp])
        return self.box(lo, hi)


def _grid(lo, hi, counts):
    axes = [np.linspace(l, h, n) if h > l else np.array([l]) for l, h, n in zip(lo, hi, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _counts_for(lo, hi, total):
    """Per-axis counts proportional to extent, at least 3, product about ``total``."""
    w = np.maximum(np.asarray(hi) - np.asarray(lo), 0.0)
    k = len(w)
    if np.all(w == 0):
        return [1] * k
    wpos = np.where(w > 0, w, 0.0)
    active = wpos > 0
    n_act = int(active.sum())
    geo = np.exp(np.mean(np.log(wpos[active])))
    base = total ** (1.0 / n_act)
    counts = [max(3, int(round(base * wj / geo))) if wj > 0 else 1 for wj in wpos]
    return counts


class _Evaluator:
    def __init__(self, mu, p, spec, q, coords):
        self.mu, self.p, self.spec, self.q, self.coords = mu, p, spec, q, coords
        self.cache = {}

    def value(self, x):
        key = tuple(np.round(x, 14))
        if key not in self.cache:
            rv = riesz_vector(self.mu, np.asarray(x, dtype=float), self.p, self.q)
            v = rv.vector if self.spec.component is None else rv.vector[self.spec.component]
            self.cache[key] = float(np.linalg.norm(v))
        return self.cache[key]

    def many(self, pts):
        return np.array(pmap(self.value, pts))


def _best(points, values):
    """Argmax with ties broken by lexicographic point order."""
    order = sorted(range(len(values)), key=lambda i: (-values[i], tuple(points[i])))
    i = order[0]
    return float(values[i]), np.asarray(points[i], dtype=float)


def _search_box(mu: Measure, spec: SupSearchSpec):
    if spec.box is not None:
        return np.asarray(spec.box[0], dtype=float), np.asarray(spec.box[1], dtype=float)
    lo, hi = mu.support_box
    c = 0.5 * (lo + hi)
    half = spec.box_factor * float(np.max(0.5 * (hi - lo)))
    return c - half, c + half


def total_variation(mu: Measure, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``|mu|(R^d)``; equals the total mass for nonnegative measures."""
    if not mu.sign_allowed:
        return total_mass(mu, q)
    if mu.is_radial:
        prof = mu.density
        absprof = RadialProfile(lambda t: np.abs(prof(t)), prof.support, prof.smoothness_note,
                                prof.breaks, allow_discontinuity=True)
        return float(MassProfile(absprof, mu.d, q).total)
    base = mu.as_analytic()
    dens = base.density
    from dataclasses import replace
    absd = replace(dens, rho=lambda y: np.abs(dens.rho(y)))
    return total_mass(Measure(absd, mu.d, name=mu.name + "|abs|"), q)


def _refine(ev, coords, best_u, h, rlo, rhi, rounds, factor, keep=None):
    """Local grids around the running best, shrinking by ``factor`` per round."""
    samples = []
    best_v = ev.value(coords.to_points(best_u)[0])
    for _ in range(rounds):
        h = h / factor
        span = 2 * h
        lo = np.maximum(best_u - span, rlo)
        hi = np.minimum(best_u + span, rhi)
        u = _grid(lo, hi, [5] * len(best_u))
        pts = coords.to_points(u)
        if keep is not None:
            mask = keep(pts)
            u, pts = u[mask], pts[mask]
        if len(u) == 0:
            continue
        vals = ev.many(pts)
        samples += list(zip(pts, vals))
        v, i_pt = _best(list(u) + [best_u], list(vals) + [best_v])
        best_v, best_u = v, i_pt
    return best_u, best_v, samples


def _vanishes(mu: Measure) -> bool:
    lo, hi = mu.support_box
    pts = _grid(lo, hi, [9] * mu.d)
    return bool(np.all(mu(pts) == 0))


def sup_norm(mu: Measure, p: Params, spec: SupSearchSpec = SupSearchSpec(), domain: str = "global",
             q: QuadratureSpec = SEARCH_SPEC, seeds=()) -> SupResult:
    """Grid-and-refine lower bound for ``sup |R^s mu|`` (or one component).

    ``domain="support"`` restricts candidates to the support predicate;
    ``domain="global"`` scans the search box and also evaluates ``seeds``
    (typically the support argmax), so the global value never falls below
    the support value. For the global search the decay bound
    ``|R^s mu(x)| <= |mu| / dist(x, supp)**s`` is checked on the box
    boundary; the box is doubled while the bound could still exceed the
    running best.
    """
    if domain not in ("support", "global"):
        raise ValueError("domain must be 'support' or 'global'")
    coords = _Coords(mu, spec)
    ev = _Evaluator(mu, p, spec, q, coords)
    lo, hi = mu.support_box
    if np.all(hi - lo == 0):
        return SupResult(0.0, np.zeros(mu.d), 0)

    if domain == "support":
        rlo, rhi = coords.support_box(mu)
        keep = mu.support_contains
        counts = _counts_for(rlo, rhi, spec.support_samples)
        u = _grid(rlo, rhi, counts)
        pts = coords.to_points(u)
        mask = keep(pts)
        u, pts = u[mask], pts[mask]
        if len(u) == 0:
            if _vanishes(mu):
                return SupResult(0.0, np.zeros(mu.d), 0)
            raise NoWitness("no grid point falls in the support; increase support_samples")
        vals = ev.many(pts)
        samples = list(zip(pts, vals))
        widths = np.where(rhi > rlo, (rhi - rlo) / np.maximum(np.array(counts) - 1, 1), 0.0)
        best_v, best_u = _best(list(u), list(vals))
        best_u, best_v, more = _refine(ev, coords, best_u, widths, rlo, rhi, spec.refine_rounds,
                                       spec.refine_factor, keep)
        samples += more
        return SupResult(best_v, coords.to_points(best_u)[0], len(ev.cache), True,
                         (rlo, rhi), samples)

    box_lo, box_hi = _search_box(mu, spec)
    mass = total_variation(mu)
    seeds = [np.asarray(s, dtype=float) for s in seeds]
    samples = []
    exclusion_ok = False
    for _ in range(spec.max_enlargements + 1):
        rlo, rhi = coords.box(box_lo, box_hi)
        if spec.spacing is not None:
            counts = [max(2, int(math.ceil((b - a) / spec.spacing)) + 1) for a, b in zip(rlo, rhi)]
        else:
            longest = float(np.max(rhi - rlo))
            step = longest / (spec.coarse_points - 1)
            counts = [max(2, int(math.ceil((b - a) / step)) + 1) for a, b in zip(rlo, rhi)]
        u = _grid(rlo, rhi, counts)
        pts = coords.to_points(u)
        vals = ev.many(pts)
        samples += list(zip(pts, vals))
        cand_u = list(u)
        cand_v = list(vals)
        best_v, best_u = _best(cand_u, cand_v)
        widths = (rhi - rlo) / np.maximum(np.array(counts) - 1, 1)
        best_u, best_v, more = _refine(ev, coords, best_u, widths, rlo, rhi, spec.refine_rounds,
                                       spec.refine_factor)
        samples += more
        best_x = coords.to_points(best_u)[0]
        for sx in seeds:
            sv = ev.value(sx)
            samples.append((sx, sv))
            if (sv, tuple(-sx)) > (best_v, tuple(-best_x)):
                best_v, best_x = sv, sx
        gap = float(np.min(np.minimum(lo - box_lo, box_hi - hi)))
        bound = mass / gap ** p.s if gap > 0 else np.inf
        if best_v >= bound:
            exclusion_ok = True
            break
        c = 0.5 * (box_lo + box_hi)
        box_lo, box_hi = c - 2 * (c - box_lo), c + 2 * (box_hi - c)
    return SupResult(float(best_v), np.asarray(best_x), len(ev.cache), exclusion_ok,
                     (box_lo, box_hi), samples)


# ---------------------------------------------------------------------------
# theta


def theta(mu: Measure, x, r: float, s: float, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``mu(B(x, r)) / r**s``."""
    return mass_in_ball(mu, Ball(tuple(np.asarray(x, dtype=float)), float(r)), q) / r ** s


def theta_sup(mu: Measure, p: Params, spec: SupSearchSpec = SupSearchSpec(),
              q: QuadratureSpec = SEARCH_SPEC, return_argmax: bool = False):
    """Grid lower bound for ``sup_{x, r} mu(B(x, r)) / r**s``.

    Centres run over the (reduced) support box, radii over
    ``scale * 2**-k`` for ``k < spec.theta_radii`` with ``scale`` the
    support diameter, so the grid is covariant under rescalings of the
    measure. The best pair is refined like :func:`sup_norm`.
    """
    if mu.sign_allowed and not mu.spot_check_nonnegative():
        raise NegativityViolation("theta is defined for nonnegative measures")
    lo, hi = mu.support_box
    if np.all(hi - lo == 0):
        return (0.0, (np.zeros(mu.d), 0.0)) if return_argmax else 0.0
    coords = _Coords(mu, spec.replace(component=None))
    rlo, rhi = coords.support_box(mu)
    if coords.kind == "radial":
        rlo = np.array([0.0])
    counts = _counts_for(rlo, rhi, max(3 ** len(rlo), spec.support_samples // 4))
    centres = _grid(rlo, rhi, counts)
    scale = float(np.linalg.norm(hi - lo))
    radii = scale * 2.0 ** -np.arange(spec.theta_radii)
    cache = {}

    def val(u, r):
        key = (tuple(np.round(u, 14)), round(float(r), 14))
        if key not in cache:
            cache[key] = theta(mu, coords.to_points(u)[0], r, p.s, q)
        return cache[key]

    cands = [(val(u, r), tuple(u), r) for u in centres for r in radii]
    best = max(cands, key=lambda c: (c[0], tuple(-np.asarray(c[1])), -c[2]))
    best_v, best_u, best_r = best[0], np.asarray(best[1]), best[2]
    h = np.where(rhi > rlo, (rhi - rlo) / np.maximum(np.array(counts) - 1, 1), 0.0)
    ratio = 2.0
    for _ in range(spec.refine_rounds):
        h = h / spec.refine_factor
        ratio = math.sqrt(ratio)
        lo_u = np.maximum(best_u - 2 * h, rlo)
        hi_u = np.minimum(best_u + 2 * h, rhi)
        for u in _grid(lo_u, hi_u, [3] * len(best_u)):
            for r in (best_r / ratio, best_r, best_r * ratio):
                v = val(u, r)
                if v > best_v:
                    best_v, best_u, best_r = v, u, r
    if return_argmax:
        return float(best_v), (coords.to_points(best_u)[0], float(best_r))
    return float(best_v)


# ---------------------------------------------------------------------------
# radial witness


@dataclass(frozen=True)
class WitnessResult:
    branch: str
    r_star: float
    witness: np.ndarray
    bound_holds: bool
    ratio: float
    near_term: float
    tail_term: float
    mass_mismatch: float

    def as_dict(self) -> dict:
        return {
            "branch": self.branch, "r_star": self.r_star, "witness": list(map(float, self.witness)),
            "bound_holds": self.bound_holds, "ratio": self.ratio, "near_term": self.near_term,
            "tail_term": self.tail_term, "mass_mismatch": self.mass_mismatch,
        }


def _bisect(pred, a, b, n=200, xtol=1e-14):
    """Bracket ``[lo, hi]`` around the switch of a monotone ``pred`` on ``[a, b]``.

    ``pred(lo)`` is false and ``pred(hi)`` true (``lo == hi == a`` when
    ``pred(a)`` already holds).
    """
    if pred(a):
        return a, a
    for _ in range(n):
        m = 0.5 * (a + b)
        if pred(m):
            b = m
        else:
            a = m
        if b - a <= xtol * max(1.0, abs(b)):
            break
    return a, b


def radial_witness(mu, p: Params, w, q: QuadratureSpec = DEFAULT_SPEC, c_test: float = 10.0,
                   mass_tol: float = 1e-8) -> WitnessResult:
    """Support point whose transform dominates ``R^s mu(w)`` for radial ``mu``.

    With ``r = |w|`` the near-mass term ``m(r)/r**s`` is compared with the
    tail term ``r int_r^inf t**-(s+1) dm(t)``. If the near term dominates,
    ``r_star < r`` is the outer edge of the support inside ``B(0, r)``;
    otherwise ``r_star > r`` is the inner edge outside it. Both are found by
    bisection on the monotone mass profile so that
    ``|m(r_star) - m(r)| <= mass_tol * total``. The witness is ``r_star``
    times the direction of ``w``; the check is
    ``|R^s mu(w)| <= c_test |R^s mu(witness)|``.
    """
    if isinstance(mu, RadialProfile):
        mu = Measure(mu, p.d)
    if not mu.is_radial:
        raise TypeError("radial_witness needs a radial measure")
    if mu.sign_allowed and not mu.spot_check_nonnegative():
        raise NegativityViolation("radial_witness needs a nonnegative profile")
    w = np.asarray(w, dtype=float)
    if w.shape != (mu.d,):
        raise ValueError("query point has the wrong dimension")
    if bool(mu.support_contains(w[None])[0]):
        raise ValueError("query point lies on the support")
    prof = mu.density
    d, s = p.d, p.s
    # the mass match is tested at 1e-8 of the total, so the profile itself
    # must be integrated well below that
    mp = MassProfile(prof, d, q.replace(rel_tol=min(q.rel_tol, 1e-12), abs_tol=1e-300))
    total = mp.total
    r = float(np.linalg.norm(w))
    m_r = float(mp(r))
    near = m_r / r ** s if r > 0 else 0.0
    t0, t1 = prof.support
    tail = 0.0
    if r < t1:
        from .quadrature import integrate_1d_adaptive
        a = max(r, t0)
        tail = r * integrate_1d_adaptive(lambda t: mp.derivative(t) * t ** (-(s + 1.0)), a, t1, q,
                                         points=[b for b in prof.breaks if a < b < t1]).value
    tol = mass_tol * total
    # aim at half the tolerance so quadrature noise cannot tip the final check
    if near >= tail and m_r > 0:
        branch = "inner"
        r_star = _bisect(lambda t: mp(t) >= m_r - 0.5 * tol, t0, r)[1]
    else:
        branch = "outer"
        r_star = _bisect(lambda t: mp(t) > m_r + 0.5 * tol, r, t1)[0]
    mismatch = abs(float(mp(r_star)) - m_r)
    on_support = t0 <= r_star <= t1 and 0 < r_star
    # on the support: positive density there, or mass accruing right next to it
    eta = 1e-6 * (t1 - t0)
    if branch == "inner":
        near_mass = float(mp(r_star)) - float(mp(max(r_star - eta, t0)))
    else:
        near_mass = float(mp(min(r_star + eta, t1))) - float(mp(r_star))
    grows = float(prof(r_star)) > 0 or near_mass > 0
    if not (on_support and grows) or mismatch > tol:
        raise NoWitness(f"could not place r_star on the support (r_star={r_star}, mismatch={mismatch})")
    direction = w / r if r > 0 else np.eye(d)[0]
    witness = r_star * direction
    val_w = np.linalg.norm(riesz_vector(mu, w, p, q).vector)
    val_s = np.linalg.norm(riesz_vector(mu, witness, p, q).vector)
    ratio = float(val_w / val_s) if val_s > 0 else (0.0 if val_w == 0 else math.inf)
    return WitnessResult(branch, float(r_star), witness, bool(val_w <= c_test * val_s), ratio,
                         float(near), float(tail), float(mismatch))


def mp_report(mu: Measure, p: Params, spec: SupSearchSpec = SupSearchSpec(),
              q: QuadratureSpec = SEARCH_SPEC, with_theta: bool = False) -> MPReport:
    """Support and global sups (global seeded with the support argmax)."""
    sup_s = sup_norm(mu, p, spec, "support", q)
    sup_g = sup_norm(mu, p, spec, "global", q, seeds=[sup_s.argmax])
    ratio = sup_g.value / sup_s.value if sup_s.value > q.abs_tol else float("nan")
    th = theta_sup(mu, p, spec, q) if with_theta else None
    return MPReport(sup_s.value, sup_g.value, ratio, tuple(map(float, sup_s.argmax)),
                    tuple(map(float, sup_g.argmax)), th)
