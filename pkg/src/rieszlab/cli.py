"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical failure (tolerance not
met, routes disagree), 3 regime violation, 4 a sweep verdict failed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .constructions import (Counterexample5Spec, SlabMeasureSpec, counterexample_report,
                            nu_measure, prop21_measure, remark_report)
from .corpus import BUILTINS, builtin, random_radial
from .errors import (InvalidPower, NoWitness, RegimeViolation, RieszLabError, RouteDisagreement,
                     ToleranceNotMet, UnsupportedBall, UnsupportedDimension)
from .flux import flux_report
from .maxprinciple import SupSearchSpec, mp_report, sup_norm, theta_sup
from .measures import Ball, Measure, Params, radial_measure, read_lattice
from .quadrature import QuadratureSpec
from .reports import (ConfigError, ExperimentReport, load_config, merge_config, sweep_document,
                      write_atomic)
from .riesz import riesz_potential, riesz_radial_component, riesz_truncated, riesz_vector

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_REGIME, EXIT_VERDICT = 0, 1, 2, 3, 4

DEFAULTS = {
    "method": "vector", "tol": None, "abs_tol": 1e-13, "seed": 0, "coarse_points": 13,
    "refine_rounds": 2, "refine_factor": 3.0, "support_samples": 60, "box_factor": 3.0,
    "theta": False, "by_parts": False, "M": 10.0, "delta_min": 0.005, "n_test": 20,
    "n_support": 21,
}
SEARCH_TOL = 1e-5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument parsing


def _floats(text: str, what: str) -> list:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"malformed {what}: {text!r}") from None
    if not all(np.isfinite(vals)):
        raise UsageError(f"{what} must be finite: {text!r}")
    return vals


def _delta_list(values):
    out = []
    for v in values:
        out += _floats(v, "delta") if isinstance(v, str) else [float(v)]
    return out


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (flags override it)")
    common.add_argument("--out", help="write the report here (atomically) instead of stdout")
    common.add_argument("--d", type=int)
    common.add_argument("--s", type=float)
    common.add_argument("--tol", type=float, help="relative quadrature tolerance")
    common.add_argument("--abs-tol", type=float, dest="abs_tol")
    common.add_argument("--seed", type=int)
    measure = _Parser(add_help=False)
    measure.add_argument("--measure", help="builtin:NAME, builtin:random:SEED or a lattice file")
    measure.add_argument("--delta", action="append",
                         help="delta for builtin:prop21 / builtin:counterexample5")
    grid = _Parser(add_help=False)
    grid.add_argument("--coarse-points", type=int, dest="coarse_points")
    grid.add_argument("--refine-rounds", type=int, dest="refine_rounds")
    grid.add_argument("--refine-factor", type=float, dest="refine_factor")
    grid.add_argument("--support-samples", type=int, dest="support_samples")
    grid.add_argument("--box-factor", type=float, dest="box_factor")

    parser = _Parser(prog="rieszlab", description="Numerical experiments on Riesz transforms of measures.")
    parser.add_argument("--version", action="version", version=f"rieszlab {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("eval", parents=[common, measure], help="evaluate the transform at points")
    p.add_argument("--point", action="append", help="x1,...,xd (repeatable)")
    p.add_argument("--method", choices=["vector", "radial", "potential", "truncated"])
    p.add_argument("--eps", type=float, help="truncation radius for --method truncated")

    p = sub.add_parser("flux", parents=[common, measure], help="sphere flux three ways")
    p.add_argument("--ball", help="c1,...,cd,radius")
    p.add_argument("--by-parts", action="store_const", const=True, dest="by_parts")

    p = sub.add_parser("maxprin", parents=[common, measure, grid], help="support vs global sup")
    p.add_argument("--component", type=int)
    p.add_argument("--theta", action="store_const", const=True)
    p.add_argument("--csv", help="dump the scanned global grid as CSV")

    p = sub.add_parser("prop21", parents=[common, grid], help="component sup ratio for the slab family")
    p.add_argument("--delta", action="append")
    p.add_argument("--M", type=float, dest="M")
    p.add_argument("--delta-min", type=float, dest="delta_min")

    p = sub.add_parser("counterexample", parents=[common], help="signed radial counterexample in R^5")
    p.add_argument("--delta", action="append")
    p.add_argument("--n-test", type=int, dest="n_test")
    p.add_argument("--n-support", type=int, dest="n_support")

    p = sub.add_parser("remark", parents=[common], help="potential of the derived measure eta")
    p.add_argument("--delta", action="append")
    p.add_argument("--point", action="append", help="x1,...,x5 (repeatable); default 10 test points")
    return parser


def _config(args) -> dict:
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    file_cfg = load_config(args.config) if args.config else {}
    cfg = dict(DEFAULTS)
    cfg.update(merge_config(file_cfg, flags))
    if cfg.get("delta") is not None:
        cfg["delta"] = _delta_list(cfg["delta"])
    return cfg


def _qspec(cfg, default_rel=1e-8) -> QuadratureSpec:
    """Quadrature settings; ``--tol`` overrides the command's default."""
    rel = cfg["tol"] if cfg.get("tol") is not None else default_rel
    try:
        return QuadratureSpec(rel_tol=float(rel), abs_tol=float(cfg["abs_tol"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _params(cfg) -> Params:
    if cfg.get("d") is None or cfg.get("s") is None:
        raise UsageError("--d and --s are required")
    try:
        return Params(int(cfg["d"]), float(cfg["s"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _search_spec(cfg, component=None) -> SupSearchSpec:
    try:
        return SupSearchSpec(coarse_points=int(cfg["coarse_points"]), refine_rounds=int(cfg["refine_rounds"]),
                             refine_factor=float(cfg["refine_factor"]),
                             support_samples=int(cfg["support_samples"]),
                             box_factor=float(cfg["box_factor"]), component=component)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def resolve_measure(cfg, d: int) -> Measure:
    name = cfg.get("measure")
    if not name:
        raise UsageError("--measure is required")
    deltas = cfg.get("delta") or []
    if name.startswith("builtin:"):
        key = name[len("builtin:"):]
        if key == "zero":
            return radial_measure(lambda t: np.zeros_like(np.asarray(t, dtype=float)), (0.0, 1.0), d,
                                  name="zero")
        if key.startswith("random:"):
            try:
                return random_radial(int(key.split(":", 1)[1]), d)
            except ValueError:
                raise UsageError(f"bad random seed in {name!r}") from None
        if key == "prop21":
            delta = deltas[0] if deltas else 0.05
            s = float(cfg["s"]) if cfg.get("s") is not None else 0.5
            try:
                return prop21_measure(SlabMeasureSpec(d=d, s=s, delta=delta))
            except ValueError as exc:
                raise UsageError(str(exc)) from None
        if key == "counterexample5":
            if d != 5:
                raise UsageError("builtin:counterexample5 lives in d = 5")
            return nu_measure(Counterexample5Spec(delta=deltas[0] if deltas else 0.05))
        if key in BUILTINS and key != "slab":
            return builtin(key, d)
        raise UsageError(f"unknown builtin {key!r}; choose from "
                         f"{sorted([k for k in BUILTINS if k != 'slab'] + ['prop21', 'counterexample5', 'zero', 'random:SEED'])}")
    try:
        lat = read_lattice(name)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read lattice file {name!r}: {exc}") from None
    if lat.d != d:
        raise UsageError(f"lattice file has d={lat.d}, expected {d}")
    return Measure(lat, d, sign_allowed=bool(np.any(lat.values < 0)), name=name)


def _points(cfg, d):
    raw = cfg.get("point")
    if not raw:
        raise UsageError("--point is required")
    pts = []
    for text in raw:
        v = _floats(text, "point")
        if len(v) != d:
            raise UsageError(f"point {text!r} has {len(v)} coordinates, expected {d}")
        pts.append(v)
    return np.array(pts)


def _echo(cfg, **extra) -> dict:
    out = {k: v for k, v in sorted(cfg.items()) if k not in ("out", "csv") and v is not None}
    out["version"] = __version__
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_eval(cfg) -> tuple:
    p = _params(cfg)
    q = _qspec(cfg)
    mu = resolve_measure(cfg, p.d)
    pts = _points(cfg, p.d)
    method = cfg["method"]
    t0 = time.perf_counter()
    outputs, errs = {"points": pts.tolist()}, {}
    if method == "vector":
        vals = [riesz_vector(mu, x, p, q) for x in pts]
        outputs["vectors"] = [v.vector.tolist() for v in vals]
        outputs["norms"] = [v.norm for v in vals]
        errs["vectors"] = [v.error_estimate for v in vals]
        errs["norms"] = [v.error_estimate for v in vals]
    elif method == "truncated":
        if not cfg.get("eps"):
            raise UsageError("--eps is required for --method truncated")
        vals = [riesz_truncated(mu, x, float(cfg["eps"]), p, q) for x in pts]
        outputs["vectors"] = [v.vector.tolist() for v in vals]
        errs["vectors"] = [v.error_estimate for v in vals]
    elif method == "radial":
        if not mu.is_radial:
            raise UsageError("--method radial needs a radial measure")
        vals = [riesz_radial_component(mu, float(np.linalg.norm(x)), p, q) for x in pts]
        outputs["radial_components"] = vals
        errs["radial_components"] = [q.rel_tol * abs(v) + q.abs_tol for v in vals]
    else:
        vals = [riesz_potential(mu, x, p, q) for x in pts]
        outputs["potentials"] = vals
        errs["potentials"] = [q.rel_tol * abs(v) + q.abs_tol for v in vals]
    rep = ExperimentReport("eval", _echo(cfg, d=p.d, s=p.s), outputs, errs,
                           int(1000 * (time.perf_counter() - t0)))
    return rep, EXIT_OK


def cmd_flux(cfg) -> tuple:
    p = _params(cfg)
    if not p.divergence_regime:
        raise RegimeViolation(f"the flux identity needs s < d - 1; got s={p.s}, d={p.d}")
    q = _qspec(cfg)
    mu = resolve_measure(cfg, p.d)
    if not cfg.get("ball"):
        raise UsageError("--ball c1,...,cd,radius is required")
    vals = _floats(cfg["ball"], "ball")
    if len(vals) != p.d + 1:
        raise UsageError(f"--ball needs {p.d} centre coordinates and a radius")
    try:
        ball = Ball(tuple(vals[:-1]), vals[-1])
    except (ValueError, UnsupportedBall) as exc:
        raise UsageError(str(exc)) from None
    t0 = time.perf_counter()
    rep = flux_report(mu, ball, p, q, by_parts=bool(cfg["by_parts"]))
    outputs = rep.as_dict()
    outputs.pop("tolerances_used")
    outputs["ratio_surface_over_divergence"], outputs["ratio_surface_over_rhs"] = outputs.pop("ratios")
    errs = {"surface_value": "heuristic", "divergence_value": "heuristic",
            "rhs_value": q.rel_tol * abs(rep.rhs_value) + q.abs_tol}
    return ExperimentReport("flux", _echo(cfg, d=p.d, s=p.s, tolerances=q.as_dict()), outputs, errs,
                            int(1000 * (time.perf_counter() - t0))), EXIT_OK


def cmd_maxprin(cfg) -> tuple:
    p = _params(cfg)
    q = _qspec(cfg, SEARCH_TOL)
    mu = resolve_measure(cfg, p.d)
    spec = _search_spec(cfg, cfg.get("component"))
    t0 = time.perf_counter()
    sup_s = sup_norm(mu, p, spec, "support", q)
    sup_g = sup_norm(mu, p, spec, "global", q, seeds=[sup_s.argmax])
    outputs = {
        "sup_support": sup_s.value, "sup_global": sup_g.value,
        "ratio": sup_g.value / sup_s.value if sup_s.value > q.abs_tol else None,
        "argmax_support": sup_s.argmax.tolist(), "argmax_global": sup_g.argmax.tolist(),
        "exclusion_bound_ok": sup_g.exclusion_ok, "n_evals": sup_s.n_evals + sup_g.n_evals,
    }
    if cfg["theta"]:
        th = theta_sup(mu, p, spec, q)
        outputs["theta_sup"] = th
        denom = sup_s.value + th
        outputs["ratio_global_over_support_plus_theta"] = sup_g.value / denom if denom > 0 else None
    if cfg.get("csv"):
        write_atomic(cfg["csv"], sup_g.grid_csv())
    rep = ExperimentReport("maxprin", _echo(cfg, d=p.d, s=p.s, tolerances=q.as_dict(),
                                            search=spec.as_dict()),
                           outputs, {"n_evals": "exact"}, int(1000 * (time.perf_counter() - t0)))
    return rep, EXIT_OK


def _monotone(values, increasing=True, strict=False) -> bool:
    pairs = list(zip(values[:-1], values[1:]))
    if increasing:
        return all(b > a if strict else b >= a for a, b in pairs)
    return all(b < a if strict else b <= a for a, b in pairs)


def cmd_prop21(cfg) -> tuple:
    p = _params(cfg)
    q = _qspec(cfg, SEARCH_TOL)
    spec = _search_spec(cfg, component=0)
    deltas = sorted(cfg.get("delta") or [0.2, 0.1, 0.05, 0.02], reverse=True)
    target, floor = float(cfg["M"]), float(cfg["delta_min"])
    t_start = time.perf_counter()
    reports, ratios, used = [], [], []

    def run(delta):
        t0 = time.perf_counter()
        try:
            mu = prop21_measure(SlabMeasureSpec(d=p.d, s=p.s, delta=delta), q.replace(rel_tol=1e-8))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        rep = mp_report(mu, p, spec, q)
        reports.append(ExperimentReport(
            "prop21", _echo(cfg, d=p.d, s=p.s, delta=delta, tolerances=q.as_dict(), search=spec.as_dict()),
            {"sup_support_R1": rep.sup_support, "sup_global_R1": rep.sup_global, "ratio": rep.ratio,
             "argmax_support": list(rep.argmax_support), "argmax_global": list(rep.argmax_global)},
            {}, int(1000 * (time.perf_counter() - t0))))
        ratios.append(rep.ratio)
        used.append(delta)

    for delta in deltas:
        run(delta)
    delta = min(deltas)
    while max(ratios) <= target and delta / 2 >= floor:
        delta /= 2
        run(delta)
    monotone = _monotone(ratios[:len(deltas)], increasing=True)
    reached = max(ratios) > target
    hit = [dl for dl, r in zip(used, ratios) if r > target]
    summary = ExperimentReport(
        "prop21_summary", _echo(cfg, d=p.d, s=p.s, deltas=used, M=target, delta_min=floor),
        {"deltas": used, "ratios": ratios, "monotone_increasing": monotone, "exceeds_M": reached,
         "largest_delta_exceeding_M": max(hit) if hit else None},
        {"ratios": "heuristic", "deltas": "exact"}, int(1000 * (time.perf_counter() - t_start)))
    code = EXIT_OK if (monotone and reached) else EXIT_VERDICT
    return (reports, summary), code


def cmd_counterexample(cfg) -> tuple:
    deltas = sorted(cfg.get("delta") or [0.2, 0.1, 0.05], reverse=True)
    t_start = time.perf_counter()
    reports, sups, ratios = [], [], []
    for delta in deltas:
        try:
            spec = Counterexample5Spec(delta=delta)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        q = _qspec(cfg, spec.eval_tolerance.rel_tol)
        raw = counterexample_report(spec, q, n_test=int(cfg["n_test"]), n_support=int(cfg["n_support"]))
        raw["params"].update(version=__version__)
        reports.append(ExperimentReport(raw["experiment"], raw["params"], raw["outputs"],
                                        raw["error_estimates"], raw["wall_time_ms"]))
        sups.append(raw["outputs"]["support_sup"])
        ratios.append(raw["outputs"]["support_ratio"])
    decreasing = _monotone(sups, increasing=False, strict=True)
    summary = ExperimentReport(
        "counterexample_summary", _echo(cfg, deltas=deltas),
        {"deltas": deltas, "support_sup": sups, "support_ratio": ratios,
         "support_sup_strictly_decreasing": decreasing,
         "support_ratio_decreasing": _monotone(ratios, increasing=False, strict=True),
         "support_ratio_at_most_0.1": [r <= 0.1 for r in ratios]},
        {"deltas": "exact"}, int(1000 * (time.perf_counter() - t_start)))
    return (reports, summary), (EXIT_OK if decreasing else EXIT_VERDICT)


def cmd_remark(cfg) -> tuple:
    deltas = cfg.get("delta") or [0.05]
    try:
        spec = Counterexample5Spec(delta=deltas[0])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    q = _qspec(cfg, spec.eval_tolerance.rel_tol)
    pts = _points(cfg, 5) if cfg.get("point") else None
    raw = remark_report(spec, q, points=pts)
    raw["params"].update(version=__version__)
    return ExperimentReport(raw["experiment"], raw["params"], raw["outputs"], raw["error_estimates"],
                            raw["wall_time_ms"]), EXIT_OK


COMMANDS = {
    "eval": cmd_eval, "flux": cmd_flux, "maxprin": cmd_maxprin, "prop21": cmd_prop21,
    "counterexample": cmd_counterexample, "remark": cmd_remark,
}


def _emit(result, cfg):
    if isinstance(result, tuple):
        text = json.dumps(sweep_document(*result), sort_keys=True, indent=2, allow_nan=False) + "\n"
    else:
        text = result.to_json()
    if cfg.get("out"):
        write_atomic(cfg["out"], text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        cfg = _config(args)
        result, code = COMMANDS[args.command](cfg)
        _emit(result, cfg)
        return code
    except (UsageError, ConfigError, InvalidPower, UnsupportedDimension, UnsupportedBall) as exc:
        print(f"rieszlab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RegimeViolation as exc:
        print(f"rieszlab: regime violation: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (ToleranceNotMet, RouteDisagreement, NoWitness) as exc:
        print(f"rieszlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RieszLabError as exc:
        print(f"rieszlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"rieszlab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
