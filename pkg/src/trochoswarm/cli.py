"""
Command-line entry point: ``trochoswarm <command> [options]``.

Exit status is 0 on success, 1 for configuration, file or usage errors and
2 when the feasible region is empty.  TROCHOID_LOG sets the log level.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .design import DesignSpec, design_eigenstructure, make_design
from .errors import EmptyRegion, TrochoidError, UnsupportedType
from .injection import OFFSET_LABELS, injected_start_points, injection_feasible
from .io import (
    ConfigError,
    DesignDocument,
    load,
    plan_to_dict,
    read_json,
    region_csv,
    report_json,
    save,
    spec_from_config,
)
from .plotting import PLOT_KINDS, plot_paths, plot_regions, plot_speeds
from .region import classify_point, cusp_exclusion_bands, feasible_region
from .sim import (
    SimConfig,
    integrate_cp,
    perturbation_gains,
    perturbation_study,
    unicycle_track,
)
from .trajectory import coverage, evaluate, sample, trajectory_csv

log = logging.getLogger("trochoswarm")

EXIT_OK, EXIT_USAGE, EXIT_EMPTY = 0, 1, 2


# ------------------------------------------------------------------ helpers


def _region_for(spec: DesignSpec, eig, delta: float, subtract_cusps: bool):
    return feasible_region(spec, eig, delta=delta, subtract_cusps=subtract_cusps)


def _spec_with_overrides(spec: DesignSpec, args) -> DesignSpec:
    if getattr(args, "epsilon_cusp", None) is not None:
        spec = dataclasses.replace(spec, epsilon_cusp=args.epsilon_cusp)
    return spec


def _out(args, name: str) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _load_design(args) -> DesignDocument:
    if not args.design:
        raise ConfigError("--design is required")
    return load(args.design)


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)


def _sim_config(args, period: float) -> tuple[SimConfig, dict]:
    data = read_json(args.config) if args.config else {}
    extra = {k: data.pop(k) for k in ("track",) if k in data}
    allowed = {f.name for f in dataclasses.fields(SimConfig)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{args.config}: unknown field(s) {', '.join(unknown)}")
    if args.scale is not None:
        data["scale"] = args.scale
    scale = data.get("scale", 1.0)
    data.setdefault("duration", period / scale)
    try:
        return SimConfig(**data), extra
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{args.config or '<sim config>'}: {exc}") from None


# ---------------------------------------------------------------- commands


def cmd_design(args) -> int:
    data = read_json(args.config)
    spec = _spec_with_overrides(spec_from_config(data, args.config), args)
    eig = design_eigenstructure(spec)
    subtract = args.epsilon_cusp is not None or bool(data.get("subtract_cusps", False))
    delta = args.delta if args.delta is not None else float(data.get("delta", 0.0))
    bands = cusp_exclusion_bands(eig.alpha, eig.k, spec.epsilon_cusp, eig.trochoid_type)
    try:
        region = _region_for(spec, eig, delta, subtract)
    except EmptyRegion as exc:
        log.error("empty feasible region: %s", exc)
        plot_regions(_out(args, "regions.svg"), None, bands, box=(1.0, 1.0))
        _write(_out(args, "region.csv"), region_csv(None))
        print(f"error: no feasible region ({exc})", file=sys.stderr)
        return EXIT_EMPTY
    point = data.get("point", "auto")
    if args.auto_point or point == "auto":
        R_c, d_c, margin = region.margin_point()
        log.info("auto point (%.6g, %.6g) with distance margin %.6g", R_c, d_c, margin)
    else:
        if not (isinstance(point, list) and len(point) == 2):
            raise ConfigError(f"{args.config}: field 'point' must be [R_c, d_c] or \"auto\"")
        R_c, d_c = (float(v) for v in point)
    verdict = classify_point(region.constraints, R_c, d_c, tol=1e-9)
    if not verdict.feasible:
        log.warning("chosen point violates: %s", ", ".join(verdict.violated))
    design = make_design(spec, R_c, d_c, eig)
    doc = DesignDocument.from_design(design, source=data)
    save(doc, _out(args, "design.json"))
    _write(_out(args, "region.csv"), region_csv(region))
    plot_regions(_out(args, "regions.svg"), region, bands, point=(R_c, d_c))
    plot_paths(_out(args, "paths.svg"), design.trochoids)
    xs = ", ".join(f"{x:.6g}" for x in design.positions[:, 0])
    print(f"R_c={R_c:.9g} d_c={d_c:.9g} feasible={verdict.feasible} x0=({xs})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    doc = _load_design(args)
    config, extra = _sim_config(args, doc.eig.period)
    run = integrate_cp(doc.eig.beta, doc.placement.positions, config)
    trs = [tr.scaled_in_time(config.scale) for tr in doc.trochoids]
    report = {"config": dataclasses.asdict(config), "seed": args.seed}
    if config.duration == 0:
        t = np.empty(0)
        report["max_deviation"] = 0.0
    else:
        t = run.t
        report["max_deviation"] = float(np.abs(run.positions - evaluate(trs, t)).max())
    _write(_out(args, "trajectory.csv"), trajectory_csv(sample(trs, t)))
    if extra.get("track"):
        tr_rep = unicycle_track(doc.trochoids, config)
        report["tracking"] = {
            "rms_error": tr_rep.rms_error,
            "max_error": tr_rep.max_error,
            "peak_V": tr_rep.peak_V,
            "peak_omega": tr_rep.peak_omega,
            "flags": tr_rep.flags,
        }
    _write(_out(args, "simulate_report.json"), report_json(report))
    print(f"max deviation from closed form: {report['max_deviation']:.3g}")
    return EXIT_OK


def cmd_inject(args) -> int:
    doc = _load_design(args)
    plan = injection_feasible(doc.trochoids, doc.spec.d_CT, doc.eig.alpha)
    doc.injection = plan
    save(doc, _out(args, "design_injected.json"))
    _write(_out(args, "injection.json"), report_json(plan_to_dict(plan)))
    plot_paths(_out(args, "paths_injected.svg"), doc.trochoids, injected_start_points(doc.trochoids, plan))
    for i, offs in sorted(plan.offsets.items()):
        print(f"path {i}: offsets {[OFFSET_LABELS[o] for o in offs]}")
    print(f"agents: {plan.agent_count}")
    return EXIT_OK


def cmd_coverage(args) -> int:
    doc = _load_design(args)
    r_sense = args.r_sense if args.r_sense is not None else doc.spec.R_sense
    if r_sense is None:
        r_sense = 1.0
        log.warning("R_sense not given; reporting areas per unit sensing radius")
    rep = coverage(doc.trochoids, r_sense)
    _write(_out(args, "coverage.json"), report_json(rep))
    print(f"total sensing area: {rep.total:.9g}")
    return EXIT_OK


def cmd_perturb(args) -> int:
    doc = _load_design(args)
    delta = args.delta if args.delta is not None else 1.0
    summary = perturbation_study(doc.to_design(), delta, args.runs, args.seed)
    gains = perturbation_gains(doc.eig)
    report = {
        "delta": delta,
        "seed": args.seed,
        "runs": summary.n_runs,
        "violating_runs": summary.n_violating,
        "violations": [
            {"run": run, "items": [[tag, float(v)] for tag, v in items]} for run, items in summary.violations
        ],
        "max_pair_formula_gap": summary.max_pair_formula_gap,
        "runs_exceeding_delta_shift": summary.n_shift_exceeded,
        "gain_bound": gains.worst,
    }
    _write(_out(args, "perturb_report.json"), report_json(report))
    print(f"{summary.n_violating} of {summary.n_runs} runs violate a distance bound")
    return EXIT_OK


def cmd_plot(args) -> int:
    doc = _load_design(args)
    if args.what not in PLOT_KINDS:
        raise ConfigError(f"unknown plot kind {args.what!r}; choose from {', '.join(PLOT_KINDS)}")
    target = _out(args, f"{args.what}.svg")
    if args.what == "regions":
        spec = _spec_with_overrides(doc.spec, args)
        bands = cusp_exclusion_bands(doc.eig.alpha, doc.eig.k, spec.epsilon_cusp, doc.eig.trochoid_type)
        try:
            region = _region_for(spec, doc.eig, args.delta or 0.0, args.epsilon_cusp is not None)
        except EmptyRegion:
            plot_regions(target, None, bands, box=(1.0, 1.0))
            return EXIT_EMPTY
        plot_regions(target, region, bands, point=(doc.R_c, doc.d_c))
    elif args.what == "paths":
        starts = injected_start_points(doc.trochoids, doc.injection) if doc.injection else None
        plot_paths(target, doc.trochoids, starts)
    else:
        plot_speeds(target, doc.trochoids)
    log.info("wrote %s", target)
    return EXIT_OK


# ------------------------------------------------------------------ parser


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1; status 2 is reserved for empty regions."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out-dir", default=".", help="directory for outputs (default: .)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--scale", type=float, default=None, help="multiply beta by this factor")
    common.add_argument("--delta", type=float, default=None, help="perturbation margin")
    common.add_argument("--epsilon-cusp", type=float, default=None, help="cusp band half-width; removes bands")

    p = _Parser(prog="trochoswarm", description=__doc__.strip().splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("design", parents=[common], help="compute region, point and initial positions")
    d.add_argument("--config", required=True)
    d.add_argument("--auto-point", action="store_true", help="ignore any point in the config")
    d.set_defaults(func=cmd_design)

    s = sub.add_parser("simulate", parents=[common], help="integrate the protocol from a design")
    s.add_argument("design_path", nargs="?", default=None)
    s.add_argument("--design", default=None)
    s.add_argument("--config", default=None, help="simulation config JSON")
    s.set_defaults(func=cmd_simulate)

    for name, func, helptext in (
        ("inject", cmd_inject, "injection plan for extra agents"),
        ("coverage", cmd_coverage, "arc lengths and sensing area"),
        ("perturb", cmd_perturb, "Monte Carlo over perturbed starts"),
    ):
        q = sub.add_parser(name, parents=[common], help=helptext)
        q.add_argument("design_path", nargs="?", default=None)
        q.add_argument("--design", default=None)
        if name == "coverage":
            q.add_argument("--r-sense", type=float, default=None)
        if name == "perturb":
            q.add_argument("--runs", type=int, default=1000)
        q.set_defaults(func=func)

    pl = sub.add_parser("plot", parents=[common], help="render an SVG")
    pl.add_argument("design_path", nargs="?", default=None)
    pl.add_argument("what", nargs="?", default="paths")
    pl.add_argument("--design", default=None)
    pl.set_defaults(func=cmd_plot)
    return p


def _configure_logging() -> None:
    level = os.environ.get("TROCHOID_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "design_path", None) and not getattr(args, "design", None):
        args.design = args.design_path
    try:
        return args.func(args)
    except EmptyRegion as exc:
        print(f"error: no feasible region ({exc})", file=sys.stderr)
        return EXIT_EMPTY
    except (ConfigError, UnsupportedType, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrochoidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
