"""Command-line interface: run experiments from config files, write tables.

Subcommands mirror the experiment kinds: relax, sweep, critical-angle,
critical-fields, torque-curve, angle-curve.  Exit codes: 0 success,
2 non-convergence encountered, 64 usage/config error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import plots, reporting
from .config import KINDS, ConfigError, ExperimentConfig, parse_config
from .equilibrium import relax
from .model import (
    AppliedField,
    ValidationError,
    angle_profile,
    chirality,
    random_state,
    uniform_state,
)
from .observables import magnetization_angle, torque_density
from .sweep import (
    TWO_PI,
    CriticalAngleNotFound,
    SweepSchedule,
    find_critical_angle,
    find_critical_fields,
    loop_width,
    rotational_sweep,
)

EXIT_OK = 0
EXIT_NONCONVERGED = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with 2; the CLI contract is 64
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="springmag",
                     description="Spin-chain simulations of layered spring magnets")
    sub = parser.add_subparsers(dest="command", metavar="|".join(KINDS))
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", type=Path, default=None,
                       help="experiment config file (key = value lines)")
        p.add_argument("--out", type=Path, default=Path("."),
                       help="output directory for result tables")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--trace", action="store_true",
                       help="write per-step convergence traces (trace.csv)")
        p.add_argument("--plot", action="store_true",
                       help="also render PNG figures next to the tables")
    return parser


def _load_config(args) -> ExperimentConfig:
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    overrides = {}
    for item in args.override:
        if "=" not in item:
            raise ConfigError(f"--override expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return parse_config(text, overrides=overrides, kind=args.command)


def _initial_state(cfg: ExperimentConfig, stack):
    if cfg.init == "saturated":
        return uniform_state(stack)
    if cfg.init == "uniform":
        return uniform_state(stack, math.radians(cfg.init_theta_deg),
                             math.radians(cfg.init_phi_deg))
    if cfg.init == "random":
        return random_state(stack, np.random.default_rng(cfg.seed))
    path = Path(cfg.init.split(":", 1)[1])
    state, _, _, _ = reporting.read_snapshot(path)
    if state.n_layers != stack.n_layers:
        raise ConfigError(
            f"init: snapshot has {state.n_layers} layers, stack has {stack.n_layers}")
    return state


def _run_relax(cfg: ExperimentConfig, out: Path, trace: bool, plot: bool, log) -> int:
    stack = cfg.stack()
    applied = AppliedField(cfg.H_a, math.radians(cfg.theta_a_deg))
    initial = _initial_state(cfg, stack)
    echo = cfg.to_text()

    trace_fn = None
    if trace:
        trace_path = out / "trace.csv"
        reporting.write_trace_header(trace_path, echo, with_context=False)

        def trace_fn(step, time, resid, energy):
            reporting.append_trace_row(trace_path, [step, time, resid, energy])

    result = relax(stack, initial, applied, cfg.criteria(), cfg.step_params(),
                   trace=trace_fn)
    prof = angle_profile(result.state)
    chi = chirality(prof, stack, cfg.chirality_threshold)
    alpha = magnetization_angle(stack, prof)
    torque = torque_density(stack, prof, applied)

    reporting.write_profile(result.state, out / "profile.csv", echo)
    reporting.write_table(
        [{"theta_a_deg": cfg.theta_a_deg, "H_a": cfg.H_a,
          "converged": int(result.converged), "steps": result.steps,
          "equilibration_time": result.equilibration_time,
          "residual": result.final_residual, "torque": torque,
          "alpha_deg": math.degrees(alpha), "chirality": chi}],
        ["theta_a_deg", "H_a", "converged", "steps", "equilibration_time",
         "residual", "torque", "alpha_deg", "chirality"],
        ["deg", "Oe", "1", "1", "reduced", "1", "erg/cm^2", "deg", "1"],
        "relax", out / "summary.csv", echo)
    reporting.write_snapshot(result.state, applied, result.final_residual,
                             cfg.fingerprint(), out / "snapshot.csv")
    if plot:
        plots.save_profile_plot(None, np.degrees(prof.theta), stack,
                                out / "profile.png",
                                title=f"H_a = {cfg.H_a:g} Oe, "
                                      f"theta_a = {cfg.theta_a_deg:g} deg")
    log(f"relax: converged={result.converged} steps={result.steps} "
        f"residual={result.final_residual:.3e} alpha={math.degrees(alpha):.4f} deg")
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def _schedule(cfg: ExperimentConfig, increasing: bool) -> SweepSchedule:
    start, end = math.radians(cfg.theta_start_deg), math.radians(cfg.theta_end_deg)
    if not increasing:
        start, end = end, start
    return SweepSchedule(H_a=cfg.H_a, theta_start=start, theta_end=end,
                         coarse_step=math.radians(cfg.coarse_step_deg),
                         refine_step=math.radians(cfg.refine_step_deg))


def _sweep_with_trace(cfg, stack, schedule, trace, out, echo):
    trace_fn = None
    if trace:
        trace_path = out / "trace.csv"
        if not trace_path.exists():
            reporting.write_trace_header(trace_path, echo, with_context=True)

    records = []

    def on_record(rec):
        records.append(rec)
        if trace:
            reporting.append_trace_row(
                out / "trace.csv",
                [math.degrees(rec.theta_a), rec.steps, rec.equilibration_time,
                 0.0, 0.0])

    return rotational_sweep(stack, schedule, cfg.criteria(), cfg.step_params(),
                            chirality_threshold=cfg.chirality_threshold,
                            on_record=on_record if trace else None)


def _run_sweep(cfg: ExperimentConfig, out: Path, trace: bool, plot: bool, log) -> int:
    stack = cfg.stack()
    echo = cfg.to_text()
    schedule = _schedule(cfg, cfg.direction == "increasing")
    records = _sweep_with_trace(cfg, stack, schedule, trace, out, echo)
    reporting.write_sweep(records, out / "sweep.csv", echo)
    if plot:
        plots.save_hysteresis_plot(records, None, stack, out / "sweep.png")
    bad = sum(not r.converged for r in records)
    log(f"sweep: {len(records)} records, direction={cfg.direction}, "
        f"non-converged={bad}")
    return EXIT_NONCONVERGED if bad else EXIT_OK


def _run_curves(cfg: ExperimentConfig, out: Path, trace: bool, plot: bool,
                log, which: str) -> int:
    stack = cfg.stack()
    echo = cfg.to_text()
    inc = _sweep_with_trace(cfg, stack, _schedule(cfg, True), trace, out, echo)
    dec = _sweep_with_trace(cfg, stack, _schedule(cfg, False), trace, out, echo)
    theta = np.array([r.theta_a for r in inc] + [r.theta_a for r in dec])
    branches = ["increasing"] * len(inc) + ["decreasing"] * len(dec)
    if which == "torque-curve":
        values = np.array([r.torque for r in inc] + [r.torque for r in dec])
        reporting.write_curve(theta, values, branches, "torque", "erg/cm^2",
                              out / "torque-curve.csv", echo)
        if plot:
            plots.save_curve_plot(theta, values, branches, "T (erg/cm$^2$)",
                                  out / "torque-curve.png")
    else:
        values = np.array([math.degrees(r.mag_angle) for r in inc]
                          + [math.degrees(r.mag_angle) for r in dec])
        reporting.write_curve(theta, values, branches, "alpha_deg", "deg",
                              out / "angle-curve.csv", echo)
        if plot:
            plots.save_curve_plot(theta, np.radians(values), branches,
                                  r"$\alpha$ (deg)", out / "angle-curve.png",
                                  degrees_y=True)
    width = loop_width(inc, dec, stack)
    bad = sum(not r.converged for r in inc + dec)
    log(f"{which}: loop width = {math.degrees(width):.3f} deg, non-converged={bad}")
    return EXIT_NONCONVERGED if bad else EXIT_OK


def _run_critical_angle(cfg: ExperimentConfig, out: Path, plot: bool, log) -> int:
    stack = cfg.stack()
    echo = cfg.to_text()
    try:
        theta_c = find_critical_angle(
            stack, cfg.H_a,
            (math.radians(cfg.bracket_lo_deg), math.radians(cfg.bracket_hi_deg)),
            tol=math.radians(cfg.angle_tol_deg),
            criteria=cfg.criteria(), step=cfg.step_params(),
            walk_step=math.radians(cfg.walk_step_deg),
            chirality_threshold=cfg.chirality_threshold)
        theta_c_deg = math.degrees(theta_c)
        log(f"critical angle: theta_c = {theta_c_deg:.3f} deg at H_a = {cfg.H_a:g} Oe")
    except CriticalAngleNotFound as exc:
        theta_c_deg = math.nan
        log(f"critical angle: not found ({exc})")
    reporting.write_table(
        [{"H_a": cfg.H_a, "theta_c_deg": theta_c_deg,
          "bracket_lo_deg": cfg.bracket_lo_deg, "bracket_hi_deg": cfg.bracket_hi_deg,
          "tol_deg": cfg.angle_tol_deg}],
        ["H_a", "theta_c_deg", "bracket_lo_deg", "bracket_hi_deg", "tol_deg"],
        ["Oe", "deg", "deg", "deg", "deg"],
        "critical-angle", out / "critical-angle.csv", echo)
    return EXIT_OK


def _run_critical_fields(cfg: ExperimentConfig, out: Path, plot: bool, log) -> int:
    stack = cfg.stack()
    echo = cfg.to_text()
    report = find_critical_fields(
        stack, (cfg.H_min, cfg.H_max), tol=cfg.H_tol, scan_points=cfg.scan_points,
        coarse_step=math.radians(cfg.coarse_step_deg),
        refine_step=math.radians(cfg.refine_step_deg),
        criteria=cfg.criteria(), step=cfg.step_params())
    reporting.write_table(
        [{"H_c1": report.H_c1 if report.H_c1 is not None else math.nan,
          "H_c2": report.H_c2 if report.H_c2 is not None else math.nan,
          "H_c3": report.H_c3 if report.H_c3 is not None else math.nan}],
        ["H_c1", "H_c2", "H_c3"], ["Oe", "Oe", "Oe"],
        "critical-fields", out / "critical-fields.csv", echo)
    reporting.write_table(
        [{"H_a": float(h), "theta_c_deg": math.degrees(t) if not math.isnan(t) else math.nan,
          "loop_width_deg": math.degrees(w)}
         for h, t, w in zip(report.H_samples, report.theta_c, report.loop_widths)],
        ["H_a", "theta_c_deg", "loop_width_deg"], ["Oe", "deg", "deg"],
        "critical-fields-scan", out / "scan.csv", echo)
    if plot:
        plots.save_critical_fields_plot(report, out / "critical-fields.png")
    log(f"critical fields: H_c1={report.H_c1} H_c2={report.H_c2} "
        f"H_c3={report.H_c3} (Oe)")
    return EXIT_OK


def run(cfg: ExperimentConfig, out: Path, trace: bool = False, plot: bool = False,
        log=print) -> int:
    """Execute one experiment; returns the process exit code."""
    out.mkdir(parents=True, exist_ok=True)
    (out / "effective-config.txt").write_text(cfg.to_text())
    if cfg.kind == "relax":
        return _run_relax(cfg, out, trace, plot, log)
    if cfg.kind == "sweep":
        return _run_sweep(cfg, out, trace, plot, log)
    if cfg.kind in ("torque-curve", "angle-curve"):
        return _run_curves(cfg, out, trace, plot, log, cfg.kind)
    if cfg.kind == "critical-angle":
        return _run_critical_angle(cfg, out, plot, log)
    if cfg.kind == "critical-fields":
        return _run_critical_fields(cfg, out, plot, log)
    raise ConfigError(f"kind: unhandled experiment kind {cfg.kind!r}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise ConfigError("missing subcommand; expected one of " + ", ".join(KINDS))
        cfg = _load_config(args)
        return run(cfg, args.out, trace=args.trace, plot=args.plot)
    except (ConfigError, ValidationError) as exc:
        print(f"springmag: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"springmag: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        print(f"springmag: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
