"""Command line front end.

Exit status: 0 ok, 1 alarm (or failed broadcast check), 2 usage or config
error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, default_config, load_config
from .detection import (
    DetectionRecord,
    dump_records,
    dump_schedule,
    load_schedule,
    read_records,
    simulate_run,
)
from .exceptions import TripwireError
from .interferometer import (
    Block,
    CrossIntrusion,
    InterceptResend,
    Normal,
    PhaseSchedule,
    SideIntrusion,
    window_count_block,
    window_count_cross_intrusion,
    window_count_intercept_resend,
    window_count_side_intrusion,
    wrap_phase,
)
from .monitor import (
    BROADCAST,
    GAMMA1,
    GAMMA2,
    THETA,
    THETA_UNDEFINED,
    TripwireMonitor,
    align_to_expected_port,
    verify_broadcast,
)
from .numeric import numeric_window_count
from .source import sample_herald_times
from .validation import check_clicks

EXIT_OK, EXIT_ALARM, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("mzi_tripwire")

# closed-form values that vanish identically are compared against this floor
REL_DEV_FLOOR = 1e-10


def _num(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def relative_deviation(value: float, reference: float) -> float:
    return abs(value - reference) / max(abs(reference), REL_DEV_FLOOR)


def _emit(rows: list[dict], columns: list[str], fmt: str, out) -> None:
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(",".join(columns) + "\n")
        for row in rows:
            buf.write(",".join(row[c] if isinstance(row[c], str) else _num(row[c]) for c in columns) + "\n")
    else:
        for row in rows:
            buf.write(json.dumps({c: row[c] for c in columns}) + "\n")
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# --- analytic ----------------------------------------------------------------

ANALYTIC_COLUMNS = ["scenario", "parameter", "value", "i0", "closed_w1", "closed_w2",
                    "oracle_w1", "oracle_w2", "rel_dev"]


def analytic_table(cfg: ScenarioConfig) -> list[dict]:
    """Closed-form and quadrature counts for every scenario."""
    model, window = cfg.model, cfg.window
    beta, nu_p = model.beta, cfg.source.pump_frequency
    res = cfg.sweep["grid_resolution"]
    i0 = model.i0(window)
    rows = []

    def add(name, param, value, closed, oracle):
        dev = max(relative_deviation(o, c) for o, c in zip(oracle, closed))
        rows.append({"scenario": name, "parameter": param, "value": value, "i0": i0,
                     "closed_w1": closed[0], "closed_w2": closed[1],
                     "oracle_w1": oracle[0], "oracle_w2": oracle[1], "rel_dev": dev})

    def oracle(scenario, **kw):
        return numeric_window_count(scenario, beta, nu_p, cfg.geometry, window, res,
                                    source_delay=cfg.source.delay, **kw)

    add("normal", "", 0.0, model.expected_counts(Normal(), window), oracle(Normal()))
    add("block", "", 0.0, window_count_block(i0), oracle(Block()))
    add("intercept_resend", "", 0.0, window_count_intercept_resend(i0), oracle(InterceptResend()))

    xi_fixed = cfg.scenario.xi_override if isinstance(cfg.scenario, SideIntrusion) else None
    for delta in np.linspace(cfg.sweep["delta_min_ns"], cfg.sweep["delta_max_ns"], cfg.sweep["n_delta"]):
        si = SideIntrusion(float(delta), xi_fixed)
        xi = model.xi(si)
        add("side_intrusion", "delta_ns", float(delta), model.expected_counts(si, window),
            oracle(si, xi=xi))
    for phi in np.linspace(0.0, 2 * math.pi, cfg.sweep["n_phi"], endpoint=False):
        ci = CrossIntrusion(float(phi))
        closed = (window_count_cross_intrusion(float(phi), 0.0, beta, window)
                  if cfg.source.delay == 0.0 else model.expected_counts(ci, window))
        add("cross_intrusion", "phi_int_rad", float(phi), closed, oracle(ci))
    return rows


def cmd_analytic(cfg: ScenarioConfig, args) -> int:
    rows = analytic_table(cfg)
    _emit(rows, ANALYTIC_COLUMNS, args.format, args.out)
    print(f"max_rel_dev={_num(max(r['rel_dev'] for r in rows))}", file=sys.stderr)
    return EXIT_OK


# --- sweep -------------------------------------------------------------------

SWEEP_COLUMNS = ["delta_ns", "xi_rad", "count_w1", "count_w2", "count_total", "oracle_w1"]


def sweep_delta(cfg: ScenarioConfig) -> list[dict]:
    model, window = cfg.model, cfg.window
    beta, nu_p = model.beta, cfg.source.pump_frequency
    xi_fixed = cfg.scenario.xi_override if isinstance(cfg.scenario, SideIntrusion) else None
    xi_wl = cfg.scenario.xi_wavelength if isinstance(cfg.scenario, SideIntrusion) else None
    rows = []
    for delta in np.linspace(cfg.sweep["delta_min_ns"], cfg.sweep["delta_max_ns"], cfg.sweep["n_delta"]):
        si = SideIntrusion(float(delta), xi_fixed, xi_wl)
        xi = model.xi(si)
        if cfg.source.delay == 0.0 and cfg.geometry.is_balanced:
            w1, w2 = window_count_side_intrusion(float(delta), xi, beta, nu_p, window)
        else:
            w1, w2 = model.expected_counts(si, window)
        o1, _ = numeric_window_count(si, beta, nu_p, cfg.geometry, window, cfg.sweep["grid_resolution"],
                                     xi=xi, source_delay=cfg.source.delay)
        rows.append({"delta_ns": float(delta), "xi_rad": float(wrap_phase(xi)), "count_w1": w1,
                     "count_w2": w2, "count_total": w1 + w2, "oracle_w1": o1})
    return rows


def cmd_sweep_delta(cfg: ScenarioConfig, args) -> int:
    _emit(sweep_delta(cfg), SWEEP_COLUMNS, args.format, args.out)
    return EXIT_OK


# --- simulate ----------------------------------------------------------------

@dataclass
class SimulationResult:
    records: list[DetectionRecord]
    schedule: PhaseSchedule
    summary: dict

    @property
    def alarm(self) -> bool:
        return self.summary["alarm"]


def _schedule(cfg: ScenarioConfig, n: int, rng) -> PhaseSchedule:
    if cfg.schedule_phi1 is not None and cfg.schedule_phi2 is not None:
        return PhaseSchedule.constant(n, cfg.schedule_phi1, cfg.schedule_phi2, cfg.schedule_mode,
                                      cfg.broadcast_delay)
    schedule = PhaseSchedule.draw(n, cfg.schedule_mode, rng, cfg.broadcast_delay)
    if cfg.schedule_phi1 is not None:
        schedule.phi1[:] = cfg.schedule_phi1
    if cfg.schedule_phi2 is not None:
        schedule.phi2[:] = cfg.schedule_phi2
    return schedule


def _clicks(records, schedule):
    if schedule.mode == "qrng":
        return align_to_expected_port(records, schedule)
    return records


def simulate_scenario(cfg: ScenarioConfig, seed: int | None = None) -> SimulationResult:
    """Calibrate on a no-intrusion run, then simulate and monitor the configured scenario."""
    seed = cfg.seed if seed is None else seed
    herald_ss, sched_ss, run_ss, cal_ss = np.random.SeedSequence(seed).spawn(4)
    model, detector = cfg.model, cfg.detector

    if cfg.n_heralds is not None:
        times = sample_herald_times(cfg.source, seed=herald_ss, count=cfg.n_heralds)
    else:
        times = sample_herald_times(cfg.source, cfg.duration, seed=herald_ss)
    n = times.size
    schedule = _schedule(cfg, n, np.random.default_rng(sched_ss))
    records = simulate_run(model, cfg.scenario, times, detector, schedule, seed=run_ss)

    if cfg.calibration is not None:
        p1, p2 = cfg.calibration
        monitor = TripwireMonitor(cfg.alarm.window, cfg.alarm.nu, cfg.alarm.eps1, cfg.alarm.eps2,
                                  i0=model.i0(cfg.window))
        monitor.p_ = np.array([p1, p2])
        monitor.n_calibration_ = 0
    else:
        cal_rng = np.random.default_rng(cal_ss)
        cal_schedule = _schedule(cfg, n, cal_rng)
        cal_records = simulate_run(model, Normal(), times, detector, cal_schedule, seed=cal_rng)
        monitor = TripwireMonitor(cfg.alarm.window, cfg.alarm.nu, cfg.alarm.eps1, cfg.alarm.eps2,
                                  i0=model.i0(cfg.window))
        monitor.fit(_clicks(cal_records, cal_schedule))

    clicks = _clicks(records, schedule)
    feats = monitor.transform(clicks)
    alarms = monitor.predict(clicks)
    reasons = []
    if n >= cfg.alarm.window:
        live = slice(cfg.alarm.window - 1, None)
        th = feats[live, 0]
        masks = {
            THETA_UNDEFINED: np.isnan(th),
            THETA: th < cfg.alarm.nu,
            GAMMA1: np.abs(feats[live, 1]) >= cfg.alarm.eps1,
            GAMMA2: np.abs(feats[live, 2]) >= cfg.alarm.eps2,
        }
        reasons = [name for name, mask in masks.items() if mask.any()]
        last = feats[-1]
    else:
        last = (math.nan, math.nan, math.nan)

    match_fraction = None
    if schedule.mode == "qrng":
        verdict = verify_broadcast(records, schedule)
        match_fraction = verdict.match_fraction
        if not verdict.passed:
            reasons.append(BROADCAST)

    tail = check_clicks(clicks)[-cfg.alarm.window:].sum(axis=0)
    first_alarm = int(np.argmax(alarms)) if alarms.any() else None
    summary = {
        "scenario": cfg.scenario.name,
        "n_heralds": int(n),
        "n1": int(tail[0]),
        "n2": int(tail[1]),
        "theta": None if math.isnan(last[0]) else float(last[0]),
        "gamma1": None if math.isnan(last[1]) else float(last[1]),
        "gamma2": None if math.isnan(last[2]) else float(last[2]),
        "p1": float(monitor.p_[0]),
        "p2": float(monitor.p_[1]),
        "alarm": bool(reasons),
        "reasons": reasons,
        "first_alarm_index": first_alarm,
        "match_fraction": match_fraction,
        "insufficient_data": n < cfg.alarm.window,
    }
    return SimulationResult(records, schedule, summary)


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(path.name + suffix)


def cmd_simulate(cfg: ScenarioConfig, args) -> int:
    result = simulate_scenario(cfg, args.seed)
    records_path = args.out or cfg.output.get("records") or "records.csv"
    records_path = Path(records_path)
    schedule_path = Path(cfg.output.get("schedule") or _sibling(records_path, ".schedule.csv"))
    summary_path = Path(cfg.output.get("summary") or _sibling(records_path, ".summary.json"))
    records_path.write_text(dump_records(result.records, args.format), encoding="utf-8")
    schedule_path.write_text(dump_schedule(result.schedule), encoding="utf-8")
    summary_text = json.dumps(result.summary, indent=2)
    summary_path.write_text(summary_text + "\n", encoding="utf-8")
    print(summary_text)
    if result.summary["insufficient_data"]:
        print(f"error: {result.summary['n_heralds']} heralds is fewer than the alarm window "
              f"{cfg.alarm.window}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_ALARM if result.alarm else EXIT_OK


# --- verify-broadcast --------------------------------------------------------

def cmd_verify_broadcast(args) -> int:
    records = read_records(args.records)
    schedule = load_schedule(Path(args.schedule).read_text(encoding="utf-8"))
    verdict = verify_broadcast(records, schedule, args.threshold)
    print(json.dumps({"match_fraction": verdict.match_fraction, "n_clicked": verdict.n_clicked,
                      "threshold": verdict.threshold, "verdict": verdict.verdict}))
    if verdict.verdict == "insufficient_data":
        return EXIT_RUNTIME
    return EXIT_OK if verdict.passed else EXIT_ALARM


# --- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mzi-tripwire", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, default_format="csv"):
        p.add_argument("--config", type=Path, help="JSON scenario config (default: worked example)")
        p.add_argument("--out", type=Path, help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json-lines"), default=default_format)

    common(sub.add_parser("analytic", help="closed-form and oracle counts for every scenario"))
    common(sub.add_parser("sweep-delta", help="side-intrusion count versus added delay"))
    p = sub.add_parser("simulate", help="Monte Carlo run plus alarm monitor")
    common(p)
    p.add_argument("--seed", type=int, help="override run.seed")
    p = sub.add_parser("verify-broadcast", help="compare recorded clicks with broadcast phases")
    p.add_argument("records", type=Path)
    p.add_argument("schedule", type=Path)
    p.add_argument("--threshold", type=float)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify-broadcast":
            return cmd_verify_broadcast(args)
        cfg = load_config(args.config) if args.config else default_config()
        handler = {"analytic": cmd_analytic, "sweep-delta": cmd_sweep_delta,
                   "simulate": cmd_simulate}[args.command]
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (TripwireError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
