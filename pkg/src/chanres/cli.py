"""Command line entry point: run, sweep, validate, optimize, train, figures.

Exit codes: 0 success, 1 internal fault or tolerance failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import analytic, experiments
from .controllers import cost, oracle_decide
from .core import CallClass, NetworkConfig, load_config, validate_config
from .metrics import (
    blocking_probability,
    class_loss,
    dropping_probability,
    mean_handoff_latency,
    system_load,
    utilisation,
)
from .network import ConfigError, simulate

log = logging.getLogger("chanres")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

RUN_HEADER = (
    "window", "start_s", "end_s",
    "arrived_rt_o", "arrived_nrt_o", "arrived_rt_h", "arrived_nrt_h",
    "lost_rt_o", "lost_nrt_o", "lost_rt_h", "lost_nrt_h",
    "pb_rt", "pb_nrt", "pd_rt", "pd_nrt", "pb", "pd",
    "latency_mean_s", "utilisation", "handoff_requests", "cost",
    "noc", "roc", "nhc", "rhc",
)

_METRICS = experiments.SUMMARY_FIELDS
SWEEP_HEADER = ("variable", "value", "replication") + _METRICS + tuple(m + "_sd" for m in _METRICS) + ("n",)

FIG_HEADERS = {
    "fig4_blocking.csv": ("load_multiplier", "system_load", "pb", "pb_sd", "pb_ci95",
                          "pb_rt", "pb_rt_sd", "pb_nrt", "pb_nrt_sd", "replications"),
    "fig5_dropping.csv": ("load_multiplier", "system_load", "pd", "pd_sd", "pd_ci95",
                          "pd_rt", "pd_rt_sd", "pd_nrt", "pd_nrt_sd", "replications"),
    "fig6_latency.csv": ("velocity_mps", "latency_mean_s", "latency_sd", "latency_ci95",
                         "handoffs_per_call", "handoffs_per_call_sd", "pd", "pd_sd", "replications"),
}

_ORDER = (CallClass.RT_O, CallClass.NRT_O, CallClass.RT_H, CallClass.NRT_H)


def fmt(x) -> str:
    """Six significant digits; empty field for undefined values."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if x != x:
            return ""
        return format(x, ".6g")
    return str(x)


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    data = buf.getvalue().encode("utf-8")
    if path is None or str(path) == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).write_bytes(data)


def window_rows(result):
    cfg = result.cfg
    for i, w in enumerate(result.windows):
        yield (
            i, w.start, w.end,
            *(w.arrived[c] for c in _ORDER),
            *(w.lost(c) for c in _ORDER),
            *(class_loss(w, c) for c in _ORDER),
            blocking_probability(w), dropping_probability(w),
            mean_handoff_latency(w, cfg.signaling_delay), utilisation(w), w.handoff_requests,
            cost(w, cfg.cost_weights, cfg.signaling_delay),
            *w.reservation,
        )


def sweep_rows(points):
    for pt in points:
        for r, run in enumerate(pt.runs):
            yield (pt.variable, pt.value, r, *(run[m] for m in _METRICS), *([None] * len(_METRICS)), None)
        agg = pt.aggregate()
        yield (pt.variable, pt.value, "aggregate", *(agg[m] for m in _METRICS),
               *(agg[m + "_sd"] for m in _METRICS), agg["n"])


# -- commands --------------------------------------------------------------------


class UsageError(Exception):
    pass


def _config(args) -> NetworkConfig:
    if args.config is None:
        cfg = NetworkConfig()
    else:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            cfg = load_config(path)
        except (ValueError, TypeError) as exc:
            raise UsageError(f"{path}: {exc}") from exc
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_(seed=args.seed)
    problems = validate_config(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    result = simulate(cfg)
    write_csv(args.out, RUN_HEADER, window_rows(result))
    log.info("simulated %d events, %d windows", result.events, len(result.windows))
    return EXIT_OK


def _values(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--values: {exc}") from exc


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if args.values is None:
        raise UsageError("--values is required")
    try:
        points = experiments.sweep(cfg, args.variable, _values(args.values), args.replications, args.jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_csv(args.out, SWEEP_HEADER, sweep_rows(points))
    return EXIT_OK


def cmd_validate(args) -> int:
    base = experiments.VALIDATION_CONFIG
    if args.config is not None:
        base = _config(args)
    elif args.seed is not None:
        base = base.with_(seed=args.seed)
    problems = validate_config(base)
    if problems:
        raise ConfigError(problems)
    try:
        checks = experiments.erlang_b_check(base, args.replications, args.jobs)
        checks.append(experiments.mmck_check())
    except experiments.InsufficientSamples as exc:
        print(f"insufficient samples: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(f"{'class':<14}{'simulated':>12}{'analytic':>12}{'abs diff':>12}{'stderr':>12}{'arrivals':>10}  result")
    failed = []
    for c in checks:
        verdict = "PASS" if c.passed else "FAIL"
        print(f"{c.name:<14}{c.simulated:>12.6f}{c.analytic:>12.6f}{c.diff:>12.6f}{c.stderr:>12.6f}{c.arrivals:>10}  {verdict}")
        if not c.passed:
            failed.append(c.name)
    if failed:
        print(f"tolerance exceeded for: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg = _config(args)
    try:
        rv = oracle_decide(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    j = analytic.disjoint_cost(rv, cfg.offered_loads(), cfg.cost_weights, cfg.signaling_delay)
    payload = {"reservation": dict(rv._asdict()), "cost": j, "stride": cfg.lattice_stride}
    print(f"optimum {tuple(rv)} cost {j:.6g}")
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    if cfg.controller not in ("la", "neural"):
        raise UsageError(f"controller {cfg.controller!r} cannot be trained; use la or neural")
    if args.episodes is None or args.episodes < 1:
        raise UsageError("--episodes must be ≥ 1")
    state = None
    state_path = Path(args.state) if args.state else None
    if state_path is not None and state_path.is_file():
        state = experiments.load_state(state_path)
    try:
        rows, state = experiments.train(cfg, args.episodes, state)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_csv(args.out, ("episode", "mean_cost"), rows)
    if state_path is not None:
        experiments.save_state(state, state_path)
    log.info("trained to episode %d, final mean cost %.6g", rows[-1][0], rows[-1][1])
    return EXIT_OK


FIGURE_LOADS = (0.5, 1.0, 1.5, 2.0)
FIGURE_VELOCITIES = (5.0, 10.0, 20.0, 40.0)


def load_series(points) -> tuple:
    """Blocking-vs-load and dropping-vs-load rows from a load sweep."""
    fig4, fig5 = [], []
    for pt in points:
        a = pt.aggregate()
        n = a["n"]
        fig4.append((pt.value, a["load"], a["pb"], a["pb_sd"], experiments.t_halfwidth(a["pb_sd"], n),
                     a["pb_rt"], a["pb_rt_sd"], a["pb_nrt"], a["pb_nrt_sd"], n))
        fig5.append((pt.value, a["load"], a["pd"], a["pd_sd"], experiments.t_halfwidth(a["pd_sd"], n),
                     a["pd_rt"], a["pd_rt_sd"], a["pd_nrt"], a["pd_nrt_sd"], n))
    return fig4, fig5


def velocity_series(points) -> list:
    """Latency-vs-velocity rows from a velocity sweep."""
    rows = []
    for pt in points:
        a = pt.aggregate()
        n = a["n"]
        rows.append((pt.value, a["latency_mean_s"], a["latency_mean_s_sd"],
                     experiments.t_halfwidth(a["latency_mean_s_sd"], n),
                     a["handoffs_per_call"], a["handoffs_per_call_sd"], a["pd"], a["pd_sd"], n))
    return rows


def mobility_variant(cfg: NetworkConfig, handoff_queue: int = 5) -> NetworkConfig:
    """Dwell-driven handoffs with queues on both handoff classes."""
    return cfg.with_(handoff_mode="mobility", queue_capacity=(0, 0, handoff_queue, handoff_queue))


def figure_series(cfg: NetworkConfig, replications: int, jobs: int = 1,
                  loads=FIGURE_LOADS, velocities=FIGURE_VELOCITIES) -> dict:
    load_pts = experiments.sweep(cfg, "load_multiplier", loads, replications, jobs)
    vel_pts = experiments.sweep(mobility_variant(cfg), "velocity", velocities, replications, jobs)
    fig4, fig5 = load_series(load_pts)
    return {"fig4_blocking.csv": fig4, "fig5_dropping.csv": fig5, "fig6_latency.csv": velocity_series(vel_pts)}


def cmd_figures(args) -> int:
    cfg = _config(args)
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    series = figure_series(cfg, args.replications, args.jobs)
    for name, rows in series.items():
        write_csv(outdir / name, FIG_HEADERS[name], rows)
        print(outdir / name)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "optimize": cmd_optimize,
    "train": cmd_train,
    "figures": cmd_figures,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chanres", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="output path ('-' for stdout)"):
        sp.add_argument("--config", metavar="PATH", help="JSON network configuration")
        sp.add_argument("--seed", type=int, help="override the configured seed")
        sp.add_argument("--out", metavar="PATH", help=out_help)
        return sp

    common(sub.add_parser("run", help="simulate once, one CSV row per control window"))
    sp = common(sub.add_parser("sweep", help="replicated sweep over load or velocity"))
    sp.add_argument("--variable", default="load_multiplier", choices=experiments.SWEEP_VARIABLES)
    sp.add_argument("--values", metavar="CSV-LIST")
    sp.add_argument("--replications", type=int, default=5)
    sp.add_argument("--jobs", type=int, default=1)
    sp = common(sub.add_parser("validate", help="simulated loss against Erlang-B and M/M/c/K"))
    sp.add_argument("--replications", type=int, default=10)
    sp.add_argument("--jobs", type=int, default=1)
    common(sub.add_parser("optimize", help="exhaustive analytic reservation optimum"), "JSON result path")
    sp = common(sub.add_parser("train", help="train a learning controller"), "learning-curve CSV path")
    sp.add_argument("--episodes", type=int)
    sp.add_argument("--state", metavar="PATH", help="controller state file, resumed if it exists")
    sp = common(sub.add_parser("figures", help="blocking, dropping and latency series"), "output directory")
    sp.add_argument("--replications", type=int, default=5)
    sp.add_argument("--jobs", type=int, default=1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print("configuration error:", file=sys.stderr)
        for v in exc.violations:
            print(f"  violated: {v}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:  # noqa: BLE001
        log.exception("internal error")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
