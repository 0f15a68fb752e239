"""Command-line front end.

Subcommands::

    run          one scenario run -> kpis.csv + events.csv
    sweep        speeds x seeds x policies -> sweep.csv (+ sweep_summary.csv)
    convergence  long run(s) -> convergence.csv (per-second loss rate)
    qtable       run and dump the learned Q-tables -> qtables.csv
    plot         render PNG charts from a sweep or convergence CSV

All outputs are CSV written atomically (write-then-rename); a fixed
(scenario, seed) produces byte-identical files regardless of --jobs.
The default output root comes from $HOSIM_OUT, falling back to ./out.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import config, metrics, sim
from .rl import qtable_rows
from .sim import ConfigError, Scenario

ENV_OUT_ROOT = "HOSIM_OUT"


def _out_dir(args) -> str:
    return args.out or os.environ.get(ENV_OUT_ROOT) or "out"


def _parse_int_list(text: str) -> list[int]:
    """Parse '1,2,5' or a half-open range 'a:b'."""
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi)))
    return [int(v) for v in text.split(",") if v]


def _parse_float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _load_scenario(args) -> Scenario:
    scenario = config.load_scenario(args.scenario, args.set)
    if getattr(args, "seed", None) is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    if getattr(args, "speed", None) is not None:
        scenario = dataclasses.replace(scenario, ue_speed_kmh=args.speed)
    if getattr(args, "policy", None) is not None:
        scenario = dataclasses.replace(scenario, policy=args.policy)
    if getattr(args, "duration", None) is not None:
        scenario = dataclasses.replace(scenario, sim_duration_s=args.duration)
    return scenario


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", help="scenario INI file (defaults to built-in defaults)")
    parser.add_argument("--set", action="append", default=[], metavar="SEC.KEY=VAL",
                        help="override any scenario field, repeatable")
    parser.add_argument("--out", help=f"output directory (default: ${ENV_OUT_ROOT} or ./out)")


def _run_one(scenario: Scenario) -> tuple:
    result = sim.run(scenario)
    return (scenario.policy, scenario.ue_speed_kmh, scenario.seed, result.kpis)


def cmd_run(args) -> int:
    scenario = _load_scenario(args)
    result = sim.run(scenario)
    out = _out_dir(args)
    metrics.write_csv_atomic(
        os.path.join(out, "kpis.csv"),
        metrics.KPI_HEADER,
        [metrics.kpi_row(scenario.policy, scenario.seed, scenario.ue_speed_kmh, result.kpis)],
    )
    metrics.write_csv_atomic(
        os.path.join(out, "events.csv"),
        metrics.EVENT_HEADER,
        [metrics.event_row(o) for o in result.outcomes],
    )
    print(f"run complete: policy={scenario.policy} seed={scenario.seed} "
          f"throughput={result.kpis.mean_throughput_mbps:.3f} Mbps plr={result.kpis.plr:.4f} "
          f"handovers={result.kpis.ho_decisions} -> {out}")
    return 0


def cmd_sweep(args) -> int:
    base = config.load_scenario(args.scenario, args.set)
    seeds = _parse_int_list(args.seeds)
    speeds = _parse_float_list(args.speeds) if args.speeds else list(sim.SPEED_SET_KMH)
    policies = args.policies.split(",") if args.policies else list(sim.POLICIES)
    if not seeds:
        raise ConfigError("seeds", "need at least one seed")
    scenarios = [
        dataclasses.replace(base, policy=p, ue_speed_kmh=v, seed=s)
        for p in policies
        for v in speeds
        for s in seeds
    ]
    for scn in scenarios:
        scn.validate()
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, scenarios))
    else:
        results = [_run_one(s) for s in scenarios]
    results.sort(key=lambda r: (r[0], r[1], r[2]))
    out = _out_dir(args)
    metrics.write_csv_atomic(
        os.path.join(out, "sweep.csv"),
        metrics.KPI_HEADER,
        [metrics.kpi_row(p, s, v, k) for (p, v, s, k) in results],
    )
    summary_rows = []
    for policy in sorted(set(r[0] for r in results)):
        for speed in sorted(set(r[1] for r in results)):
            records = [k for (p, v, s, k) in results if p == policy and v == speed]
            if not records:
                continue
            tputs = [k.mean_throughput_mbps for k in records]
            plrs = [k.plr for k in records]
            fails = [k.ho_failure_rate for k in records]
            pps = [k.ping_pong_rate for k in records]
            summary_rows.append((
                policy, speed, len(records),
                metrics.mean(tputs), metrics.sample_stdev(tputs),
                metrics.mean(plrs), metrics.sample_stdev(plrs),
                metrics.mean(fails), metrics.sample_stdev(fails),
                metrics.mean(pps), metrics.sample_stdev(pps),
            ))
    metrics.write_csv_atomic(
        os.path.join(out, "sweep_summary.csv"),
        ("policy", "speed_kmh", "n_runs", "throughput_mean", "throughput_stdev",
         "plr_mean", "plr_stdev", "failure_rate_mean", "failure_rate_stdev",
         "ping_pong_mean", "ping_pong_stdev"),
        summary_rows,
    )
    cdf_rows = []
    for policy in sorted(set(r[0] for r in results)):
        records = [k for (p, v, s, k) in results if p == policy]
        for name, values in (
            ("throughput_mbps", [k.mean_throughput_mbps for k in records]),
            ("ho_failure_rate", [k.ho_failure_rate for k in records]),
        ):
            series = metrics.cdf(values)
            cdf_rows.extend((policy, name, v, f) for v, f in zip(series.values, series.fractions))
    metrics.write_csv_atomic(
        os.path.join(out, "sweep_cdf.csv"),
        ("policy", "metric", "value", "fraction"),
        cdf_rows,
    )
    print(f"sweep complete: {len(results)} runs -> {out}")
    return 0


def cmd_convergence(args) -> int:
    base = config.load_scenario(args.scenario, args.set)
    if args.duration is not None:
        base = dataclasses.replace(base, sim_duration_s=args.duration)
    seeds = _parse_int_list(args.seeds)
    rows = []
    for seed in seeds:
        scenario = dataclasses.replace(base, seed=seed)
        result = sim.run(scenario)
        for t, plr in enumerate(result.kpis.plr_series):
            rows.append((seed, t, plr))
    out = _out_dir(args)
    metrics.write_csv_atomic(os.path.join(out, "convergence.csv"), ("seed", "timestamp_s", "avg_plr"), rows)
    print(f"convergence complete: {len(seeds)} run(s), {len(rows)} samples -> {out}")
    return 0


def cmd_qtable(args) -> int:
    scenario = _load_scenario(args)
    if scenario.policy != "lim2":
        raise ConfigError("policy", "qtable dumps require the lim2 policy")
    result = sim.run(scenario)
    out = _out_dir(args)
    metrics.write_csv_atomic(
        os.path.join(out, "qtables.csv"),
        ("cell", "ttt_ms", "hyst_db", "q"),
        qtable_rows(result.qtables),
    )
    print(f"qtable dump complete: {sum(len(t.entries) for t in result.qtables.values())} entries -> {out}")
    return 0


def cmd_plot(args) -> int:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib is required for plotting", file=sys.stderr)
        return 1
    import csv as _csv

    with open(args.csv) as fh:
        reader = _csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        print(f"no rows in {args.csv}", file=sys.stderr)
        return 1
    out = _out_dir(args)
    os.makedirs(out, exist_ok=True)
    if "avg_plr" in rows[0]:
        fig, ax = plt.subplots()
        seeds = sorted(set(r["seed"] for r in rows))
        for seed in seeds:
            pts = [(float(r["timestamp_s"]), float(r["avg_plr"])) for r in rows if r["seed"] == seed]
            ax.plot([p[0] for p in pts], [p[1] for p in pts], label=f"seed {seed}", alpha=0.7)
        ax.set_xlabel("time (s)")
        ax.set_ylabel("average packet loss rate")
        if len(seeds) <= 8:
            ax.legend()
        path = os.path.join(out, "convergence.png")
    else:
        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
        policies = sorted(set(r["policy"] for r in rows))
        for policy in policies:
            pts = sorted(
                (float(r["speed_kmh"]), float(r["mean_throughput_mbps"]), float(r["plr"]))
                for r in rows if r["policy"] == policy
            )
            speeds = sorted(set(p[0] for p in pts))
            tput = [metrics.mean([p[1] for p in pts if p[0] == v]) for v in speeds]
            plr = [metrics.mean([p[2] for p in pts if p[0] == v]) for v in speeds]
            axes[0].plot(speeds, tput, marker="o", label=policy)
            axes[1].plot(speeds, plr, marker="o", label=policy)
        axes[0].set_xlabel("speed (km/h)")
        axes[0].set_ylabel("mean throughput (Mbps)")
        axes[1].set_xlabel("speed (km/h)")
        axes[1].set_ylabel("packet loss rate")
        axes[0].legend()
        path = os.path.join(out, "sweep.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hosim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single scenario run")
    _add_common(p_run)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--speed", type=float, help="UE speed in km/h")
    p_run.add_argument("--policy", choices=sim.POLICIES)
    p_run.add_argument("--duration", type=float, help="run duration in seconds")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="speeds x seeds x policies sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--seeds", default="0:10", help="comma list or a:b range (default 0:10)")
    p_sweep.add_argument("--speeds", help="comma list of km/h (default the standard 7-value set)")
    p_sweep.add_argument("--policies", help="comma list (default all three)")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel runs (default 1)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_conv = sub.add_parser("convergence", help="long run emitting per-second loss rate")
    _add_common(p_conv)
    p_conv.add_argument("--seeds", default="0", help="comma list or a:b range")
    p_conv.add_argument("--duration", type=float, help="run duration in seconds (e.g. 120)")
    p_conv.set_defaults(func=cmd_convergence)

    p_qt = sub.add_parser("qtable", help="run and dump final Q-tables")
    _add_common(p_qt)
    p_qt.add_argument("--seed", type=int)
    p_qt.add_argument("--speed", type=float)
    p_qt.add_argument("--duration", type=float)
    p_qt.set_defaults(func=cmd_qtable)

    p_plot = sub.add_parser("plot", help="render charts from a CSV")
    p_plot.add_argument("csv", help="sweep.csv or convergence.csv")
    p_plot.add_argument("--out")
    p_plot.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
