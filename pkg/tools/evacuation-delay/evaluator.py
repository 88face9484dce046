"""
Evacuation Delay Evaluator - command-line entry point.

Usage:
    python evaluator.py table1                          # Evacuation table, simple mode
    python evaluator.py table1 --mode queueing --check  # queueing mode + real-time verdicts
    python evaluator.py table1 --scenario scenario_files/campus-night.json --simulate 60 --seed 7
    python evaluator.py simulate --name regional --duration 60 --reps 4
    python evaluator.py simulate --scenario scenario_files/regional.json --out run.json --format json
    python evaluator.py sweep --name semi-national --sizes 1e5,1e6,1e7,4.5e7
    python evaluator.py sweep --name semi-national --mode queueing
    python evaluator.py compose --name national --out national.csv
    python evaluator.py compose --name semi-national --mode simple --out semi.json --format json
    python evaluator.py diurnal --name semi-national
    python evaluator.py config                          # Print effective configuration

Exit codes: 0 success, 1 invalid scenario / input / output, 2 unstable queue
in a mode that requires stability.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

# Ensure tool directory is on path for imports
sys.path.insert(0, str(Path(__file__).resolve().parent))

from config import (
    DEFAULT_SEED,
    LOG_FILE,
    LOG_LEVEL,
    DEFAULT_O_MAX,
    REALTIME_DEADLINE_MS,
    SIM_DEFAULT_DURATION_S,
    SIM_DEFAULT_REPS,
    print_config,
)
from models import (
    EvacuationModelError,
    InstabilityError,
    ProtectionRequirement,
    ReportError,
    load_scenario,
)

logger = logging.getLogger("evacuation_delay")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_UNSTABLE = 2


def setup_logging():
    """Configure logging with both console and file output."""
    root_logger = logging.getLogger()
    if getattr(root_logger, "_evacuation_configured", False):
        return

    if LOG_FILE:
        log_file = Path(LOG_FILE)
        log_file.parent.mkdir(parents=True, exist_ok=True)
    else:
        log_dir = Path(__file__).resolve().parent / "logs"
        log_dir.mkdir(exist_ok=True)
        log_file = log_dir / "evaluator.log"

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)

    file_handler = logging.FileHandler(str(log_file))
    file_handler.setFormatter(formatter)

    root_logger.setLevel(getattr(logging, LOG_LEVEL, logging.INFO))
    root_logger.addHandler(console_handler)
    root_logger.addHandler(file_handler)
    root_logger._evacuation_configured = True


def _resolve_scenario(args, default_name):
    """Scenario from --scenario file, else the named built-in."""
    from scenarios import scenario_by_name

    if getattr(args, "scenario", None):
        return load_scenario(args.scenario)
    return scenario_by_name(args.name or default_name)


def _fmt(value, spec=".1f", missing="N/A"):
    return missing if value is None else format(value, spec)


def _emit(results, args):
    if not args.out:
        return
    from report import emit_report
    emit_report(results, args.format, args.out)
    print(f"[OK] Report written to {args.out}")


# =============================================================================
# Subcommands
# =============================================================================

def cmd_table1(args):
    from scenarios import (
        ScenarioSuite,
        builtin_scenarios,
        check_realtime,
        reproduce_table1,
        simulate_table,
    )

    suite = None
    if args.scenario:
        suite = ScenarioSuite(
            scenarios=tuple(load_scenario(path) for path in args.scenario),
            protection=ProtectionRequirement(delta_max=args.deadline, o_max=args.o_max),
        )
    rows = reproduce_table1(args.mode, suite)
    if args.simulate:
        rows = simulate_table(rows, suite or builtin_scenarios(), args.simulate, args.seed)

    print("=" * 65)
    print(f"Average Channel Evacuation Time ({args.mode} mode)")
    print("=" * 65)
    print(f"{'Scenario':<18} {'C':>7} {'Receivers':>11} {'Net':>6} {'SM':>9} {'Evac (ms)':>12}")
    print("-" * 65)
    for r in rows:
        print(f"{r.name:<18} {r.processors:>7,} {r.tv_receivers:>11,} "
              f"{r.network_latency_ms:>6.0f} {_fmt(r.sm_response_ms):>9} {r.evacuation_label():>12}")

    if args.simulate:
        print("-" * 65)
        for r in rows:
            print(f"{r.name:<18} simulated over {args.simulate:g} s: "
                  f"{_fmt(r.simulated_evacuation_ms)} ms")

    unstable = [r.name for r in rows if not r.stable]
    for name in unstable:
        print(f"[WARN] {name}: queue unstable at prime time")

    results = rows
    if args.check:
        req = ProtectionRequirement(delta_max=args.deadline, o_max=args.o_max)
        verdicts = check_realtime(rows, req, distributional=args.distributional)
        print("-" * 65)
        for v in verdicts:
            label = "[OK]  " if v.passed else "[FAIL]"
            print(f"{label} {v.name:<18} {v.criterion} {_fmt(v.value, '.3f')} vs {v.threshold:g}")
        results = verdicts
    print("=" * 65)

    _emit(results, args)
    if unstable and args.strict:
        return EXIT_UNSTABLE
    return EXIT_OK


def cmd_simulate(args):
    from simulator import report_to_dict, run_replications

    scenario = _resolve_scenario(args, "regional")
    logger.info("=" * 60)
    logger.info(f"Simulating '{scenario.name}': {args.duration:g} s x {args.reps} rep(s), seed {args.seed}")
    logger.info("=" * 60)

    start = time.time()
    report = run_replications(scenario, args.duration, args.seed, args.reps,
                              workers=args.workers, start_hour=args.start_hour)
    summary = report_to_dict(report)

    print("=" * 65)
    print(f"Simulation: {scenario.name}")
    print("=" * 65)
    print(f"Jobs processed:      {summary['jobs_processed']:,} of {summary['jobs_generated']:,}")
    print(f"Evacuating jobs:     {summary['jobs_evacuating']:,}")
    print(f"Evacuated SUs:       {summary['evacuated_sus']:,} ({summary['blocked_sus']:,} blocked)")
    print(f"Mean evacuation:     {_fmt(summary['mean_evacuation_ms'], '.3f')} ms")
    for key, value in summary['evacuation_percentiles_ms'].items():
        print(f"  {key}:               {value:.3f} ms")
    print(f"Protection (<= {summary['delta_max_ms']:g} ms): {_fmt(summary['protection_probability'], '.3f')}")
    print(f"Busy fraction:       {summary['busy_fraction']:.3f}")
    print(f"Max queue length:    {summary['max_queue_length']:,}")
    if summary['queue_length_at_horizon'] > 0:
        print(f"[WARN] {summary['queue_length_at_horizon']:,} job(s) still queued at the horizon")
    print(f"Config digest:       {summary['config_digest'][:16]}")
    print("=" * 65)
    logger.info(f"Simulation finished in {time.time() - start:.1f}s")

    _emit([report], args)
    if args.samples:
        from report import write_samples_csv
        write_samples_csv(report, args.samples)
        print(f"[OK] Samples written to {args.samples}")
    return EXIT_OK


def cmd_sweep(args):
    from scenarios import sweep_centralization

    scenario = _resolve_scenario(args, "semi-national")
    sizes = [int(float(s)) for s in args.sizes.split(",") if s.strip()]
    points = sweep_centralization(scenario, sizes, profile=args.profile, mode=args.mode)

    print("=" * 65)
    print(f"Centralization sweep from '{scenario.name}' ({args.profile} database, {args.mode} mode)")
    print("=" * 65)
    print(f"{'Receivers':>12} {'Query':>8} {'SM':>9} {'Evac':>9} {'Protect':>8} {'Queue':>10}")
    print("-" * 65)
    for p in points:
        queue = _fmt(p.queueing_mean_ms, ".1f", "unstable")
        print(f"{p.tv_receivers:>12,} {p.per_query_ms:>8.2f} {_fmt(p.sm_response_ms):>9} "
              f"{_fmt(p.mean_evacuation_ms):>9} {_fmt(p.protection_probability, '.3f'):>8} {queue:>10}")
    print("=" * 65)

    _emit(points, args)
    return EXIT_OK


def cmd_compose(args):
    from distributions import delay_percentile, export_distribution, protection_probability
    from evacuation import evacuation_distribution

    scenario = _resolve_scenario(args, "regional")
    # raises InstabilityError in queueing mode when rho >= C
    d = evacuation_distribution(scenario, args.mode, args.hour, step=args.step)

    print("=" * 65)
    print(f"Evacuation delay distribution: {scenario.name} ({args.mode} mode)")
    print("=" * 65)
    print(f"Mean:      {d.mean():.3f} ms")
    print(f"Std dev:   {d.variance() ** 0.5:.3f} ms")
    for q in (0.5, 0.95, 0.99):
        print(f"p{q * 100:g}:      {delay_percentile(d, q):.3f} ms")
    print(f"Pr(t_E <= {scenario.protection.delta_max:g} ms): "
          f"{protection_probability(d, scenario.protection):.4f}")
    print("=" * 65)

    if args.out:
        export_distribution(d, args.out, column=args.column, fmt=args.format)
        print(f"[OK] Distribution written to {args.out}")
    return EXIT_OK


def cmd_diurnal(args):
    from evacuation import diurnal_profile

    scenario = _resolve_scenario(args, "semi-national")
    points = diurnal_profile(scenario)

    print("=" * 65)
    print(f"Time-of-day profile: {scenario.name}")
    print("=" * 65)
    print(f"{'Hour':>4} {'phi':>6} {'lambda/s':>10} {'rho':>10} {'P_wait':>8} {'Evac':>9} {'Protect':>8}")
    print("-" * 65)
    for p in points:
        print(f"{p.hour:>4g} {p.phi:>6.3f} {p.arrival_rate:>10.2f} {p.rho:>10.2f} "
              f"{_fmt(p.p_wait, '.4f'):>8} {_fmt(p.mean_evacuation_ms):>9} "
              f"{_fmt(p.protection_probability, '.3f'):>8}")
    print("=" * 65)

    _emit(points, args)
    if args.strict and not all(p.stable for p in points):
        return EXIT_UNSTABLE
    return EXIT_OK


def cmd_config(args):
    print_config()
    return EXIT_OK


# =============================================================================
# Argument Parsing
# =============================================================================

def build_parser():
    parser = argparse.ArgumentParser(
        description="Evacuation Delay Evaluator - channel evacuation time of TV black-space spectrum managers")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario(p):
        p.add_argument('--scenario', type=str, help="Scenario JSON file")
        p.add_argument('--name', type=str, help="Built-in scenario name (if no --scenario)")

    def add_output(p):
        p.add_argument('--out', type=str, help="Write results to this file")
        p.add_argument('--format', choices=("csv", "json"), default="csv", help="Report format")

    p = sub.add_parser('table1', help="Reproduce the average evacuation time table")
    p.add_argument('--scenario', type=str, action='append',
                   help="Scenario JSON file to tabulate instead of the built-ins (repeatable)")
    p.add_argument('--mode', choices=("simple", "queueing"), default="simple")
    p.add_argument('--check', action='store_true', help="Add real-time verdicts")
    p.add_argument('--distributional', action='store_true',
                   help="Judge Pr(t_E <= deadline) >= o_max instead of the mean")
    p.add_argument('--deadline', type=float, default=REALTIME_DEADLINE_MS, help="Deadline in ms")
    p.add_argument('--o-max', type=float, default=DEFAULT_O_MAX, dest='o_max')
    p.add_argument('--strict', action='store_true', help="Exit 2 if any row is unstable")
    p.add_argument('--simulate', type=float, default=None, metavar='SECONDS',
                   help="Add a simulated mean from a run of this many seconds per row")
    p.add_argument('--seed', type=int, default=DEFAULT_SEED, help="Seed for --simulate")
    add_output(p)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser('simulate', help="Discrete-event simulation of a scenario")
    add_scenario(p)
    p.add_argument('--seed', type=int, default=DEFAULT_SEED)
    p.add_argument('--duration', type=float, default=SIM_DEFAULT_DURATION_S, help="Seconds")
    p.add_argument('--reps', type=int, default=SIM_DEFAULT_REPS)
    p.add_argument('--workers', type=int, default=None, help="Worker processes (default MAX_WORKERS)")
    p.add_argument('--start-hour', type=float, default=None, dest='start_hour')
    p.add_argument('--samples', type=str, help="Also dump raw samples to this CSV")
    add_output(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('sweep', help="Evaluate a scenario across manager sizes")
    add_scenario(p)
    p.add_argument('--sizes', type=str, default="1e5,1e6,1e7,4.5e7", help="Comma-separated receivers")
    p.add_argument('--profile', choices=("in-memory", "disk"), default="in-memory")
    p.add_argument('--mode', choices=("simple", "queueing"), default="simple")
    add_output(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser('compose', help="Composed evacuation delay distribution")
    add_scenario(p)
    p.add_argument('--mode', choices=("simple", "queueing"), default="queueing")
    p.add_argument('--hour', type=float, default=None)
    p.add_argument('--step', type=float, default=None, help="Grid step in ms")
    p.add_argument('--column', choices=("density", "cumulative"), default="density")
    p.add_argument('--out', type=str, help="Write the distribution to this file")
    p.add_argument('--format', choices=("csv", "json"), default="csv", help="Distribution file format")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser('diurnal', help="Queueing evaluation at every hour of the day")
    add_scenario(p)
    p.add_argument('--strict', action='store_true', help="Exit 2 if any hour is unstable")
    add_output(p)
    p.set_defaults(func=cmd_diurnal)

    p = sub.add_parser('config', help="Print effective configuration")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None):
    """Main entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    setup_logging()

    try:
        return args.func(args)
    except InstabilityError as e:
        print(f"[ERROR] {e}")
        logger.error(f"Unstable queue: {e}")
        return EXIT_UNSTABLE
    except (EvacuationModelError, OSError) as e:
        # ReportError and ScenarioValidationError included
        kind = "report" if isinstance(e, ReportError) else "input"
        print(f"[ERROR] {e}")
        logger.error(f"Invalid {kind}: {e}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
