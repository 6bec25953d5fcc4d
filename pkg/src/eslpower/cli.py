"""Command-line front end.

Exit codes: 0 success, 1 configuration or input error, 2 infeasible problem,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import coherent, noncoherent
from .channel import synthesize_channel
from .config import RunConfig, load_config
from .errors import ConfigurationError, EslPowerError, IngestionError, ScheduleInfeasible
from .evaluation import (cdf, evaluate_coherent, evaluate_noncoherent, ingest_measurements,
                         run_point, selection_seed, SweepJob)
from .harvester import HarvesterModel
from .io import (SWEEP_HEADER, allocation_from_csv, allocation_to_csv, atomic_write, cdf_to_csv,
                 channel_from_csv, channel_to_csv, dumps_json, geometry_to_csv, read_sweep_rows,
                 rows_to_csv, schedule_from_csv, schedule_to_csv, selection_to_csv, sweep_row)
from .scenario import build_default_scenario, geometry_rows
from .selection import select_subset

log = logging.getLogger("eslpower")

OUT_ENV = "ESLPOWER_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3


def _parse_counts(text):
    try:
        return [int(c) for c in text.split(",") if c.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad antenna count list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration JSON")
    common.add_argument("--seed", type=int, help="channel seed (overrides config seeds)")
    common.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./eslpower-out)")
    common.add_argument("--mode", choices=["noncoherent", "coherent"])
    common.add_argument("--counts", type=_parse_counts, help="comma-separated antenna counts")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="eslpower", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("scenario", parents=[common], help="write parameters and geometry")
    sub.add_parser("channel", parents=[common], help="write one channel realization")
    sub.add_parser("select", parents=[common], help="write k-means antenna subsets")
    solve = sub.add_parser("solve", parents=[common], help="solve the full scenario once")
    solve.add_argument("--enforce-cap", action="store_true", help="split beams to respect P_max per slot")
    sweep = sub.add_parser("sweep", parents=[common], help="antenna-count sweep")
    sweep.add_argument("--enforce-cap", action="store_true")
    ev = sub.add_parser("evaluate", parents=[common], help="evaluate a stored allocation or schedule")
    ev.add_argument("--channel", type=Path, required=True)
    group = ev.add_mutually_exclusive_group(required=True)
    group.add_argument("--allocation", type=Path)
    group.add_argument("--schedule", type=Path)
    ingest = sub.add_parser("ingest", parents=[common], help="convert measured RF powers to DC energy")
    ingest.add_argument("--measurements", type=Path, required=True)
    ingest.add_argument("--tx-power-w", type=float, help="total transmit power used in the measurement")
    return parser


def _resolve(args) -> tuple[RunConfig, Path]:
    config = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.seed is not None:
        changes["seeds"] = (args.seed,)
    if args.mode:
        changes["mode"] = args.mode
    if args.counts:
        changes["antenna_counts"] = tuple(args.counts)
    if getattr(args, "enforce_cap", False):
        changes["enforce_cap"] = True
    if changes:
        config = RunConfig(**{**config.__dict__, **changes})
    out = args.out or (Path(config.output_dir) if config.output_dir else None) \
        or Path(os.environ.get(OUT_ENV, "eslpower-out"))
    return config, out


def _scenario(config: RunConfig):
    return build_default_scenario(config.scenario, config.geometry_obj(), config.selection_seed)


def _write_report(out: Path, report) -> None:
    atomic_write(out / "report.json", dumps_json(report.to_dict()))
    atomic_write(out / "cdf.csv", cdf_to_csv(cdf(report.clamped_energies())))


def cmd_scenario(config, out) -> int:
    s = _scenario(config)
    atomic_write(out / "scenario.json", s.params.to_json())
    atomic_write(out / "geometry.csv", geometry_to_csv(geometry_rows(s)))
    return EXIT_OK


def cmd_channel(config, out) -> int:
    s = _scenario(config)
    ch = synthesize_channel(s.antennas, s.devices, s.params, seed=config.seeds[0])
    atomic_write(out / "channel.csv", channel_to_csv(ch))
    return EXIT_OK


def cmd_select(config, out) -> int:
    s = _scenario(config)
    for m in config.antenna_counts:
        res = select_subset(s.antennas, m, selection_seed(config.selection_seed, m))
        atomic_write(out / f"selection_m{m}.csv", selection_to_csv(res, s.antennas))
    return EXIT_OK


def cmd_solve(config, out) -> int:
    s = _scenario(config)
    p = s.params
    harvester = HarvesterModel.from_params(p)
    ch = synthesize_channel(s.antennas, s.devices, p, seed=config.seeds[0])
    atomic_write(out / "channel.csv", channel_to_csv(ch))

    if config.mode == "noncoherent":
        problem = noncoherent.NoncoherentProblem(ch.gains, p, harvester)
        alloc = noncoherent.solve_noncoherent(problem)
        if alloc.status == noncoherent.Status.INFEASIBLE:
            log.error("infeasible: receiver %s cannot be charged at full power", alloc.worst_receiver)
            return EXIT_INFEASIBLE
        if alloc.status != noncoherent.Status.OPTIMAL:
            log.error("LP solver failed: %s", alloc.solver_stats)
            return EXIT_NUMERICAL
        atomic_write(out / "allocation.csv", allocation_to_csv(alloc.per_antenna_w))
        _write_report(out, evaluate_noncoherent(alloc, problem))
        return EXIT_OK

    problem = coherent.build_coherent_problem(ch, p, harvester)
    solution = coherent.solve_sdp(problem, config.solver)
    kkt = coherent.kkt_report(problem, solution)
    summary = {
        "status": solution.status.value,
        "objective_j": solution.objective_j,
        "iterations": solution.iterations,
        "residuals": {"primal": solution.primal_residual, "dual": solution.dual_residual,
                      **kkt.as_dict()},
    }
    if solution.status != coherent.Status.OPTIMAL:
        atomic_write(out / "summary.json", dumps_json(summary))
        log.error("SDP solver stopped after %d iterations", solution.iterations)
        return EXIT_NUMERICAL
    schedule = coherent.recover_precoders(solution, p, harvester, config.solver.eps_rank)
    summary["S"] = schedule.num_beams
    if config.enforce_cap:
        try:
            schedule = coherent.enforce_slot_power_cap(schedule, p.max_power_per_antenna_w, p.num_slots)
        except ScheduleInfeasible as exc:
            summary["required_slots"] = exc.required_slots
            atomic_write(out / "summary.json", dumps_json(summary))
            log.error("%s", exc)
            return EXIT_INFEASIBLE
    summary["used_slots"] = schedule.used_slots
    atomic_write(out / "summary.json", dumps_json(summary))
    atomic_write(out / "schedule.csv", schedule_to_csv(schedule))
    _write_report(out, evaluate_coherent(schedule, ch, p, harvester))
    return EXIT_OK


def cmd_sweep(config, out) -> int:
    """Append missing (count, seed) rows to ``sweep_<mode>.csv``.

    Rows already present are kept as they are, so an interrupted sweep
    resumes where it stopped.
    """
    s = _scenario(config)
    path = out / f"sweep_{config.mode}.csv"
    done = read_sweep_rows(path)
    rows = dict(done)
    worst = EXIT_OK
    for m in config.antenna_counts:
        for seed in config.seeds:
            if (m, seed) in rows:
                continue
            log.info("sweep m=%d seed=%d", m, seed)
            run = run_point(s, SweepJob(m, seed, config.mode, config.enforce_cap,
                                        config.selection_seed, config.solver))
            rows[m, seed] = [str(x) for x in sweep_row(run)]
            # Persist after every point so a crash loses at most one job.
            atomic_write(path, rows_to_csv(SWEEP_HEADER, [rows[k] for k in sorted(rows)]))
    for row in rows.values():
        status = row[-1]
        if status == "numerical_failure":
            worst = max(worst, EXIT_NUMERICAL)
        elif status == "infeasible":
            worst = max(worst, EXIT_INFEASIBLE)
    atomic_write(path, rows_to_csv(SWEEP_HEADER, [rows[k] for k in sorted(rows)]))
    return worst


def cmd_evaluate(config, out, args) -> int:
    s = _scenario(config)
    p = s.params
    harvester = HarvesterModel.from_params(p)
    ch = channel_from_csv(args.channel.read_text())
    p = p.replace(num_antennas=ch.shape[0], num_receivers=ch.shape[1])
    if args.allocation:
        q = allocation_from_csv(args.allocation.read_text())
        problem = noncoherent.NoncoherentProblem(ch.gains, p, harvester)
        alloc = noncoherent.PowerAllocation(q, p.window_s * q.sum(), noncoherent.Status.OPTIMAL)
        report = evaluate_noncoherent(alloc, problem)
    else:
        schedule = schedule_from_csv(args.schedule.read_text(), p.slot_duration_s)
        report = evaluate_coherent(schedule, ch, p, harvester)
    _write_report(out, report)
    return EXIT_OK


def cmd_ingest(config, out, args) -> int:
    s = _scenario(config)
    harvester = HarvesterModel.from_params(s.params)
    report = ingest_measurements(args.measurements, s.params, harvester, args.tx_power_w)
    _write_report(out, report)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config, out = _resolve(args)
        if args.command in ("evaluate", "ingest"):
            handler = {"evaluate": cmd_evaluate, "ingest": cmd_ingest}[args.command]
            return handler(config, out, args)
        handler = {"scenario": cmd_scenario, "channel": cmd_channel, "select": cmd_select,
                   "solve": cmd_solve, "sweep": cmd_sweep}[args.command]
        return handler(config, out)
    except (ConfigurationError, IngestionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EslPowerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE if "Infeasible" in type(exc).__name__ else EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
