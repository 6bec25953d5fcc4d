"""Performance metrics, antenna-count sweeps and testbed measurement ingestion.

Transmit powers are reported as continuous equivalents: the total transmit
energy spread over the whole charging window.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import coherent, noncoherent
from .channel import DEFAULT_PATHLOSS, ChannelMatrix, synthesize_channel
from .errors import DomainError, EslPowerError, IngestionError, ScheduleInfeasible
from .harvester import HarvesterModel
from .selection import select_subset
from .units import w_to_dbm

MODES = ("noncoherent", "coherent", "measured")


@dataclass(eq=False)
class EnergyReport:
    per_receiver_energy_j: np.ndarray
    total_avg_tx_power_w: float | None
    active_antennas: int
    used_slots: int
    mode: str
    status: str = "optimal"

    def clamped_energies(self) -> np.ndarray:
        return np.maximum(self.per_receiver_energy_j, 0.0)

    def to_dict(self) -> dict:
        power = self.total_avg_tx_power_w
        return {
            "mode": self.mode,
            "status": self.status,
            "total_avg_tx_power_w": power,
            "total_avg_tx_power_dbm": w_to_dbm(power) if power else None,
            "active_antennas": int(self.active_antennas),
            "used_slots": int(self.used_slots),
            "energies": [float(e) for e in self.clamped_energies()],
        }


def _active(per_antenna, rel_threshold=0.01) -> int:
    per_antenna = np.asarray(per_antenna)
    top = per_antenna.max(initial=0.0)
    return int(np.count_nonzero(per_antenna > rel_threshold * top)) if top > 0 else 0


def evaluate_noncoherent(allocation: noncoherent.PowerAllocation,
                         problem: noncoherent.NoncoherentProblem) -> EnergyReport:
    p = problem.params
    energies = p.window_s * noncoherent.expected_dc_power(allocation, problem)
    return EnergyReport(
        per_receiver_energy_j=energies,
        total_avg_tx_power_w=allocation.total_power_w,
        active_antennas=noncoherent.active_antenna_count(allocation, 0.01),
        used_slots=p.num_slots,
        mode="noncoherent",
        status=allocation.status.value,
    )


def evaluate_coherent(schedule: coherent.PrecoderSchedule, channel: ChannelMatrix, params,
                      harvester: HarvesterModel) -> EnergyReport:
    rf = schedule.received_rf_energy(channel)
    energies = harvester.efficiency * rf - params.window_s * harvester.threshold_w
    per_antenna = schedule.slot_duration_s * (
        schedule.slot_count_per_beam @ (np.abs(schedule.beams) ** 2)) if schedule.num_beams else np.zeros(channel.shape[0])
    return EnergyReport(
        per_receiver_energy_j=energies,
        total_avg_tx_power_w=schedule.total_energy_j / params.window_s,
        active_antennas=_active(per_antenna),
        used_slots=schedule.used_slots,
        mode="coherent",
    )


def cdf(values) -> list[tuple[float, float]]:
    """Empirical CDF points ``(value, i / n)``, values ascending."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise DomainError("cdf of an empty sample")
    n = v.size
    return [(float(x), (i + 1) / n) for i, x in enumerate(v)]


def interquartile_range(values) -> float:
    q1, q3 = np.percentile(np.asarray(values, dtype=float), [25, 75])
    return float(q3 - q1)


def scale_allocation_to_cap(allocation: noncoherent.PowerAllocation,
                            cap_w: float) -> noncoherent.PowerAllocation:
    """Scale all antenna powers so the strongest equals ``cap_w``."""
    if not cap_w > 0:
        raise DomainError("cap must be positive")
    q = np.asarray(allocation.per_antenna_w, dtype=float)
    top = q.max(initial=0.0)
    if top <= 0:
        raise DomainError("cannot scale an all-zero allocation")
    factor = cap_w / top
    return replace(allocation, per_antenna_w=q * factor, objective_j=allocation.objective_j * factor)


def read_measurements(source, num_receivers: int) -> np.ndarray:
    """Average RF power per receiver from a ``receiver_id,avg_rf_power_w`` CSV.

    ``source`` is a path or an open text stream. Row numbers in errors count
    the header as row 1.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return read_measurements(fh, num_receivers)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["receiver_id", "avg_rf_power_w"]:
        raise IngestionError("header must be 'receiver_id,avg_rf_power_w'", row=1)
    power = np.full(num_receivers, np.nan)
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise IngestionError(f"expected 2 columns, got {len(row)}", row=row_no)
        try:
            rid = int(row[0])
            value = float(row[1])
        except ValueError as exc:
            raise IngestionError(str(exc), row=row_no) from None
        if not 0 <= rid < num_receivers:
            raise IngestionError(f"receiver {rid} outside 0..{num_receivers - 1}", row=row_no)
        if not math.isnan(power[rid]):
            raise IngestionError(f"duplicate receiver {rid}", row=row_no)
        if not (math.isfinite(value) and value >= 0):
            raise IngestionError(f"power must be non-negative, got {value}", row=row_no)
        power[rid] = value
    missing = np.flatnonzero(np.isnan(power))
    if missing.size:
        raise IngestionError(f"missing receivers {missing[:10].tolist()}")
    return power


def ingest_measurements(source, params, harvester: HarvesterModel,
                        tx_power_w: float | None = None) -> EnergyReport:
    """DC energy from measured average RF power, ``alpha * p_rf * N * T``.

    The harvester threshold is not subtracted: the testbed cannot reach the
    power levels at which it matters.
    """
    power = read_measurements(source, params.num_receivers)
    return EnergyReport(
        per_receiver_energy_j=harvester.efficiency * power * params.window_s,
        total_avg_tx_power_w=tx_power_w,
        active_antennas=0,
        used_slots=params.num_slots,
        mode="measured",
    )


def measurement_csv(rf_power_w) -> str:
    """Render per-receiver RF powers in the ingestion format."""
    buf = io.StringIO()
    buf.write("receiver_id,avg_rf_power_w\n")
    for k, p in enumerate(rf_power_w):
        buf.write(f"{k},{float(p)!r}\n")
    return buf.getvalue()


# --------------------------------------------------------------------------
# Antenna-count sweeps


def selection_seed(base_seed: int, count: int) -> int:
    """k-means seed for one antenna count: first word of SeedSequence([base, count])."""
    return int(np.random.SeedSequence([base_seed, count]).generate_state(1)[0])


@dataclass(eq=False)
class SweepRun:
    count: int
    seed: int
    status: str
    report: EnergyReport | None
    chosen_indices: np.ndarray | None = None
    cap_feasible: bool | None = None


@dataclass(frozen=True)
class SweepPoint:
    count: int
    mean_power_w: float
    min_power_w: float
    max_power_w: float
    mean_active_antennas: float
    mean_used_slots: float
    completed: int


@dataclass(eq=False)
class SweepResult:
    antenna_counts: list
    seeds: list
    mode: str
    runs: list = field(default_factory=list)

    def runs_for(self, count: int) -> list:
        return [r for r in self.runs if r.count == count]

    def points(self) -> list:
        out = []
        for m in self.antenna_counts:
            ok = [r.report for r in self.runs_for(m) if r.report is not None]
            power = np.array([r.total_avg_tx_power_w for r in ok]) if ok else np.array([np.nan])
            out.append(SweepPoint(
                count=m,
                mean_power_w=float(np.mean(power)),
                min_power_w=float(np.min(power)),
                max_power_w=float(np.max(power)),
                mean_active_antennas=float(np.mean([r.active_antennas for r in ok])) if ok else math.nan,
                mean_used_slots=float(np.mean([r.used_slots for r in ok])) if ok else math.nan,
                completed=len(ok),
            ))
        return out

    def mean_power_w(self, count: int) -> float:
        return next(p.mean_power_w for p in self.points() if p.count == count)

    def pooled_energies(self, count: int) -> np.ndarray:
        return np.concatenate([r.report.per_receiver_energy_j for r in self.runs_for(count)
                               if r.report is not None])


@dataclass(frozen=True)
class SweepJob:
    count: int
    seed: int
    mode: str
    enforce_cap: bool = False
    selection_base_seed: int = 0
    options: coherent.SolverOptions = coherent.SolverOptions()


def run_point(scenario, job: SweepJob, pathloss=DEFAULT_PATHLOSS) -> SweepRun:
    """Solve and evaluate one (antenna count, channel seed) pair.

    The full channel is drawn from the seed and then restricted to the chosen
    antennas, so all counts of one seed share the same link realizations.
    The number of slots follows the number of antennas.
    """
    params = scenario.params
    M_full = len(scenario.antennas)
    if not 1 <= job.count <= M_full:
        raise DomainError(f"antenna count {job.count} outside [1, {M_full}]")
    harvester = HarvesterModel.from_params(params)
    if job.count == M_full:
        chosen = np.arange(M_full)
    else:
        chosen = select_subset(scenario.antennas, job.count,
                               selection_seed(job.selection_base_seed, job.count)).chosen_indices
    full = synthesize_channel(scenario.antennas, scenario.devices, params, pathloss, job.seed)
    channel = full.restrict(antennas=chosen)
    sub_params = params.replace(num_antennas=job.count, num_slots=job.count)

    if job.mode == "noncoherent":
        problem = noncoherent.NoncoherentProblem(channel.gains, sub_params, harvester)
        alloc = noncoherent.solve_noncoherent(problem)
        if alloc.status != noncoherent.Status.OPTIMAL:
            return SweepRun(job.count, job.seed, alloc.status.value, None, chosen)
        return SweepRun(job.count, job.seed, "optimal", evaluate_noncoherent(alloc, problem), chosen)

    if job.mode != "coherent":
        raise DomainError(f"unknown mode {job.mode!r}")
    try:
        problem = coherent.build_coherent_problem(channel, sub_params, harvester)
        solution = coherent.solve_sdp(problem, job.options)
        if solution.status != coherent.Status.OPTIMAL:
            return SweepRun(job.count, job.seed, solution.status.value, None, chosen)
        schedule = coherent.recover_precoders(solution, sub_params, harvester, job.options.eps_rank)
    except EslPowerError as exc:
        status = "infeasible" if "infeasib" in type(exc).__name__.lower() else "numerical_failure"
        return SweepRun(job.count, job.seed, status, None, chosen)
    cap_ok = True
    try:
        capped = coherent.enforce_slot_power_cap(schedule, params.max_power_per_antenna_w, job.count)
    except ScheduleInfeasible:
        cap_ok, capped = False, None
    if job.enforce_cap:
        if not cap_ok:
            return SweepRun(job.count, job.seed, "infeasible", None, chosen, False)
        schedule = capped
    report = evaluate_coherent(schedule, channel, sub_params, harvester)
    return SweepRun(job.count, job.seed, "optimal", report, chosen, cap_ok)


def _run_job(args):
    scenario, job, pathloss = args
    return run_point(scenario, job, pathloss)


def sweep_antennas(scenario, counts, seeds, mode: str, *, enforce_cap: bool = False,
                   options: coherent.SolverOptions = coherent.SolverOptions(),
                   selection_base_seed: int = 0, pathloss=DEFAULT_PATHLOSS,
                   workers: int = 1) -> SweepResult:
    """Run every (count, seed) pair; failures are recorded in their run."""
    counts = [int(c) for c in counts]
    if any(b <= a for a, b in zip(counts, counts[1:])):
        raise DomainError("antenna counts must be strictly increasing")
    jobs = [SweepJob(c, int(s), mode, enforce_cap, selection_base_seed, options)
            for c in counts for s in seeds]
    args = [(scenario, job, pathloss) for job in jobs]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            runs = list(pool.map(_run_job, args))
    else:
        runs = [_run_job(a) for a in args]
    return SweepResult(counts, [int(s) for s in seeds], mode, runs)
