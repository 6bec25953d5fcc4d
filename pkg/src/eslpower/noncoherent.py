"""Minimum-energy power allocation for phase-unsynchronized antennas.

With independent uniform phases the expected RF power at a receiver is the
gain-weighted sum of the antenna powers, so the harvested DC power of
receiver ``k`` in slot ``n`` is ``alpha * sum_m g[m, k] * p[m, n] - beta``.
Every constraint depends on the schedule only through the per-antenna time
average, hence the ``M * N`` variable problem collapses to an ``M`` variable
LP over constant powers ``q``::

    min  sum(q)
    s.t. alpha * g[:, k] @ q >= E / (N T) + beta    for every receiver k
         0 <= q <= P_max

The LP is solved exactly by running the simplex method on its dual, whose
origin is feasible; the optimal powers are the dual's shadow prices.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalFailure
from .harvester import HarvesterModel
from .simplex import Unbounded, simplex_max


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True, eq=False)
class NoncoherentProblem:
    gains: np.ndarray
    params: object
    harvester: HarvesterModel = HarvesterModel()

    def __post_init__(self):
        gains = np.array(self.gains, dtype=float)
        if gains.ndim != 2:
            raise DomainError("gains must be an (M, K) matrix")
        if np.any(~(gains > 0)):
            raise DomainError("gains must be strictly positive")
        M, K = gains.shape
        if (M, K) != (self.params.num_antennas, self.params.num_receivers) and K > 0:
            raise DomainError(
                f"gains are {M}x{K} but parameters specify "
                f"{self.params.num_antennas}x{self.params.num_receivers}")
        gains.setflags(write=False)
        object.__setattr__(self, "gains", gains)

    @property
    def target_dc_power_w(self) -> float:
        """Average DC power each receiver must net over the window."""
        return self.params.required_energy_j / self.params.window_s


@dataclass(frozen=True, eq=False)
class StaticLP:
    """``min cost@q s.t. coverage@q >= rhs, 0 <= q <= upper``."""

    coverage: np.ndarray
    rhs: float
    upper: float
    cost: np.ndarray


@dataclass(eq=False)
class PowerAllocation:
    per_antenna_w: np.ndarray
    objective_j: float
    status: Status
    solver_stats: dict = field(default_factory=dict)
    worst_receiver: int | None = None

    @property
    def total_power_w(self) -> float:
        return float(np.sum(self.per_antenna_w))


def reduce_to_static(problem: NoncoherentProblem) -> StaticLP:
    p = problem.params
    M = problem.gains.shape[0]
    return StaticLP(
        coverage=problem.harvester.efficiency * problem.gains.T,
        rhs=problem.target_dc_power_w + problem.harvester.threshold_w,
        upper=p.max_power_per_antenna_w,
        cost=np.ones(M),
    )


def solve_noncoherent(problem: NoncoherentProblem, *, max_pivots: int = 10**6,
                      feas_tol: float = 1e-8) -> PowerAllocation:
    """Optimal constant per-antenna powers.

    An infeasible problem (some receiver short of energy even with every
    antenna at ``P_max``) returns status ``infeasible`` with the worst
    receiver's index rather than raising.
    """
    lp = reduce_to_static(problem)
    p = problem.params
    M, K = problem.gains.shape
    slot_energy = p.window_s

    if K == 0 or lp.rhs == 0:
        q = np.zeros(M)
        return PowerAllocation(q, 0.0, Status.OPTIMAL, {"pivots": 0})

    full_power = lp.coverage @ np.full(M, lp.upper)
    if np.any(full_power < lp.rhs * (1 - feas_tol)):
        worst = int(np.argmin(full_power))
        return PowerAllocation(
            np.full(M, lp.upper), slot_energy * M * lp.upper, Status.INFEASIBLE,
            {"shortfall": float(1 - full_power[worst] / lp.rhs)}, worst_receiver=worst)

    # Rows scaled to unit right-hand side.
    A = lp.coverage / lp.rhs
    c = np.concatenate([np.ones(K), -lp.upper * np.ones(M)])
    dual_A = np.hstack([A.T, -np.eye(M)])
    try:
        res = simplex_max(c, dual_A, np.ones(M), max_pivots=max_pivots)
    except (Unbounded, NumericalFailure) as exc:
        return PowerAllocation(np.zeros(M), float("nan"), Status.NUMERICAL_FAILURE,
                               {"message": str(exc)})

    q = np.clip(res.duals, 0.0, lp.upper)
    y = np.maximum(res.x[:K], 0.0)
    z = np.maximum(res.x[K:], 0.0)
    slack = A @ q - 1.0
    reduced = 1.0 - A.T @ y + z
    total = float(q.sum())
    dual_obj = float(y.sum() - lp.upper * z.sum())
    stats = {
        "pivots": res.pivots,
        "bland": res.bland,
        "primal_residual": float(np.max(np.maximum(-slack, 0.0))),
        "dual_residual": float(np.max(np.maximum(-reduced, 0.0))),
        "complementarity": float(max(np.max(np.abs(y * slack)),
                                     np.max(np.abs(z * (lp.upper - q))),
                                     np.max(np.abs(q * reduced)))),
        "gap": abs(total - dual_obj) / max(total, 1e-300),
        "coverage_duals": y / lp.rhs,
        "bound_duals": z,
    }
    if stats["primal_residual"] > feas_tol:
        return PowerAllocation(q, slot_energy * total, Status.NUMERICAL_FAILURE, stats)
    return PowerAllocation(q, slot_energy * total, Status.OPTIMAL, stats)


def expected_dc_power(allocation: PowerAllocation, problem: NoncoherentProblem) -> np.ndarray:
    """Phase-averaged DC power at every receiver (W, may be negative)."""
    h = problem.harvester
    return h.efficiency * (problem.gains.T @ allocation.per_antenna_w) - h.threshold_w


def active_antenna_count(allocation: PowerAllocation, rel_threshold: float = 0.01) -> int:
    """Number of antennas above ``rel_threshold`` times the strongest one."""
    if not 0 < rel_threshold < 1:
        raise DomainError("rel_threshold must lie in (0, 1)")
    q = np.asarray(allocation.per_antenna_w)
    top = q.max(initial=0.0)
    if top <= 0:
        return 0
    return int(np.count_nonzero(q > rel_threshold * top))
