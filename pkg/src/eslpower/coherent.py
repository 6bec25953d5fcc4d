"""Minimum-energy beamforming schedule for phase-synchronized antennas.

Receiver ``k`` collects ``sum_n T * alpha * |h_k^T w_n|^2`` of RF energy over
the window. Writing ``X = alpha*T*sum_n w_n w_n^H`` and ``G_k = conj(h_k) h_k^T``
turns the nonconvex beam design into the semidefinite program::

    min tr(X)  s.t.  tr(G_k X) >= E + N*T*beta  for all k,  X PSD

which is solved here by ADMM. Beams are read back from the eigenvectors of
``X``; each eigenvalue above the rank threshold becomes one slot.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .channel import ChannelMatrix
from .errors import DomainError, InfeasibleError, NumericalFailure, ScheduleInfeasible
from .harvester import HarvesterModel


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True, eq=False)
class CoherentProblem:
    channel: ChannelMatrix
    params: object
    harvester: HarvesterModel
    rhs_j: float

    @property
    def receiver_channels(self) -> np.ndarray:
        """``(K, M)`` array whose row ``k`` is ``h_k``."""
        return self.channel.entries.T

    @property
    def gram(self) -> np.ndarray:
        """``(K, M, M)`` stack of ``G_k = conj(h_k) h_k^T``."""
        H = self.receiver_channels
        return H.conj()[:, :, None] * H[:, None, :]

    def coverage(self, X) -> np.ndarray:
        """``tr(G_k X)`` for every receiver."""
        H = self.receiver_channels
        return np.real(np.einsum("km,mn,kn->k", H, X, H.conj()))


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-7
    max_iter: int = 50_000
    rho: float = 1.0
    relaxation: float = 1.6
    adapt_every: int = 25
    adapt_factor: float = 2.0
    adapt_ratio: float = 10.0
    eps_rank: float = 1e-7


@dataclass(eq=False)
class PsdSolution:
    """SDP result in joules of RF energy, with the dual certificate ``y``."""

    X: np.ndarray
    y: np.ndarray
    status: Status
    primal_residual: float
    dual_residual: float
    duality_gap: float
    iterations: int
    problem: CoherentProblem = field(repr=False)

    @property
    def objective_j(self) -> float:
        return float(np.real(np.trace(self.X)))


@dataclass(eq=False)
class PrecoderSchedule:
    """Beams ``w_s`` (rows, units sqrt(W)), each held for ``slot_count_per_beam[s]`` slots."""

    beams: np.ndarray
    slot_count_per_beam: np.ndarray
    slot_duration_s: float

    @property
    def num_beams(self) -> int:
        return len(self.beams)

    @property
    def used_slots(self) -> int:
        return int(np.sum(self.slot_count_per_beam))

    @property
    def slot_power_w(self) -> np.ndarray:
        return np.sum(np.abs(self.beams) ** 2, axis=1)

    @property
    def total_energy_j(self) -> float:
        return float(self.slot_duration_s * np.sum(self.slot_count_per_beam * self.slot_power_w))

    def slot_vectors(self) -> np.ndarray:
        """One row per occupied slot, in beam order."""
        return np.repeat(self.beams, self.slot_count_per_beam, axis=0)

    def received_rf_energy(self, channel: ChannelMatrix) -> np.ndarray:
        """RF energy collected by every receiver over the whole schedule."""
        amp = np.abs(self.beams @ channel.entries) ** 2
        return self.slot_duration_s * (self.slot_count_per_beam @ amp)


def build_coherent_problem(channel: ChannelMatrix, params, harvester: HarvesterModel) -> CoherentProblem:
    M, K = channel.shape
    if (M, K) != (params.num_antennas, params.num_receivers):
        raise DomainError(f"channel is {M}x{K} but parameters specify "
                          f"{params.num_antennas}x{params.num_receivers}")
    rhs = params.required_energy_j + params.window_s * harvester.threshold_w
    return CoherentProblem(channel, params, harvester, rhs)


def _project_psd(W):
    W = (W + W.conj().T) / 2
    lam, Q = np.linalg.eigh(W)
    keep = lam > 0
    return (Q[:, keep] * lam[keep]) @ Q[:, keep].conj().T


_POLISH_BELOW = 1e-3


def _certify(Z, y, Hn, b):
    """Scale ``Z`` up to feasibility and ``y`` down to dual feasibility; return both and the gap."""
    covered = np.real(np.sum((Hn @ Z) * Hn.conj(), axis=1))
    Z = Z * max(float(np.max(b / covered)), 1.0)
    top = np.linalg.eigvalsh(Hn.conj().T @ (y[:, None] * Hn))[-1] if np.any(y > 0) else 0.0
    if top > 1:
        y = y / top
    primal = float(np.real(np.trace(Z)))
    gap = abs(primal - b @ y) / primal if primal > 0 else 0.0
    return Z, y, gap


def _polish(Z, y, Hn, b, rank_tol=1e-6, active_tol=1e-6):
    """Solve the complementarity equations on the current range and active set.

    With ``X = V S V^H`` on the numerical range ``V`` of ``Z`` and only the
    constraints whose multiplier is clearly positive, both ``A(X) = b`` and
    ``V^H A*(y) V = I`` are linear. The result is returned only if it is
    PSD, covers every receiver and is dual feasible after scaling; this
    recovers the exact optimum in cases (typically full-rank ones) where
    plain ADMM converges slowly.
    """
    lam, Q = np.linalg.eigh((Z + Z.conj().T) / 2)
    if lam[-1] <= 0 or not np.any(y > 0):
        return None
    V = Q[:, lam > rank_tol * lam[-1]]
    r = V.shape[1]
    active = np.flatnonzero(y > active_tol * y.max())
    P = Hn[active] @ V
    T = P[:, :, None] * P.conj()[:, None, :]
    iu, ju = np.triu_indices(r, 1)
    d = np.arange(r)
    # Columns: real diagonal of S, then real and imaginary upper entries.
    C = np.concatenate([T[:, d, d].real, 2 * T[:, iu, ju].real, -2 * T[:, iu, ju].imag], axis=1)
    coef = np.linalg.lstsq(C, b[active], rcond=None)[0]
    S = np.zeros((r, r), complex)
    S[d, d] = coef[:r]
    S[iu, ju] = coef[r:r + len(iu)] + 1j * coef[r + len(iu):]
    S[ju, iu] = S[iu, ju].conj()
    half = np.concatenate([np.ones(r), np.full(2 * len(iu), 0.5)])
    target = np.concatenate([np.ones(r), np.zeros(2 * len(iu))])
    y_act = np.linalg.lstsq((C * half).T, target, rcond=None)[0]
    if np.any(y_act < 0):
        return None
    X = V @ S @ V.conj().T
    X = (X + X.conj().T) / 2
    ev = np.linalg.eigvalsh(X)
    if ev[0] < -1e-12 * ev[-1]:
        return None
    if not np.all(np.real(np.sum((Hn @ X) * Hn.conj(), axis=1)) > 0):
        return None
    y_full = np.zeros_like(y)
    y_full[active] = y_act
    return _certify(X, y_full, Hn, b)


def solve_sdp(problem: CoherentProblem, options: SolverOptions = SolverOptions()) -> PsdSolution:
    """ADMM on ``min tr(X) s.t. A(X) = v, v >= rhs, X = Z, Z PSD``.

    Each constraint row is normalized by ``|h_k|^2`` and ``X`` by a common
    scale so the iterates are O(1). Both penalty terms share ``rho``, so the
    affine step ``(I + A*A)^{-1}`` is factored once via the Woodbury identity.
    The returned ``X`` is the PSD iterate scaled up just enough to satisfy
    every constraint, and ``y`` is the dual iterate scaled down just enough to
    satisfy ``sum_k y_k G_k <= I``; the gap between them certifies optimality.

    Once the residuals fall below 1e-3, each check also tries an active-set
    polish (see ``_polish``). A polished pair is accepted only when its
    certified gap is within ``options.tol``; it is then exactly feasible and
    both residuals are reported as zero.
    """
    H = problem.receiver_channels
    K, M = H.shape
    norms = np.sum(np.abs(H) ** 2, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise InfeasibleError(f"receiver {zero[0]} has an all-zero channel", receiver=int(zero[0]))
    if K == 0:
        X = np.zeros((M, M), complex)
        return PsdSolution(X, np.zeros(0), Status.OPTIMAL, 0.0, 0.0, 0.0, 0, problem)

    Hn = H / np.sqrt(norms)[:, None]
    Hn_h = Hn.conj().T
    scale = problem.rhs_j / np.median(norms)
    b = problem.rhs_j / (scale * norms)

    def A(X):
        return np.real(np.sum((Hn @ X) * Hn.conj(), axis=1))

    def At(y):
        return Hn_h @ (y[:, None] * Hn)

    chol = sla.cho_factor(np.eye(K) + np.abs(Hn @ Hn_h) ** 2)
    eye = np.eye(M)
    rho = options.rho
    theta = options.relaxation
    Z = np.zeros((M, M), complex)
    U = np.zeros_like(Z)
    v = b.copy()
    u = np.zeros(K)
    converged = False
    polished = None
    rp_rel = rd_rel = math.inf

    for it in range(1, options.max_iter + 1):
        R = Z - U - eye / rho + At(v - u)
        X = R - At(sla.cho_solve(chol, A(R)))
        AX = A(X)
        X_hat = theta * X + (1 - theta) * Z
        a_hat = theta * AX + (1 - theta) * v
        Z_new = _project_psd(X_hat + U)
        v_new = np.maximum(a_hat + u, b)
        U += X_hat - Z_new
        u += a_hat - v_new
        dZ, dv = Z_new - Z, v_new - v
        Z, v = Z_new, v_new

        if it % options.adapt_every == 0 or it == options.max_iter:
            rp = math.hypot(np.linalg.norm(X - Z), np.linalg.norm(AX - v))
            rd = rho * np.linalg.norm(dZ + At(dv))
            scale_p = max(math.hypot(np.linalg.norm(X), np.linalg.norm(AX)),
                          math.hypot(np.linalg.norm(Z), np.linalg.norm(v)), 1e-300)
            scale_d = max(rho * np.linalg.norm(U + At(u)), 1e-300)
            rp_rel, rd_rel = rp / scale_p, rd / scale_d
            if rp_rel < options.tol and rd_rel < options.tol:
                converged = True
                break
            if max(rp_rel, rd_rel) < _POLISH_BELOW:
                candidate = _polish(Z, np.maximum(-rho * u, 0.0), Hn, b)
                if candidate is not None and candidate[2] <= options.tol:
                    polished, converged = candidate, True
                    break
            if rp_rel > options.adapt_ratio * rd_rel:
                rho *= options.adapt_factor
                U /= options.adapt_factor
                u /= options.adapt_factor
            elif rd_rel > options.adapt_ratio * rp_rel:
                rho /= options.adapt_factor
                U *= options.adapt_factor
                u *= options.adapt_factor

    if polished is None:
        Z = (Z + Z.conj().T) / 2
        if not np.all(A(Z) > 0):
            raise NumericalFailure(f"ADMM produced an uncovered receiver after {it} iterations")
        Z, y, gap = _certify(Z, np.maximum(-rho * u, 0.0), Hn, b)
    else:
        Z, y, gap = polished
        rp_rel = rd_rel = 0.0

    status = Status.OPTIMAL if converged else Status.NUMERICAL_FAILURE
    return PsdSolution(
        X=scale * Z,
        y=y / norms,
        status=status,
        primal_residual=float(rp_rel),
        dual_residual=float(rd_rel),
        duality_gap=float(gap),
        iterations=it,
        problem=problem,
    )


def _canonical_phase(vec):
    """Rotate so the largest-magnitude entry (lowest index on ties) is real positive."""
    i = int(np.argmax(np.abs(vec)))
    if vec[i] == 0:
        return vec
    out = vec * (abs(vec[i]) / vec[i])
    out[i] = abs(vec[i])
    return out


def recover_precoders(solution: PsdSolution, params, harvester: HarvesterModel,
                      eps_rank: float = 1e-7) -> PrecoderSchedule:
    """Split ``X`` into beams by eigendecomposition.

    Eigenvalues below ``eps_rank * lambda_max`` are discarded. If dropping
    them leaves a receiver short, the kept part is scaled up by the smallest
    factor that restores every constraint. Beam ``s`` carries
    ``lambda_s / (alpha * T)`` watts for one slot.
    """
    if solution.status != Status.OPTIMAL:
        raise NumericalFailure(f"cannot recover beams from a {solution.status.value} solution")
    X = (solution.X + solution.X.conj().T) / 2
    lam, Q = np.linalg.eigh(X)
    M = X.shape[0]
    if M == 0 or lam[-1] <= 0:
        return PrecoderSchedule(np.zeros((0, M), complex), np.zeros(0, int), params.slot_duration_s)
    if lam[0] < -1e-8 * lam[-1]:
        raise NumericalFailure(f"X has eigenvalue {lam[0]:.3e} below tolerance")
    order = np.argsort(-lam, kind="stable")
    lam, Q = lam[order], Q[:, order]
    keep = lam >= eps_rank * lam[0]
    lam, Q = lam[keep], Q[:, keep]

    problem = solution.problem
    truncated = (Q * lam) @ Q.conj().T
    covered = problem.coverage(truncated)
    if len(covered):
        if np.any(covered <= 0):
            k = int(np.argmin(covered))
            raise NumericalFailure(f"rank truncation removed all energy reaching receiver {k}")
        lam = lam * max(1.0, float(np.max(problem.rhs_j / covered)))

    T = params.slot_duration_s
    power = lam / (harvester.efficiency * T)
    beams = np.array([_canonical_phase(Q[:, s]) * math.sqrt(power[s]) for s in range(len(lam))])
    return PrecoderSchedule(beams.reshape(len(lam), M), np.ones(len(lam), dtype=int), T)


def enforce_slot_power_cap(schedule: PrecoderSchedule, max_power_w: float,
                           num_slots: int) -> PrecoderSchedule:
    """Spread every over-cap beam evenly across ``ceil(p / P_max)`` slots.

    Dividing a beam by ``sqrt(c)`` and holding it ``c`` times as long leaves
    every receiver's energy unchanged.
    """
    power = schedule.slot_power_w
    counts = np.ceil(power / max_power_w).astype(int)
    counts = np.maximum(counts, 1)
    over = counts > 1
    if not np.any(over):
        return schedule
    new_counts = schedule.slot_count_per_beam * counts
    required = int(np.sum(new_counts))
    if required > num_slots:
        raise ScheduleInfeasible(
            f"per-slot cap needs {required} slots but only {num_slots} are available", required)
    beams = schedule.beams / np.sqrt(counts)[:, None]
    return replace(schedule, beams=beams, slot_count_per_beam=new_counts)


@dataclass(frozen=True)
class KKTReport:
    primal_infeasibility: float
    dual_infeasibility: float
    complementary_slackness: float
    duality_gap: float

    def as_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


def kkt_report(problem: CoherentProblem, solution: PsdSolution) -> KKTReport:
    """Optimality residuals of ``solution`` against the SDP and its dual.

    The dual is ``max rhs * sum(y) s.t. sum_k y_k G_k <= I, y >= 0``.
    Complementary slackness is reported relative to ``tr(X)``.
    """
    X = solution.X
    y = np.asarray(solution.y, dtype=float)
    rhs = problem.rhs_j
    cov = problem.coverage(X)
    trace = float(np.real(np.trace(X)))
    H = problem.receiver_channels
    dual_matrix = H.conj().T @ (y[:, None] * H)
    lam_max = float(np.linalg.eigvalsh((dual_matrix + dual_matrix.conj().T) / 2)[-1]) if len(y) else 0.0
    primal = float(np.max(np.maximum(rhs - cov, 0.0)) / rhs) if len(cov) else 0.0
    slack = float(np.sum(y * (cov - rhs)))
    dual_obj = rhs * float(np.sum(y))
    return KKTReport(
        primal_infeasibility=primal,
        dual_infeasibility=lam_max - 1.0,
        complementary_slackness=slack / trace if trace > 0 else abs(slack),
        duality_gap=abs(trace - dual_obj) / trace if trace > 0 else abs(dual_obj),
    )
