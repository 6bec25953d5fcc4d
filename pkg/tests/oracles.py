"""Independent reference computations used as test oracles."""
import numpy as np


def greedy_fill(gains, target, upper):
    """Exact optimum of ``min sum(q) s.t. gains @ q >= target, 0 <= q <= upper``.

    Filling the antennas with the largest gain first is optimal for a single
    covering constraint with box bounds (fractional knapsack argument).
    """
    gains = np.asarray(gains, dtype=float)
    order = np.argsort(-gains, kind="stable")
    q = np.zeros_like(gains)
    need = target
    for m in order:
        if need <= 0:
            break
        take = min(upper, need / gains[m])
        q[m] = take
        need -= take * gains[m]
    if need > 1e-15 * target:
        return None
    return q


def rank_one_sdp(h, rhs):
    """Optimal X for a single receiver: all energy on the matched beam."""
    h = np.asarray(h, dtype=complex)
    u = h.conj() / np.linalg.norm(h)
    norm2 = np.vdot(h, h).real
    return rhs / norm2 * np.outer(u, u.conj())


def random_channel(rng, M, K, scale=1e-4):
    amp = np.sqrt(scale * rng.uniform(0.2, 1.0, size=(M, K)))
    return amp * np.exp(-1j * rng.uniform(0, 2 * np.pi, size=(M, K)))
