import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from eslpower.harvester import HarvesterModel, delivered_dc_energy
from eslpower.noncoherent import (NoncoherentProblem, PowerAllocation, Status,
                                  active_antenna_count, expected_dc_power, reduce_to_static,
                                  solve_noncoherent)
from eslpower.scenario import SystemParameters
from oracles import greedy_fill

H = HarvesterModel()


def make_problem(gains, **overrides):
    M, K = gains.shape
    params = SystemParameters(num_antennas=M, num_receivers=max(K, 1), num_slots=M, **overrides)
    return NoncoherentProblem(gains, params, H)


def random_gains(seed, M, K, scale=1e-3):
    rng = np.random.default_rng(seed)
    return scale * rng.uniform(0.05, 1.0, size=(M, K))


def highs_optimum(problem):
    lp = reduce_to_static(problem)
    res = linprog(lp.cost, A_ub=-lp.coverage / lp.rhs, b_ub=-np.ones(len(lp.coverage)),
                  bounds=(0, lp.upper), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    assert res.status == 0
    return res.fun


def test_scalar_instance_constraint():
    problem = make_problem(np.array([[2e-4]]))
    lp = reduce_to_static(problem)
    assert lp.coverage[0, 0] == pytest.approx(0.16 * 2e-4)
    assert lp.rhs == pytest.approx(0.5 / 43200 + 1.58e-5)
    alloc = solve_noncoherent(problem)
    assert alloc.per_antenna_w[0] == pytest.approx(lp.rhs / (0.16 * 2e-4), rel=1e-12)


def test_no_receivers_gives_zero_power():
    problem = make_problem(np.zeros((4, 0)))
    alloc = solve_noncoherent(problem)
    assert alloc.status == Status.OPTIMAL
    assert np.all(alloc.per_antenna_w == 0)
    assert alloc.objective_j == 0


@pytest.mark.parametrize("seed", range(5))
def test_time_average_of_feasible_schedule(seed):
    rng = np.random.default_rng(seed)
    M, K, N = 5, 7, 6
    gains = random_gains(seed, M, K)
    sched = rng.uniform(0, 4, size=(M, N))
    T = 100.0
    rf = gains.T @ sched
    energy = np.array([delivered_dc_energy(rf[k], T, H) for k in range(K)])
    # Require exactly the weakest receiver's energy so the check is tight.
    params = SystemParameters(num_antennas=M, num_receivers=K, num_slots=N,
                              window_s=N * T, required_energy_j=float(energy.min()))
    lp = reduce_to_static(NoncoherentProblem(gains, params, H))
    q = sched.mean(axis=1)
    assert np.all(lp.coverage @ q >= lp.rhs * (1 - 1e-12))
    assert np.min(lp.coverage @ q / lp.rhs) == pytest.approx(1.0, rel=1e-12)
    assert N * T * q.sum() == pytest.approx(T * sched.sum(), rel=1e-12)


@pytest.mark.parametrize("seed", range(100))
def test_single_receiver_matches_greedy(seed):
    rng = np.random.default_rng(seed)
    M = int(rng.integers(1, 85))
    gains = random_gains(seed, M, 1, scale=10 ** rng.uniform(-4, -2))
    problem = make_problem(gains)
    lp = reduce_to_static(problem)
    q_ref = greedy_fill(lp.coverage[0], lp.rhs, lp.upper)
    alloc = solve_noncoherent(problem)
    if q_ref is None:
        assert alloc.status == Status.INFEASIBLE
        return
    assert alloc.status == Status.OPTIMAL
    assert alloc.per_antenna_w.sum() == pytest.approx(q_ref.sum(), rel=1e-8)


def test_zero_energy_zero_threshold():
    problem = NoncoherentProblem(random_gains(0, 6, 4),
                                 SystemParameters(num_antennas=6, num_receivers=4,
                                                  required_energy_j=1e-200,
                                                  harvester_threshold_w=0.0),
                                 HarvesterModel(0.16, 0.0))
    alloc = solve_noncoherent(problem)
    assert alloc.status == Status.OPTIMAL
    np.testing.assert_allclose(alloc.per_antenna_w, 0.0, atol=1e-150)


def test_homogeneous_scaling():
    gains = random_gains(3, 10, 20)
    ideal = HarvesterModel(0.16, 0.0)
    base = solve_noncoherent(NoncoherentProblem(
        gains, make_problem(gains, harvester_threshold_w=0.0).params, ideal))
    # Scaling gains by c and the required energy by c leaves q unchanged.
    c = 3.7
    problem = NoncoherentProblem(gains * c, make_problem(gains).params.replace(
        required_energy_j=0.5 * c, harvester_threshold_w=0.0), ideal)
    scaled = solve_noncoherent(problem)
    np.testing.assert_allclose(scaled.per_antenna_w, base.per_antenna_w, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_matches_highs(seed):
    rng = np.random.default_rng(seed)
    M, K = int(rng.integers(2, 40)), int(rng.integers(1, 80))
    problem = make_problem(random_gains(seed, M, K))
    alloc = solve_noncoherent(problem)
    assert alloc.status == Status.OPTIMAL
    assert alloc.per_antenna_w.sum() == pytest.approx(highs_optimum(problem), rel=1e-8)


def test_default_scenario_certificate(scenario, channel):
    problem = NoncoherentProblem(channel.gains, scenario.params, H)
    alloc = solve_noncoherent(problem)
    st_ = alloc.solver_stats
    assert alloc.status == Status.OPTIMAL
    assert st_["primal_residual"] <= 1e-8
    assert st_["dual_residual"] <= 1e-6
    assert st_["complementarity"] <= 1e-6
    assert st_["gap"] <= 1e-8
    assert np.all((alloc.per_antenna_w >= 0) & (alloc.per_antenna_w <= 4.0))
    assert alloc.objective_j == pytest.approx(43200 * alloc.per_antenna_w.sum(), rel=1e-15)
    assert 5 <= active_antenna_count(alloc) <= 15


def test_expected_dc_power_uniform():
    gains = np.full((3, 2), 1e-4)
    problem = make_problem(gains)
    alloc = PowerAllocation(np.full(3, 0.5), 0.0, Status.OPTIMAL)
    np.testing.assert_allclose(expected_dc_power(alloc, problem), 0.16 * 3 * 1e-4 * 0.5 - 1.58e-5)


def test_binding_receiver_and_delivered_energy(scenario, channel):
    problem = NoncoherentProblem(channel.gains, scenario.params, H)
    alloc = solve_noncoherent(problem)
    p_dc = expected_dc_power(alloc, problem)
    target = problem.target_dc_power_w
    assert np.all(p_dc >= target * (1 - 1e-8))
    assert np.min(np.abs(p_dc - target) / target) <= 1e-6
    assert np.all(scenario.params.window_s * p_dc >= 0.5 * (1 - 1e-6))


def test_active_count_examples():
    mk = lambda q: PowerAllocation(np.asarray(q, float), 0.0, Status.OPTIMAL)
    assert active_antenna_count(mk([2.0] * 7)) == 7
    assert active_antenna_count(mk([0, 0, 3.0, 0])) == 1
    assert active_antenna_count(mk([0.0] * 3)) == 0
    assert active_antenna_count(mk([1.0, 0.0101, 0.0099])) == 2


def test_infeasible_reports_worst_receiver():
    gains = random_gains(1, 4, 6, scale=1e-6)
    gains[:, 4] *= 1e-3
    alloc = solve_noncoherent(make_problem(gains))
    assert alloc.status == Status.INFEASIBLE
    assert alloc.worst_receiver == 4


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 20), st.integers(1, 30))
def test_objective_bounds_and_sparsity(seed, M, K):
    gains = random_gains(seed, M, K)
    problem = make_problem(gains)
    alloc = solve_noncoherent(problem)
    if alloc.status == Status.INFEASIBLE:
        return
    lp = reduce_to_static(problem)
    q = alloc.per_antenna_w
    assert q.sum() <= M * lp.upper * (1 + 1e-12)
    lower = max(greedy_fill(lp.coverage[k], lp.rhs, lp.upper).sum() for k in range(K))
    assert q.sum() >= lower * (1 - 1e-9)
    interior = np.count_nonzero((q > 1e-9) & (q < lp.upper - 1e-9))
    assert interior <= K


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 15), st.integers(1, 20))
def test_removing_antenna_never_helps(seed, M, K):
    gains = random_gains(seed, M, K)
    full = solve_noncoherent(make_problem(gains))
    if full.status != Status.OPTIMAL:
        return
    drop = seed % M
    fewer = solve_noncoherent(make_problem(np.delete(gains, drop, axis=0)))
    if fewer.status == Status.OPTIMAL:
        assert fewer.per_antenna_w.sum() >= full.per_antenna_w.sum() * (1 - 1e-9)
