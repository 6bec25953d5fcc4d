import io

import numpy as np
import pytest

from eslpower import coherent, noncoherent
from eslpower.channel import synthesize_channel
from eslpower.errors import DomainError, IngestionError
from eslpower.evaluation import (EnergyReport, cdf, evaluate_coherent, evaluate_noncoherent,
                                 ingest_measurements, interquartile_range, measurement_csv,
                                 read_measurements, run_point, scale_allocation_to_cap,
                                 selection_seed, SweepJob, sweep_antennas)
from eslpower.harvester import HarvesterModel
from eslpower.scenario import build_default_scenario
from eslpower.units import w_to_dbm

H = HarvesterModel()


@pytest.fixture(scope="module")
def small():
    return build_default_scenario({"num_receivers": 24})


def test_cdf_points():
    pts = cdf([3.0, 1.0, 2.0, 2.0])
    assert [v for v, _ in pts] == [1.0, 2.0, 2.0, 3.0]
    assert [f for _, f in pts] == [0.25, 0.5, 0.75, 1.0]
    with pytest.raises(DomainError):
        cdf([])


def test_iqr():
    assert interquartile_range(np.arange(1, 6)) == pytest.approx(2.0)
    assert interquartile_range([4.0] * 7) == 0.0


def test_scale_to_cap():
    alloc = noncoherent.PowerAllocation(np.array([2.0, 1.0, 0.0]), 3.0 * 43200, noncoherent.Status.OPTIMAL)
    cap = 10 ** ((13.4 - 30) / 10)
    scaled = scale_allocation_to_cap(alloc, cap)
    assert scaled.per_antenna_w.max() == pytest.approx(0.0218776, rel=1e-5)
    assert scaled.per_antenna_w[1] / scaled.per_antenna_w[0] == pytest.approx(0.5)
    assert scaled.objective_j == pytest.approx(alloc.objective_j * cap / 2.0)
    with pytest.raises(DomainError):
        scale_allocation_to_cap(alloc, 0.0)
    zero = noncoherent.PowerAllocation(np.zeros(3), 0.0, noncoherent.Status.OPTIMAL)
    with pytest.raises(DomainError):
        scale_allocation_to_cap(zero, 1.0)


def test_report_dict_clamps_and_converts():
    rep = EnergyReport(np.array([-0.1, 0.7]), 1.0, 3, 84, "coherent")
    d = rep.to_dict()
    assert d["energies"] == [0.0, 0.7]
    assert d["total_avg_tx_power_dbm"] == pytest.approx(30.0)
    assert rep.per_receiver_energy_j[0] == -0.1


def test_noncoherent_report_meets_target(scenario, channel):
    problem = noncoherent.NoncoherentProblem(channel.gains, scenario.params, H)
    alloc = noncoherent.solve_noncoherent(problem)
    rep = evaluate_noncoherent(alloc, problem)
    assert rep.per_receiver_energy_j.min() == pytest.approx(0.5, rel=1e-6)
    assert rep.total_avg_tx_power_w == pytest.approx(alloc.per_antenna_w.sum())
    assert rep.used_slots == 84


def test_coherent_report_matches_trace(small):
    p = small.params
    ch = synthesize_channel(small.antennas, small.devices, p, seed=3)
    prob = coherent.build_coherent_problem(ch, p, H)
    sol = coherent.solve_sdp(prob)
    sched = coherent.recover_precoders(sol, p, H)
    rep = evaluate_coherent(sched, ch, p, H)
    expected = prob.coverage(sol.X) - p.window_s * H.threshold_w
    np.testing.assert_allclose(rep.per_receiver_energy_j, expected, rtol=1e-6)
    assert rep.total_avg_tx_power_w == pytest.approx(sol.objective_j / (H.efficiency * p.window_s), rel=1e-6)
    assert rep.used_slots == sched.num_beams


def test_read_measurements_roundtrip():
    p = np.array([1e-6, 2.5e-7, 0.0])
    np.testing.assert_array_equal(read_measurements(io.StringIO(measurement_csv(p)), 3), p)


@pytest.mark.parametrize("text, row", [
    ("id,power\n0,1\n", 1),
    ("receiver_id,avg_rf_power_w\n0,1e-6\n1,abc\n", 3),
    ("receiver_id,avg_rf_power_w\n0,1e-6\n0,2e-6\n", 3),
    ("receiver_id,avg_rf_power_w\n0,-1e-6\n", 2),
    ("receiver_id,avg_rf_power_w\n5,1e-6\n", 2),
    ("receiver_id,avg_rf_power_w\n0,1e-6,9\n", 2),
])
def test_bad_measurements(text, row):
    with pytest.raises(IngestionError) as exc:
        read_measurements(io.StringIO(text), 2)
    assert exc.value.row == row


def test_missing_receiver():
    with pytest.raises(IngestionError, match="missing"):
        read_measurements(io.StringIO("receiver_id,avg_rf_power_w\n0,1e-6\n"), 2)


def test_ingest_energy(tmp_path, scenario):
    path = tmp_path / "m.csv"
    path.write_text(measurement_csv(np.full(240, 6.43e-6)))
    rep = ingest_measurements(path, scenario.params, H)
    assert rep.per_receiver_energy_j[0] == pytest.approx(0.16 * 6.43e-6 * 43200, rel=1e-12)
    assert rep.to_dict()["total_avg_tx_power_w"] is None


def test_selection_seed_stable():
    assert selection_seed(0, 6) == selection_seed(0, 6)
    assert selection_seed(0, 6) != selection_seed(0, 7)
    assert selection_seed(1, 6) != selection_seed(0, 6)


def test_sweep_rejects_unsorted_counts(small):
    with pytest.raises(DomainError):
        sweep_antennas(small, [4, 2], [0], "noncoherent")


def test_full_count_equals_unselected_run(small):
    run = run_point(small, SweepJob(84, 0, "noncoherent"))
    p = small.params
    ch = synthesize_channel(small.antennas, small.devices, p, seed=0)
    alloc = noncoherent.solve_noncoherent(noncoherent.NoncoherentProblem(ch.gains, p, H))
    assert run.report.total_avg_tx_power_w == alloc.total_power_w
    np.testing.assert_array_equal(run.chosen_indices, np.arange(84))


def test_sweep_deterministic_and_structured(small):
    a = sweep_antennas(small, [2, 6, 84], [0, 1], "noncoherent")
    b = sweep_antennas(small, [2, 6, 84], [0, 1], "noncoherent")
    assert len(a.runs) == 6
    for ra, rb in zip(a.runs, b.runs):
        assert (ra.count, ra.seed) == (rb.count, rb.seed)
        np.testing.assert_array_equal(ra.report.per_receiver_energy_j, rb.report.per_receiver_energy_j)
    assert a.mean_power_w(6) == pytest.approx(np.mean([r.report.total_avg_tx_power_w
                                                       for r in a.runs_for(6)]))
    assert a.pooled_energies(2).shape == (48,)


def test_coherent_sweep_point_uses_count_slots(small):
    run = run_point(small, SweepJob(4, 0, "coherent"))
    assert run.status == "optimal"
    assert run.report.used_slots <= 4
    assert w_to_dbm(run.report.total_avg_tx_power_w) > 30


def test_parallel_sweep_matches_serial(small):
    serial = sweep_antennas(small, [3, 8], [0, 1], "noncoherent")
    parallel = sweep_antennas(small, [3, 8], [0, 1], "noncoherent", workers=2)
    for ra, rb in zip(serial.runs, parallel.runs):
        assert ra.report.total_avg_tx_power_w == rb.report.total_avg_tx_power_w
