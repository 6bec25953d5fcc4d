"""Minimum-transmit-energy wireless charging of shelf labels from a ceiling antenna array."""
from .channel import ChannelMatrix, PathlossModel, large_scale_gain, pathloss_db, synthesize_channel
from .coherent import (CoherentProblem, PrecoderSchedule, PsdSolution, SolverOptions,
                       build_coherent_problem, enforce_slot_power_cap, kkt_report,
                       recover_precoders, solve_sdp)
from .evaluation import (EnergyReport, SweepResult, cdf, evaluate_coherent, evaluate_noncoherent,
                         ingest_measurements, scale_allocation_to_cap, sweep_antennas)
from .harvester import HarvesterModel, delivered_dc_energy, required_rf_energy, rf_to_dc_power
from .noncoherent import (NoncoherentProblem, PowerAllocation, active_antenna_count,
                          expected_dc_power, reduce_to_static, solve_noncoherent)
from .scenario import (AisleGeometry, AntennaLayout, DeviceLayout, SystemParameters,
                       build_default_scenario, generate_antenna_grid, generate_esl_positions)
from .selection import kmeans_cluster, select_subset
from .units import dbm_conversions, dbm_to_w, w_to_dbm

__all__ = [
    "AisleGeometry",
    "AntennaLayout",
    "ChannelMatrix",
    "CoherentProblem",
    "DeviceLayout",
    "EnergyReport",
    "HarvesterModel",
    "NoncoherentProblem",
    "PathlossModel",
    "PowerAllocation",
    "PrecoderSchedule",
    "PsdSolution",
    "SolverOptions",
    "SweepResult",
    "SystemParameters",
    "active_antenna_count",
    "build_coherent_problem",
    "build_default_scenario",
    "cdf",
    "dbm_conversions",
    "dbm_to_w",
    "delivered_dc_energy",
    "enforce_slot_power_cap",
    "evaluate_coherent",
    "evaluate_noncoherent",
    "expected_dc_power",
    "generate_antenna_grid",
    "generate_esl_positions",
    "ingest_measurements",
    "kkt_report",
    "kmeans_cluster",
    "large_scale_gain",
    "pathloss_db",
    "recover_precoders",
    "reduce_to_static",
    "required_rf_energy",
    "rf_to_dc_power",
    "scale_allocation_to_cap",
    "select_subset",
    "solve_noncoherent",
    "solve_sdp",
    "sweep_antennas",
    "synthesize_channel",
    "w_to_dbm",
]

__version__ = "0.1.0"
