"""Affine RF-to-DC harvester model and the energy bookkeeping built on it.

The harvester converts received RF power into DC power as
``p_dc = efficiency * p_rf - threshold``. The raw affine value is returned,
negative values included, because the optimizers keep the threshold inside
their constraints. Reports may clamp at zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class HarvesterModel:
    efficiency: float = 0.16
    threshold_w: float = 1.58e-5

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise ConfigurationError("must lie in (0, 1]", "efficiency")
        if not (math.isfinite(self.threshold_w) and self.threshold_w >= 0):
            raise ConfigurationError("must be non-negative", "threshold_w")

    @classmethod
    def from_params(cls, params) -> "HarvesterModel":
        return cls(params.harvester_efficiency, params.harvester_threshold_w)


def rf_to_dc_power(p_rf_w, model: HarvesterModel = HarvesterModel(), clamped: bool = False):
    """DC output power for RF input ``p_rf_w`` (scalar or array)."""
    p = np.asarray(p_rf_w, dtype=float)
    if np.any(p < 0) or np.any(np.isnan(p)):
        raise DomainError("received RF power must be non-negative")
    out = model.efficiency * p - model.threshold_w
    if clamped:
        out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def delivered_dc_energy(p_rf_per_slot, slot_duration_s: float,
                        model: HarvesterModel = HarvesterModel(), clamped: bool = False) -> float:
    """DC energy harvested over consecutive slots with the given RF powers.

    The threshold is charged in every listed slot.
    """
    if not slot_duration_s > 0:
        raise DomainError("slot duration must be positive")
    p = np.atleast_1d(np.asarray(p_rf_per_slot, dtype=float))
    if p.size == 0:
        raise DomainError("need at least one slot")
    per_slot = rf_to_dc_power(p, model)
    total = float(np.sum(slot_duration_s * per_slot))
    return max(total, 0.0) if clamped else total


def required_rf_energy(energy_j: float, num_slots: int, slot_duration_s: float,
                       model: HarvesterModel = HarvesterModel()) -> float:
    """RF energy a receiver must collect over the window to net ``energy_j`` of DC."""
    if not energy_j > 0:
        raise DomainError("required energy must be positive")
    return (energy_j + num_slots * slot_duration_s * model.threshold_w) / model.efficiency
