"""dBm/mW conversions. Only file and console I/O use these."""
from __future__ import annotations

import numpy as np

from .errors import DomainError


def w_to_dbm(power_w):
    p = np.asarray(power_w, dtype=float)
    if np.any(~(p > 0)):
        raise DomainError("dBm needs a strictly positive power")
    out = 10.0 * np.log10(p * 1000.0)
    return float(out) if out.ndim == 0 else out


def dbm_to_w(power_dbm):
    out = 10.0 ** (np.asarray(power_dbm, dtype=float) / 10.0) / 1000.0
    return float(out) if out.ndim == 0 else out


def w_to_mw(power_w):
    return power_w * 1000.0


def dbm_conversions(value, direction: str):
    """``direction`` is ``"w_to_dbm"`` or ``"dbm_to_w"``."""
    if direction == "w_to_dbm":
        return w_to_dbm(value)
    if direction == "dbm_to_w":
        return dbm_to_w(value)
    raise ValueError(f"unknown direction {direction!r}")
