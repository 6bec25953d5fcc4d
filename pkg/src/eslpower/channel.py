"""Line-of-sight indoor-factory path loss and random-phase channel synthesis.

Channel coefficients are ``h[m, k] = sqrt(L[m, k]) * exp(-1j * phi[m, k])``
with ``L`` the linear large-scale gain between antenna ``m`` and device ``k``
and ``phi`` i.i.d. uniform on ``[0, 2*pi)``. Antennas are isotropic and there
is no shadow fading, so equidistant links have equal gain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class PathlossModel:
    """``PL_dB = a0 + a1*log10(d / 1 m) + a2*log10(f / 1 GHz)``."""

    a0: float = 31.84
    a1: float = 21.50
    a2: float = 19.00
    reference: str = "3GPP TR 38.901 InF-LoS, no shadow fading"

    def __post_init__(self):
        if not self.a1 > 0:
            raise ConfigurationError("distance slope must be positive", "a1")


DEFAULT_PATHLOSS = PathlossModel()


def pathloss_db(distance_m, carrier_hz: float, model: PathlossModel = DEFAULT_PATHLOSS):
    d = np.asarray(distance_m, dtype=float)
    if np.any(~(d > 0)):
        raise DomainError("distance must be positive (antenna and device coincide)")
    if not carrier_hz > 0:
        raise DomainError("carrier frequency must be positive")
    out = model.a0 + model.a1 * np.log10(d) + model.a2 * math.log10(carrier_hz / 1e9)
    return float(out) if out.ndim == 0 else out


def large_scale_gain(distance_m, carrier_hz: float, model: PathlossModel = DEFAULT_PATHLOSS):
    """Linear power gain ``10**(-PL_dB/10)``."""
    out = 10.0 ** (-np.asarray(pathloss_db(distance_m, carrier_hz, model)) / 10.0)
    return float(out) if out.ndim == 0 else out


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; every random draw in the package goes through this."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Complex gains ``entries[m, k]`` and power gains ``gains = |entries|**2``.

    ``gains`` may be passed explicitly (synthesis passes the exact path-loss
    gain); it must then agree with ``|entries|**2`` to 1e-12.
    """

    entries: np.ndarray
    seed: int | None = None
    gains: np.ndarray | None = None
    frozen: bool = field(init=False, default=True)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2:
            raise DomainError("channel must be an (M, K) matrix")
        entries.setflags(write=False)
        modulus = np.abs(entries) ** 2
        if self.gains is None:
            gains = modulus
        else:
            gains = np.array(self.gains, dtype=float)
            if gains.shape != entries.shape or not np.allclose(gains, modulus, rtol=1e-12, atol=0):
                raise DomainError("gains disagree with |entries|^2")
        gains.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "gains", gains)

    @property
    def shape(self):
        return self.entries.shape

    def restrict(self, antennas=None, receivers=None) -> "ChannelMatrix":
        entries = self.entries
        if antennas is not None:
            entries = entries[np.asarray(antennas, dtype=int), :]
        if receivers is not None:
            entries = entries[:, np.asarray(receivers, dtype=int)]
        gains = self.gains
        if antennas is not None:
            gains = gains[np.asarray(antennas, dtype=int), :]
        if receivers is not None:
            gains = gains[:, np.asarray(receivers, dtype=int)]
        return ChannelMatrix(entries, self.seed, gains)


def distances(antenna_positions, device_positions) -> np.ndarray:
    a = np.asarray(antenna_positions, dtype=float)
    d = np.asarray(device_positions, dtype=float)
    return np.sqrt(((a[:, None, :] - d[None, :, :]) ** 2).sum(axis=-1))


def synthesize_channel(antennas, devices, params, model: PathlossModel = DEFAULT_PATHLOSS,
                       seed: int = 0) -> ChannelMatrix:
    """Draw one static channel realization.

    Phases are drawn as a single ``(M, K)`` uniform block, i.e. row-major over
    antennas then devices, from ``make_rng(seed)``.
    """
    if len(antennas) == 0 or len(devices) == 0:
        raise DomainError("layouts must be non-empty")
    dist = distances(antennas.positions, devices.positions)
    bad = np.argwhere(~(dist > 0))
    if len(bad):
        m, k = bad[0]
        raise DomainError(f"antenna {m} and device {k} coincide")
    gain = large_scale_gain(dist, params.carrier_frequency_hz, model)
    phase = make_rng(seed).uniform(0.0, 2 * np.pi, size=dist.shape)
    return ChannelMatrix(np.sqrt(gain) * np.exp(-1j * phase), seed, gain)
