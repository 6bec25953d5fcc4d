"""Deployment geometry and system parameters for the shelf-aisle scenario.

The default deployment is a single shopping aisle: two racks, 8.4 m long and
2.1 m tall, face each other across a 4 m aisle. Each rack carries five shelves
of 24 shelf labels. The ceiling holds 84 antennas arranged as 42 pairs on a
7 x 6 grid of pair sites.

All quantities are SI (m, s, W, J, Hz).
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

DEFAULT_WINDOW_S = 12 * 3600.0


@dataclass(frozen=True)
class SystemParameters:
    """Scalar parameters of one charging problem.

    The window length is stored; ``slot_duration_s`` is ``window_s / num_slots``.
    """

    carrier_frequency_hz: float = 0.917e9
    required_energy_j: float = 0.5
    num_slots: int = 84
    window_s: float = DEFAULT_WINDOW_S
    num_receivers: int = 240
    num_antennas: int = 84
    harvester_efficiency: float = 0.16
    harvester_threshold_w: float = 1.58e-5
    max_power_per_antenna_w: float = 4.0

    def __post_init__(self):
        for name in ("num_slots", "num_receivers", "num_antennas"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigurationError("must be an integer", name)
            if value < 1:
                raise ConfigurationError("must be positive", name)
        for name in ("carrier_frequency_hz", "required_energy_j", "window_s",
                     "max_power_per_antenna_w"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError("must be a positive finite number", name)
        if not 0 < self.harvester_efficiency <= 1:
            raise ConfigurationError("must lie in (0, 1]", "harvester_efficiency")
        if not (math.isfinite(self.harvester_threshold_w) and self.harvester_threshold_w >= 0):
            raise ConfigurationError("must be non-negative", "harvester_threshold_w")

    @property
    def slot_duration_s(self) -> float:
        return self.window_s / self.num_slots

    def replace(self, **changes) -> "SystemParameters":
        return dataclasses.replace(self, **changes)

    def with_slots(self, num_slots: int) -> "SystemParameters":
        """Same charging window split into ``num_slots`` slots."""
        return self.replace(num_slots=num_slots)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["slot_duration_s"] = self.slot_duration_s
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "SystemParameters":
        return apply_overrides(cls(), data)

    @classmethod
    def from_json(cls, text: str) -> "SystemParameters":
        return cls.from_dict(json.loads(text))


PARAMETER_FIELDS = tuple(f.name for f in dataclasses.fields(SystemParameters)) + ("slot_duration_s",)


def apply_overrides(base: SystemParameters, overrides: dict | None) -> SystemParameters:
    """Return ``base`` with ``overrides`` applied.

    ``window_s``, ``num_slots`` and ``slot_duration_s`` are resolved together:
    any two determine the third, and giving all three requires them to agree.
    When ``num_antennas`` changes and ``num_slots`` is not given, the number of
    slots follows the number of antennas over an unchanged window.
    """
    overrides = dict(overrides or {})
    for key in overrides:
        if key not in PARAMETER_FIELDS:
            raise ConfigurationError("unknown parameter", key)
    for key, value in overrides.items():
        if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
            raise ConfigurationError("must be a number", key)
        if key != "harvester_threshold_w" and not value > 0:
            raise ConfigurationError("must be positive", key)
    for key in ("num_slots", "num_receivers", "num_antennas"):
        if key in overrides:
            value = overrides[key]
            if float(value) != int(value):
                raise ConfigurationError("must be an integer", key)
            overrides[key] = int(value)

    window = overrides.pop("window_s", None)
    slots = overrides.pop("num_slots", None)
    duration = overrides.pop("slot_duration_s", None)
    if window is None and (slots is None or duration is None):
        window = base.window_s
    if slots is None:
        if duration is not None:
            slots = max(1, round(window / duration))
        else:
            slots = overrides.get("num_antennas", base.num_slots)
    if window is None:
        window = slots * duration
    elif duration is not None and not math.isclose(slots * duration, window, rel_tol=1e-12):
        raise ConfigurationError(
            f"num_slots * slot_duration_s = {slots * duration!r} differs from window_s = {window!r}",
            "window_s")
    return dataclasses.replace(base, num_slots=slots, window_s=float(window),
                               **{k: v for k, v in overrides.items()})


@dataclass(frozen=True)
class Rectangle:
    x0: float
    y0: float
    width: float
    height: float


DEFAULT_CEILING_AREA = Rectangle(-0.1, 0.36, 8.4, 3.6)


@dataclass(frozen=True)
class AisleGeometry:
    """Dimensions of the single-aisle template.

    The racks' back planes are ``aisle_width_m`` apart. Shelves reach
    ``shelf_depth_m`` from the back plane into the aisle and devices sit on
    the front edge, so the two device rows lie ``aisle_width_m - 2 *
    shelf_depth_m`` apart. Shelf ``i`` of ``n`` is mounted at height
    ``(i + 0.5) * rack_height_m / n``.
    """

    rack_length_m: float = 8.4
    rack_height_m: float = 2.1
    aisle_width_m: float = 4.0
    shelf_depth_m: float = 0.5
    aisle_center_y_m: float = 2.16
    rack_start_x_m: float = -0.1
    ceiling_height_m: float = 2.4

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ConfigurationError("must be finite", f.name)
        for name in ("rack_length_m", "rack_height_m", "aisle_width_m", "shelf_depth_m",
                     "ceiling_height_m"):
            if getattr(self, name) <= 0:
                raise ConfigurationError("must be positive", name)
        if self.aisle_width_m <= 2 * self.shelf_depth_m:
            raise ConfigurationError("shelves would fill the aisle", "shelf_depth_m")
        if self.ceiling_height_m <= self.rack_height_m:
            raise ConfigurationError("ceiling must be above the racks", "ceiling_height_m")


def _freeze(array):
    array = np.array(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class AntennaLayout:
    positions: np.ndarray
    pair_index: np.ndarray

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 3 or len(positions) == 0:
            raise ConfigurationError("positions must be a non-empty (M, 3) array", "antennas")
        if len(np.unique(positions, axis=0)) != len(positions):
            raise ConfigurationError("antenna positions must be distinct", "antennas")
        object.__setattr__(self, "positions", _freeze(positions))
        object.__setattr__(self, "pair_index", _freeze(np.asarray(self.pair_index, dtype=int)))

    def __len__(self):
        return len(self.positions)

    def subset(self, indices) -> "AntennaLayout":
        indices = np.asarray(indices, dtype=int)
        return AntennaLayout(self.positions[indices], self.pair_index[indices])


@dataclass(frozen=True, eq=False)
class DeviceLayout:
    positions: np.ndarray
    rack_id: np.ndarray
    shelf_id: np.ndarray

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 3 or len(positions) == 0:
            raise ConfigurationError("positions must be a non-empty (K, 3) array", "devices")
        if len(np.unique(positions, axis=0)) != len(positions):
            raise ConfigurationError("device positions must be distinct", "devices")
        object.__setattr__(self, "positions", _freeze(positions))
        object.__setattr__(self, "rack_id", _freeze(np.asarray(self.rack_id, dtype=int)))
        object.__setattr__(self, "shelf_id", _freeze(np.asarray(self.shelf_id, dtype=int)))

    def __len__(self):
        return len(self.positions)

    def head(self, count: int) -> "DeviceLayout":
        return DeviceLayout(self.positions[:count], self.rack_id[:count], self.shelf_id[:count])


def generate_antenna_grid(nx: int, ny: int, pair_gap_m: float,
                          area: Rectangle = DEFAULT_CEILING_AREA,
                          ceiling_height_m: float = 2.4) -> AntennaLayout:
    """Place ``nx // 2`` antenna pairs per row over ``ny`` rows.

    The area is divided into ``(nx // 2) x ny`` equal cells. Each cell holds
    one pair centered in the cell, its two antennas ``pair_gap_m`` apart
    along x. Antennas are numbered row by row (y outer, x inner).
    """
    if nx < 2 or nx % 2:
        raise ConfigurationError("must be a positive even number", "nx")
    if ny < 1:
        raise ConfigurationError("must be positive", "ny")
    if not pair_gap_m > 0:
        raise ConfigurationError("must be positive", "pair_gap_m")
    if not (area.width > 0 and area.height > 0):
        raise ConfigurationError("area must have positive width and height", "area")
    pairs_per_row = nx // 2
    cell_w = area.width / pairs_per_row
    cell_h = area.height / ny
    if pair_gap_m >= cell_w:
        raise ConfigurationError("pairs would overlap neighbouring cells", "pair_gap_m")

    positions, pair_index = [], []
    for iy in range(ny):
        y = area.y0 + (iy + 0.5) * cell_h
        for ip in range(pairs_per_row):
            xc = area.x0 + (ip + 0.5) * cell_w
            for x in (xc - pair_gap_m / 2, xc + pair_gap_m / 2):
                positions.append((x, y, ceiling_height_m))
                pair_index.append(iy * pairs_per_row + ip)
    # Snap away representation noise so the grid matches decimal coordinates.
    return AntennaLayout(np.round(np.array(positions), 12), pair_index)


def shelf_heights(shelves: int, rack_height_m: float) -> np.ndarray:
    """Heights of ``shelves`` evenly spaced shelves, half a spacing from each end."""
    return (np.arange(shelves) + 0.5) * rack_height_m / shelves


def generate_esl_positions(racks: int, shelves: int, per_shelf: int,
                           geometry: AisleGeometry = AisleGeometry()) -> DeviceLayout:
    """Shelf-label positions ordered by rack, then shelf (bottom up), then x."""
    for name, value in (("racks", racks), ("shelves", shelves), ("per_shelf", per_shelf)):
        if value < 1:
            raise ConfigurationError("must be at least 1", name)
    if racks > 2:
        raise ConfigurationError("an aisle has at most two racks", "racks")
    half = geometry.aisle_width_m / 2 - geometry.shelf_depth_m
    rack_y = (geometry.aisle_center_y_m - half, geometry.aisle_center_y_m + half)
    xs = geometry.rack_start_x_m + (np.arange(per_shelf) + 0.5) * geometry.rack_length_m / per_shelf
    zs = shelf_heights(shelves, geometry.rack_height_m)

    positions, rack_id, shelf_id = [], [], []
    for r in range(racks):
        for s, z in enumerate(zs):
            for x in xs:
                positions.append((x, rack_y[r], z))
                rack_id.append(r)
                shelf_id.append(s)
    positions = np.round(np.array(positions), 12)
    if len(np.unique(positions, axis=0)) != len(positions):
        raise ConfigurationError("geometry makes devices coincide", "geometry")
    return DeviceLayout(positions, rack_id, shelf_id)


@dataclass(frozen=True)
class Scenario:
    params: SystemParameters
    antennas: AntennaLayout = field(compare=False)
    devices: DeviceLayout = field(compare=False)
    geometry: AisleGeometry = AisleGeometry()


def build_default_scenario(overrides: dict | None = None,
                           geometry: AisleGeometry | None = None,
                           selection_seed: int = 0) -> Scenario:
    """Build the default aisle with optional parameter overrides.

    ``num_receivers`` below 240 keeps the first devices in layout order.
    ``num_antennas`` below 84 picks an evenly spread subset with
    :func:`eslpower.selection.select_subset`.
    """
    geometry = geometry or AisleGeometry()
    params = apply_overrides(SystemParameters(), overrides)
    antennas = generate_antenna_grid(14, 6, 0.3, DEFAULT_CEILING_AREA, geometry.ceiling_height_m)
    devices = generate_esl_positions(2, 5, 24, geometry)
    if params.num_receivers > len(devices):
        raise ConfigurationError(f"default layout holds {len(devices)} devices", "num_receivers")
    if params.num_antennas > len(antennas):
        raise ConfigurationError(f"default layout holds {len(antennas)} antennas", "num_antennas")
    devices = devices.head(params.num_receivers)
    if params.num_antennas < len(antennas):
        from .selection import select_subset

        chosen = select_subset(antennas, params.num_antennas, selection_seed).chosen_indices
        antennas = antennas.subset(chosen)
    return Scenario(params, antennas, devices, geometry)


def geometry_rows(scenario: Scenario):
    """Rows ``(id, x, y, z, role)`` for the geometry CSV export."""
    rows = []
    for i, (x, y, z) in enumerate(scenario.antennas.positions):
        rows.append((i, x, y, z, "antenna"))
    for k, (x, y, z) in enumerate(scenario.devices.positions):
        rows.append((k, x, y, z, "device"))
    return rows
