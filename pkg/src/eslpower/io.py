"""CSV/JSON artifact formats. Files are written atomically (temp file + rename)."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .channel import ChannelMatrix
from .coherent import PrecoderSchedule
from .errors import IngestionError
from .units import w_to_dbm


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def fmt(x) -> str:
    """Shortest round-tripping representation of a float."""
    return repr(float(x))


def _dbm_or_blank(p) -> str:
    return fmt(w_to_dbm(p)) if p > 0 else ""


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# Channel -----------------------------------------------------------------

def channel_to_csv(channel: ChannelMatrix) -> str:
    M, K = channel.shape
    lines = ["m,k,re,im"]
    for m in range(M):
        for k in range(K):
            h = channel.entries[m, k]
            lines.append(f"{m},{k},{h.real:.16e},{h.imag:.16e}")
    return "\n".join(lines) + "\n"


def channel_from_csv(text: str, seed=None) -> ChannelMatrix:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["m", "k", "re", "im"]:
        raise IngestionError("channel header must be 'm,k,re,im'", row=1)
    cells = {}
    for row_no, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            m, k, re, im = int(row[0]), int(row[1]), float(row[2]), float(row[3])
        except (ValueError, IndexError) as exc:
            raise IngestionError(str(exc), row=row_no) from None
        if (m, k) in cells:
            raise IngestionError(f"duplicate entry ({m}, {k})", row=row_no)
        cells[m, k] = complex(re, im)
    if not cells:
        raise IngestionError("empty channel file")
    M = max(m for m, _ in cells) + 1
    K = max(k for _, k in cells) + 1
    if len(cells) != M * K:
        raise IngestionError(f"expected {M * K} entries for a {M}x{K} channel, got {len(cells)}")
    entries = np.empty((M, K), complex)
    for (m, k), h in cells.items():
        entries[m, k] = h
    return ChannelMatrix(entries, seed)


# Allocation / schedule -----------------------------------------------------

def allocation_to_csv(per_antenna_w) -> str:
    rows = [(m, fmt(p), _dbm_or_blank(p)) for m, p in enumerate(per_antenna_w)]
    return rows_to_csv(["m", "power_w", "power_dbm"], rows)


def allocation_from_csv(text: str) -> np.ndarray:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["m", "power_w", "power_dbm"]:
        raise IngestionError("allocation header must be 'm,power_w,power_dbm'", row=1)
    values = {}
    for row_no, row in enumerate(reader, start=2):
        try:
            values[int(row["m"])] = float(row["power_w"])
        except (TypeError, ValueError) as exc:
            raise IngestionError(str(exc), row=row_no) from None
    if sorted(values) != list(range(len(values))):
        raise IngestionError("antenna indices must be 0..M-1 exactly once")
    return np.array([values[m] for m in range(len(values))])


def schedule_to_csv(schedule: PrecoderSchedule) -> str:
    rows = []
    for slot, w in enumerate(schedule.slot_vectors()):
        power = fmt(np.sum(np.abs(w) ** 2))
        for m, x in enumerate(w):
            rows.append((slot, m, f"{x.real:.16e}", f"{x.imag:.16e}", power))
    return rows_to_csv(["slot", "antenna", "re", "im", "power_w"], rows)


def schedule_from_csv(text: str, slot_duration_s: float) -> PrecoderSchedule:
    """Read a schedule back with one beam per listed slot."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["slot", "antenna", "re", "im", "power_w"]:
        raise IngestionError("schedule header must be 'slot,antenna,re,im,power_w'", row=1)
    slots: dict = {}
    for row_no, row in enumerate(reader, start=2):
        try:
            s, m = int(row["slot"]), int(row["antenna"])
            slots.setdefault(s, {})[m] = complex(float(row["re"]), float(row["im"]))
        except (TypeError, ValueError) as exc:
            raise IngestionError(str(exc), row=row_no) from None
    if not slots:
        return PrecoderSchedule(np.zeros((0, 0), complex), np.zeros(0, int), slot_duration_s)
    M = max(len(v) for v in slots.values())
    beams = np.zeros((len(slots), M), complex)
    for i, s in enumerate(sorted(slots)):
        for m, x in slots[s].items():
            beams[i, m] = x
    return PrecoderSchedule(beams, np.ones(len(slots), dtype=int), slot_duration_s)


# Reports -------------------------------------------------------------------

def cdf_to_csv(points) -> str:
    return rows_to_csv(["energy_j", "fraction"], [(fmt(v), fmt(f)) for v, f in points])


def selection_to_csv(result, layout) -> str:
    rows = []
    for rank, idx in enumerate(result.chosen_indices):
        x, y = layout.positions[idx, :2]
        rows.append((rank, int(idx), fmt(x), fmt(y)))
    return rows_to_csv(["rank", "antenna_index", "x", "y"], rows)


def geometry_to_csv(rows) -> str:
    return rows_to_csv(["id", "x", "y", "z", "role"],
                       [(i, fmt(x), fmt(y), fmt(z), role) for i, x, y, z, role in rows])


SWEEP_HEADER = ["m", "seed", "power_w", "power_dbm", "active_antennas", "used_slots", "status"]


def sweep_row(run) -> list:
    rep = run.report
    if rep is None:
        return [run.count, run.seed, "", "", "", "", run.status]
    p = rep.total_avg_tx_power_w
    return [run.count, run.seed, fmt(p), _dbm_or_blank(p), rep.active_antennas, rep.used_slots, run.status]


def read_sweep_rows(path) -> dict:
    """Existing sweep rows keyed by ``(m, seed)``."""
    path = Path(path)
    if not path.exists():
        return {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SWEEP_HEADER:
            raise IngestionError(f"{path} is not a sweep file", row=1)
        return {(int(r[0]), int(r[1])): r for r in reader if r}
