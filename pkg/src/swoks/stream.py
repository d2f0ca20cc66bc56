"""Streaming data structures: datapoints, FIFO windows, distance history.

A datapoint packs one environment step into a flat vector
``[sqrt(len(phi)) * reward, action, phi...]``; the reward is scaled up
with the latent width so it is not drowned out by the latent block when
the vector is projected onto random directions.
"""
from __future__ import annotations

import math
from collections import deque
from typing import NamedTuple

import numpy as np

__all__ = [
    "NotReadyError",
    "make_datapoint",
    "WindowBuffer",
    "SwdHistory",
    "StreamRecord",
    "write_stream",
    "read_stream",
]


class NotReadyError(RuntimeError):
    """A windowed quantity was requested before the window filled up."""


def make_datapoint(phi, action: int, reward: float) -> np.ndarray:
    """Pack one step of experience into a flat vector.

    Layout: element 0 is ``sqrt(len(phi)) * reward``, element 1 the raw
    action, the rest the latent features. Total width ``len(phi) + 2``.
    """
    latent = np.asarray(phi, dtype=float)
    if latent.ndim != 1 or latent.shape[0] < 1:
        raise ValueError("phi must be a non-empty 1D vector")
    if not np.all(np.isfinite(latent)):
        raise ValueError("phi contains non-finite values")
    if not (np.isfinite(action) and np.isfinite(reward)):
        raise ValueError("action and reward must be finite")
    out = np.empty(latent.shape[0] + 2, dtype=float)
    out[0] = math.sqrt(latent.shape[0]) * float(reward)
    out[1] = float(action)
    out[2:] = latent
    return out


class WindowBuffer:
    """Fixed-capacity FIFO of datapoints backed by a ring of rows.

    Capacity is ``set_len * (n_windows + 1)`` rows: the newest
    ``set_len`` rows form the recent set, the oldest ``set_len`` the
    old set, and both are only defined once the buffer is full.
    """

    def __init__(self, width: int, set_len: int, n_windows: int):
        if width < 1:
            raise ValueError(f"width must be >= 1, got {width}")
        if set_len < 1:
            raise ValueError(f"set_len must be >= 1, got {set_len}")
        if n_windows < 1:
            raise ValueError(f"n_windows must be >= 1, got {n_windows}")
        self._width = width
        self._set_len = set_len
        self._capacity = set_len * (n_windows + 1)
        self._data = np.zeros((self._capacity, width), dtype=float)
        self._next = 0  # next write slot
        self._size = 0

    @property
    def width(self) -> int:
        return self._width

    @property
    def set_len(self) -> int:
        return self._set_len

    @property
    def capacity(self) -> int:
        return self._capacity

    @property
    def is_full(self) -> bool:
        return self._size == self._capacity

    def __len__(self) -> int:
        return self._size

    def push(self, datapoint) -> None:
        """Append one row, evicting the oldest when full."""
        row = np.asarray(datapoint, dtype=float)
        if row.shape != (self._width,):
            raise ValueError(
                f"datapoint width {row.shape} does not match buffer width ({self._width},)"
            )
        self._data[self._next] = row
        self._next = (self._next + 1) % self._capacity
        if self._size < self._capacity:
            self._size += 1

    def extend(self, datapoints) -> None:
        for dp in datapoints:
            self.push(dp)

    def clear(self) -> None:
        self._size = 0
        self._next = 0

    def _rows(self, start: int, count: int) -> np.ndarray:
        # start is an offset from the oldest stored row.
        first = (self._next - self._size + start) % self._capacity
        idx = (first + np.arange(count)) % self._capacity
        return self._data[idx].copy()

    def recent_set(self) -> np.ndarray:
        """Newest ``set_len`` rows in arrival order. Requires a full buffer."""
        if not self.is_full:
            raise NotReadyError(f"buffer holds {self._size}/{self._capacity} rows")
        return self._rows(self._size - self._set_len, self._set_len)

    def old_set(self) -> np.ndarray:
        """Oldest ``set_len`` rows in arrival order. Requires a full buffer."""
        if not self.is_full:
            raise NotReadyError(f"buffer holds {self._size}/{self._capacity} rows")
        return self._rows(0, self._set_len)

    def oldest(self, count: int) -> np.ndarray:
        """Oldest ``count`` stored rows (no fullness requirement)."""
        if count < 0 or count > self._size:
            raise ValueError(f"cannot take {count} rows from {self._size} stored")
        return self._rows(0, count)


class SwdHistory:
    """FIFO of sliced distance values split into an old and a new half.

    Holds ``2 * half_len`` values once full; the newest ``half_len``
    form the new half and the preceding ``half_len`` the old half.
    """

    def __init__(self, half_len: int):
        if half_len < 1:
            raise ValueError(f"half_len must be >= 1, got {half_len}")
        self._half = half_len
        self._values: deque[float] = deque(maxlen=2 * half_len)

    @property
    def half_len(self) -> int:
        return self._half

    @property
    def is_full(self) -> bool:
        return len(self._values) == 2 * self._half

    def __len__(self) -> int:
        return len(self._values)

    def push(self, value: float) -> None:
        v = float(value)
        if not np.isfinite(v) or v < 0.0:
            raise ValueError(f"distance values must be finite and non-negative, got {value}")
        self._values.append(v)

    def values(self) -> np.ndarray:
        return np.array(self._values, dtype=float)

    def new_half(self) -> np.ndarray:
        if not self.is_full:
            raise NotReadyError(f"history holds {len(self._values)}/{2 * self._half} values")
        return np.array(list(self._values)[self._half:], dtype=float)

    def old_half(self) -> np.ndarray:
        if not self.is_full:
            raise NotReadyError(f"history holds {len(self._values)}/{2 * self._half} values")
        return np.array(list(self._values)[: self._half], dtype=float)

    def keep_oldest(self, count: int) -> None:
        """Drop everything but the oldest ``count`` values."""
        if count < 0:
            raise ValueError(f"count must be >= 0, got {count}")
        kept = list(self._values)[:count]
        self._values.clear()
        self._values.extend(kept)


class StreamRecord(NamedTuple):
    """One recorded step of raw experience."""

    t: int
    gt_task: int
    reward: float
    action: int
    phi: np.ndarray


def _stream_header(latent_dim: int) -> list[str]:
    return ["t", "gt_task", "r", "a"] + [f"phi_{i + 1}" for i in range(latent_dim)]


def write_stream(path, records) -> int:
    """Write records as CSV with columns t, gt_task, r, a, phi_1..phi_k.

    Returns the number of rows written. All records must share one
    latent width.
    """
    rows = list(records)
    if not rows:
        raise ValueError("cannot write an empty stream")
    k = len(rows[0].phi)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(_stream_header(k)) + "\n")
        for rec in rows:
            if len(rec.phi) != k:
                raise ValueError(
                    f"inconsistent latent width: expected {k}, got {len(rec.phi)} at t={rec.t}"
                )
            parts = [str(int(rec.t)), str(int(rec.gt_task)),
                     repr(float(rec.reward)), str(int(rec.action))]
            parts.extend(repr(float(v)) for v in rec.phi)
            fh.write(",".join(parts) + "\n")
    return len(rows)


def read_stream(path) -> list[StreamRecord]:
    """Parse a recorded stream, reporting malformed lines by number."""
    records: list[StreamRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise ValueError(f"{path}:1: empty stream file")
        cols = [c.strip() for c in header.strip().split(",")]
        if len(cols) < 5 or cols[:4] != ["t", "gt_task", "r", "a"]:
            raise ValueError(
                f"{path}:1: bad header, expected 't,gt_task,r,a,phi_1..' got {header.strip()!r}"
            )
        expected = _stream_header(len(cols) - 4)
        if cols != expected:
            raise ValueError(f"{path}:1: bad latent columns, expected {expected[4:]}")
        k = len(cols) - 4
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != k + 4:
                raise ValueError(
                    f"{path}:{lineno}: expected {k + 4} fields, got {len(parts)}"
                )
            try:
                rec = StreamRecord(
                    t=int(parts[0]),
                    gt_task=int(parts[1]),
                    reward=float(parts[2]),
                    action=int(float(parts[3])),
                    phi=np.array([float(v) for v in parts[4:]], dtype=float),
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: unparseable value ({exc})") from None
            records.append(rec)
    if not records:
        raise ValueError(f"{path}: stream contains no data rows")
    return records
