"""Discrete timed traces and their CSV form."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping

import numpy as np


class TimedTrace:
    """Sorted sample times starting at 0 plus named real-valued channels.

    Arrays are copied and made read-only on construction.
    """

    __slots__ = ("times", "channels")

    def __init__(self, times, channels: Mapping[str, object]):
        times = np.array(times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("a trace needs at least one sample")
        if times[0] != 0:
            raise ValueError(f"trace must start at time 0, got {times[0]}")
        if np.any(np.diff(times) <= 0):
            raise ValueError("time stamps must be strictly increasing")
        if not channels:
            raise ValueError("a trace needs at least one channel")
        chans = {}
        for name, values in channels.items():
            arr = np.array(values, dtype=float)
            if arr.shape != times.shape:
                raise ValueError(
                    f"channel {name!r} has {arr.size} values for {times.size} time stamps"
                )
            arr.flags.writeable = False
            chans[name] = arr
        times.flags.writeable = False
        self.times = times
        self.channels = chans

    def __len__(self):
        return self.times.size

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    @property
    def names(self) -> list[str]:
        return list(self.channels)

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def index_of(self, t: float, eps: float = 1e-9) -> int:
        i = int(np.searchsorted(self.times, t - eps))
        if i >= self.times.size or abs(self.times[i] - t) > eps:
            raise ValueError(f"t={t} is not a sample point of the trace")
        return i

    def select(self, names) -> "TimedTrace":
        return TimedTrace(self.times, {n: self.channels[n] for n in names})

    def merge(self, other: "TimedTrace") -> "TimedTrace":
        if not np.array_equal(self.times, other.times):
            raise ValueError("cannot merge traces with different time stamps")
        return TimedTrace(self.times, {**self.channels, **other.channels})

    def __eq__(self, other):
        if not isinstance(other, TimedTrace):
            return NotImplemented
        return (np.array_equal(self.times, other.times)
                and self.channels.keys() == other.channels.keys()
                and all(np.array_equal(v, other.channels[k]) for k, v in self.channels.items()))

    __hash__ = None

    def __repr__(self):
        return f"TimedTrace(n={len(self)}, T={self.duration:g}, channels={self.names})"


def read_trace_csv(path) -> TimedTrace:
    """Read ``time,<sig1>,<sig2>,...`` with one row per sample."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty trace file")
    header = [h.strip() for h in rows[0]]
    if header[0] != "time":
        raise ValueError(f"{path}: first column must be 'time'")
    if len(header) < 2:
        raise ValueError(f"{path}: no signal columns")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if data.size == 0:
        raise ValueError(f"{path}: no samples")
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged rows")
    return TimedTrace(data[:, 0], {h: data[:, j] for j, h in enumerate(header) if j})


def write_trace_csv(trace: TimedTrace, path) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", *trace.names])
        cols = [trace.times, *trace.channels.values()]
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
