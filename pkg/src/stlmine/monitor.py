"""Offline discrete-time robustness monitor.

Windows select exactly the sample points ``t'`` with ``t' - t`` inside the
interval (no interpolation). An empty window gives ``+inf`` for ``G`` and
``-inf`` for ``F``/``U``. Satisfaction is ``robustness >= 0``.

:class:`BatchMonitor` evaluates a formula on many traces sharing one time
grid at once; intermediate robustness signals are memoised per subformula so
that sweeping a template over many valuations reuses shared subterms.
"""
from __future__ import annotations

from collections import OrderedDict
from typing import Sequence

import numpy as np

from stlmine.formula import (
    And, Atom, Eventually, Formula, Globally, Implies, Interval, Not, Or, Param,
    TrueF, Until,
)
from stlmine.trace import TimedTrace

TIME_EPS = 1e-9
_CACHE_BYTES = 256 * 2**20


class MonitorError(ValueError):
    pass


def _window_bounds(times: np.ndarray, t, iv: Interval):
    """Index range ``[lo, hi)`` of samples ``t'`` with ``t' - t`` in ``iv``."""
    if isinstance(iv.lo, Param) or isinstance(iv.hi, Param):
        raise MonitorError("cannot monitor a formula with unresolved parameters")
    if iv.lo_closed:
        lo = np.searchsorted(times, t + iv.lo - TIME_EPS, side="left")
    else:
        lo = np.searchsorted(times, t + iv.lo + TIME_EPS, side="right")
    if iv.hi_closed:
        hi = np.searchsorted(times, t + iv.hi + TIME_EPS, side="right")
    else:
        hi = np.searchsorted(times, t + iv.hi - TIME_EPS, side="left")
    return lo, hi


def _range_reduce(arr: np.ndarray, lo: np.ndarray, hi: np.ndarray, fn, empty: float):
    """out[:, i] = fn-reduction of arr[:, lo[i]:hi[i]] via a sparse table."""
    batch, n = arr.shape
    out = np.full((batch, lo.size), empty)
    span = hi - lo
    valid = span > 0
    if not valid.any():
        return out
    level = np.zeros_like(span)
    level[valid] = np.floor(np.log2(span[valid])).astype(span.dtype)
    table = arr
    for k in range(int(level.max()) + 1):
        if k:
            step = 1 << (k - 1)
            nxt = np.full_like(table, empty)
            nxt[:, : n - step] = fn(table[:, : n - step], table[:, step:])
            table = nxt
        sel = np.nonzero(valid & (level == k))[0]
        if sel.size:
            out[:, sel] = fn(table[:, lo[sel]], table[:, hi[sel] - (1 << k)])
    return out


class BatchMonitor:
    """Robustness of formulas over a batch of traces with common time stamps."""

    def __init__(self, times: np.ndarray, channels: dict[str, np.ndarray]):
        self.times = np.asarray(times, dtype=float)
        self.channels = {k: np.atleast_2d(np.asarray(v, dtype=float)) for k, v in channels.items()}
        self.batch = next(iter(self.channels.values())).shape[0] if channels else 0
        self._cache: OrderedDict[Formula, np.ndarray] = OrderedDict()
        self._cache_bytes = 0
        self._windows: dict[Interval, tuple[np.ndarray, np.ndarray]] = {}

    @classmethod
    def from_traces(cls, traces: Sequence[TimedTrace]) -> "BatchMonitor":
        if not traces:
            raise ValueError("no traces")
        times = traces[0].times
        for tr in traces[1:]:
            if not np.array_equal(tr.times, times):
                raise ValueError("batched traces must share time stamps")
        names = set(traces[0].channels)
        for tr in traces[1:]:
            names &= set(tr.channels)
        chans = {n: np.stack([tr.channels[n] for tr in traces]) for n in sorted(names)}
        return cls(times, chans)

    def _chan(self, name: str) -> np.ndarray:
        try:
            return self.channels[name]
        except KeyError:
            raise MonitorError(f"unknown signal {name!r}") from None

    def _windows_for(self, iv: Interval):
        w = self._windows.get(iv)
        if w is None:
            w = _window_bounds(self.times, self.times, iv)
            self._windows[iv] = w
        return w

    def _remember(self, phi: Formula, sig: np.ndarray) -> np.ndarray:
        self._cache[phi] = sig
        self._cache_bytes += sig.nbytes
        while self._cache_bytes > _CACHE_BYTES and len(self._cache) > 1:
            _, old = self._cache.popitem(last=False)
            self._cache_bytes -= old.nbytes
        return sig

    def signal(self, phi: Formula) -> np.ndarray:
        """Robustness at every sample point, shape ``(batch, n)``."""
        hit = self._cache.get(phi)
        if hit is not None:
            self._cache.move_to_end(phi)
            return hit
        shape = (self.batch, self.times.size)
        if isinstance(phi, TrueF):
            return np.full(shape, np.inf)
        if isinstance(phi, Atom):
            if isinstance(phi.const, Param):
                raise MonitorError("cannot monitor a formula with unresolved parameters")
            x = self._chan(phi.signal)
            return x - phi.const if phi.positive else phi.const - x
        if isinstance(phi, Not):
            sig = -self.signal(phi.arg)
        elif isinstance(phi, And):
            sig = np.minimum(self.signal(phi.left), self.signal(phi.right))
        elif isinstance(phi, Or):
            sig = np.maximum(self.signal(phi.left), self.signal(phi.right))
        elif isinstance(phi, Implies):
            sig = np.maximum(-self.signal(phi.left), self.signal(phi.right))
        elif isinstance(phi, Globally):
            lo, hi = self._windows_for(phi.interval)
            sig = _range_reduce(self.signal(phi.arg), lo, hi, np.minimum, np.inf)
        elif isinstance(phi, Eventually):
            lo, hi = self._windows_for(phi.interval)
            sig = _range_reduce(self.signal(phi.arg), lo, hi, np.maximum, -np.inf)
        elif isinstance(phi, Until):
            sig = np.stack([self._until_at(phi, i) for i in range(self.times.size)], axis=1)
        else:
            raise TypeError(f"not a formula: {phi!r}")
        return self._remember(phi, sig)

    def at(self, phi: Formula, i: int = 0) -> np.ndarray:
        """Robustness at sample index ``i``, shape ``(batch,)``.

        Only temporal operators need their operands' full signals; the
        Boolean spine above them is evaluated at ``i`` alone.
        """
        hit = self._cache.get(phi)
        if hit is not None:
            return hit[:, i]
        if isinstance(phi, TrueF):
            return np.full(self.batch, np.inf)
        if isinstance(phi, Atom):
            if isinstance(phi.const, Param):
                raise MonitorError("cannot monitor a formula with unresolved parameters")
            x = self._chan(phi.signal)[:, i]
            return x - phi.const if phi.positive else phi.const - x
        if isinstance(phi, Not):
            return -self.at(phi.arg, i)
        if isinstance(phi, And):
            return np.minimum(self.at(phi.left, i), self.at(phi.right, i))
        if isinstance(phi, Or):
            return np.maximum(self.at(phi.left, i), self.at(phi.right, i))
        if isinstance(phi, Implies):
            return np.maximum(-self.at(phi.left, i), self.at(phi.right, i))
        if isinstance(phi, (Globally, Eventually)):
            lo, hi = _window_bounds(self.times, self.times[i], phi.interval)
            is_g = isinstance(phi, Globally)
            if hi <= lo:
                return np.full(self.batch, np.inf if is_g else -np.inf)
            sub = self.signal(phi.arg)[:, lo:hi]
            return sub.min(axis=1) if is_g else sub.max(axis=1)
        if isinstance(phi, Until):
            return self._until_at(phi, i)
        raise TypeError(f"not a formula: {phi!r}")

    def _until_at(self, phi: Until, i: int) -> np.ndarray:
        lo, hi = _window_bounds(self.times, self.times[i], phi.interval)
        if hi <= lo:
            return np.full(self.batch, -np.inf)
        left = self.signal(phi.left)
        right = self.signal(phi.right)
        # inner[:, j - i] = min of left over [t_i, t_j)
        inner = np.full((self.batch, hi - i), np.inf)
        if hi - i > 1:
            inner[:, 1:] = np.minimum.accumulate(left[:, i : hi - 1], axis=1)
        vals = np.minimum(right[:, lo:hi], inner[:, lo - i :])
        return vals.max(axis=1)


def robustness(phi: Formula, trace: TimedTrace, t: float = 0.0) -> float:
    """Robustness of ``phi`` on ``trace`` at sample time ``t``."""
    i = trace.index_of(t)
    return float(BatchMonitor.from_traces([trace]).at(phi, i)[0])


def satisfies(phi: Formula, trace: TimedTrace) -> bool:
    """``robustness(phi, trace, 0) >= 0``; a tie at exactly 0 counts as satisfied."""
    return robustness(phi, trace, 0.0) >= 0


def batch_robustness(phi: Formula, traces: Sequence[TimedTrace]) -> np.ndarray:
    """Robustness at time 0 for each trace; traces may use different time grids."""
    out = np.empty(len(traces))
    for idx, mon in _grouped(traces):
        out[idx] = mon.at(phi, 0)
    return out


def _grouped(traces: Sequence[TimedTrace]):
    """Yield ``(indices, BatchMonitor)`` per distinct time grid."""
    groups: dict[bytes, list[int]] = {}
    for k, tr in enumerate(traces):
        groups.setdefault(tr.times.tobytes(), []).append(k)
    for idx in groups.values():
        yield np.array(idx), BatchMonitor.from_traces([traces[k] for k in idx])
