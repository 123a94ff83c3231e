"""Black-box component models and random input generation."""
from __future__ import annotations

import math
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from stlmine.classifier import LabeledTraces
from stlmine.formula import Atom, Eventually, Globally, Implies, Interval
from stlmine.monitor import TIME_EPS, satisfies
from stlmine.trace import TimedTrace, read_trace_csv, write_trace_csv

Box = Mapping[str, tuple[float, float]]


class Model:
    """Deterministic map from an input trace to an output trace on the same time stamps."""

    inputs: dict[str, tuple[float, float]] = {}
    outputs: tuple[str, ...] = ()

    def simulate(self, u: TimedTrace) -> TimedTrace:
        raise NotImplementedError

    def _check_inputs(self, u: TimedTrace) -> None:
        missing = set(self.inputs) - set(u.channels)
        if missing:
            raise ValueError(f"input trace lacks signals {sorted(missing)}")


class DelayModel(Model):
    """``y(t) = u(t - d)`` for ``t >= d`` and ``default`` before that."""

    def __init__(self, d: float = 1.0, default: float = 1.0,
                 box: tuple[float, float] = (-1.0, 1.0)):
        if d < 0:
            raise ValueError("delay must be non-negative")
        self.d = float(d)
        self.default = float(default)
        self.inputs = {"u": (float(box[0]), float(box[1]))}
        self.outputs = ("y",)

    def simulate(self, u: TimedTrace) -> TimedTrace:
        self._check_inputs(u)
        t = u.times
        if self.d > t[-1] + TIME_EPS:
            raise ValueError(f"delay {self.d} exceeds the trace duration {t[-1]}")
        y = np.full(t.size, self.default)
        late = t >= self.d - TIME_EPS
        src = np.searchsorted(t, t[late] - self.d - TIME_EPS)
        src = np.minimum(src, t.size - 1)
        if np.any(np.abs(t[src] - (t[late] - self.d)) > 1e-6):
            raise ValueError("delay must be a multiple of the sample period")
        y[late] = u["u"][src]
        return TimedTrace(t, {"y": y})


class OscillatorModel(Model):
    """Sine output whose amplitude jumps from 1 to 5 once a latched flag turns on.

    The flag turns on at ``t2`` when ``u2(t2) < 0`` and ``u1`` was negative at
    some sample in ``[t2 - window, t2]``.
    """

    def __init__(self, freq: float = 0.5, window: float = 3.0, low: float = 1.0, high: float = 5.0):
        self.freq, self.window, self.low, self.high = freq, window, low, high
        self.inputs = {"u1": (-1.0, 1.0), "u2": (-1.0, 1.0)}
        self.outputs = ("y",)

    def flag(self, u: TimedTrace) -> np.ndarray:
        self._check_inputs(u)
        t = u.times
        neg1 = np.r_[0, np.cumsum(u["u1"] < 0)]
        start = np.searchsorted(t, t - self.window - TIME_EPS, side="left")
        recent = neg1[np.arange(t.size) + 1] - neg1[start] > 0
        trigger = (u["u2"] < 0) & recent
        return np.logical_or.accumulate(trigger)

    def simulate(self, u: TimedTrace) -> TimedTrace:
        amp = np.where(self.flag(u), self.high, self.low)
        return TimedTrace(u.times, {"y": amp * np.sin(2 * np.pi * self.freq * u.times)})


class SubprocessModel(Model):
    """External simulator: writes the input CSV, runs a command, reads the output CSV.

    ``command`` may contain ``{input}`` and ``{output}`` placeholders.
    """

    def __init__(self, command: str | Sequence[str], inputs: Box, outputs: Sequence[str],
                 timeout: float | None = 600.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.inputs = {k: (float(a), float(b)) for k, (a, b) in inputs.items()}
        self.outputs = tuple(outputs)
        self.timeout = timeout

    def simulate(self, u: TimedTrace) -> TimedTrace:
        self._check_inputs(u)
        with tempfile.TemporaryDirectory() as tmp:
            src, dst = Path(tmp) / "input.csv", Path(tmp) / "output.csv"
            write_trace_csv(u, src)
            argv = [a.format(input=src, output=dst) for a in self.command]
            subprocess.run(argv, check=True, timeout=self.timeout, capture_output=True)
            y = read_trace_csv(dst)
        if not np.allclose(y.times, u.times):
            raise ValueError("simulator output does not share the input time stamps")
        return TimedTrace(u.times, {k: y[k] for k in self.outputs})


MODELS = {"delay": DelayModel, "oscillator": OscillatorModel}


def make_model(name: str, **kwargs) -> Model:
    try:
        return MODELS[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


# -- random inputs ---------------------------------------------------------

def time_grid(duration: float, period: float) -> np.ndarray:
    n = int(math.floor(duration / period + 1e-9)) + 1
    return np.round(np.arange(n) * period, 10)


@dataclass(frozen=True)
class InputGenConfig:
    box: dict = field(default_factory=lambda: {"u": (-1.0, 1.0)})
    segments: int = 5
    duration: float = 25.0
    period: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.segments < 1:
            raise ValueError("segments must be >= 1")
        if not self.duration > 0 or not self.period > 0:
            raise ValueError("duration and period must be positive")
        for name, (lo, hi) in self.box.items():
            if lo > hi:
                raise ValueError(f"empty box for {name}")


def segment_index(times: np.ndarray, duration: float, segments: int) -> np.ndarray:
    """Segment ``j`` covers ``[j T/k, (j+1) T/k)``; the final sample joins the last one."""
    idx = np.floor(times * segments / duration + 1e-9).astype(int)
    return np.clip(idx, 0, segments - 1)


def sample_input_traces(cfg: InputGenConfig, n: int, rng: np.random.Generator | None = None) -> list[TimedTrace]:
    """``n`` piecewise-constant traces with values uniform in the box."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng or np.random.default_rng(cfg.seed)
    t = time_grid(cfg.duration, cfg.period)
    seg = segment_index(t, cfg.duration, cfg.segments)
    out = []
    for _ in range(n):
        chans = {}
        for name, (lo, hi) in cfg.box.items():
            chans[name] = rng.uniform(lo, hi, cfg.segments)[seg]
        out.append(TimedTrace(t, chans))
    return out


# -- delayed-response dataset ----------------------------------------------

PAIR_THRESHOLD = 0.1


def pair_formula(tau: float, horizon: float = 100.0):
    """``G[0,horizon](x >= 0.1 -> F[0,tau](y >= 0.1))``."""
    return Globally(Implies(Atom("x", ">=", PAIR_THRESHOLD),
                            Eventually(Atom("y", ">=", PAIR_THRESHOLD), Interval(0, tau, True, True))),
                    Interval(0, horizon, True, True))


def _pulse_train(rng, n: int, lead: int, rate: float) -> np.ndarray:
    z = rng.uniform(0.0, 0.05, n + lead)
    starts = np.nonzero(rng.random(n + lead) < rate)[0]
    for s in starts:
        z[s : s + int(rng.integers(1, 5))] = rng.uniform(0.3, 1.0)
    return z


def delay_pair_dataset(n_good: int, n_bad: int, seed: int = 0, duration: int = 150,
                       good_delays=(0, 19), bad_delays=(31, 50), rate: float = 0.04,
                       separation_tau: float = 30.0) -> LabeledTraces:
    """Two-channel traces with ``y(t) = x(t - d)`` for a random pulse train ``x``.

    Good traces use short delays and bad traces long ones. The pulse train
    is generated on negative times too, so ``y`` is stationary and a single
    time point carries no class information. Bad traces are redrawn until they
    violate the pair formula at ``separation_tau``.
    """
    if n_good < 1 or n_bad < 1:
        raise ValueError("counts must be >= 1")
    rng = np.random.default_rng(seed)
    t = np.arange(duration + 1, dtype=float)
    lead = bad_delays[1]
    strict = pair_formula(separation_tau)

    def draw(delays):
        while True:
            d = int(rng.integers(delays[0], delays[1] + 1))
            z = _pulse_train(rng, t.size, lead, rate)
            x = z[lead:]
            if not np.any(x[:101] >= PAIR_THRESHOLD):
                continue
            y = z[lead - d : lead - d + t.size]
            return TimedTrace(t, {"x": x, "y": y})

    good = [draw(good_delays) for _ in range(n_good)]
    bad = []
    while len(bad) < n_bad:
        tr = draw(bad_delays)
        if not satisfies(strict, tr):
            bad.append(tr)
    return LabeledTraces(good, bad)
