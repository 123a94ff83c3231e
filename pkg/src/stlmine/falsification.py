"""Budgeted search for inputs that satisfy an assumption but break the requirement."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from stlmine.formula import Formula
from stlmine.models import Model, segment_index, time_grid
from stlmine.monitor import robustness
from stlmine.trace import TimedTrace

log = logging.getLogger(__name__)

CONSTANT = "constant"
LINEAR = "linear"


@dataclass(frozen=True)
class ControlPointSpec:
    """Inputs described by ``points`` control values per signal on a fixed time grid."""

    box: dict = field(default_factory=lambda: {"u": (-1.0, 1.0)})
    points: int = 10
    duration: float = 100.0
    period: float = 1.0
    interpolation: str = CONSTANT

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("need at least one control point per signal")
        if self.interpolation not in (CONSTANT, LINEAR):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        for name, (lo, hi) in self.box.items():
            if lo > hi:
                raise ValueError(f"empty box for {name}")

    @property
    def signals(self) -> list[str]:
        return list(self.box)

    @property
    def dim(self) -> int:
        return self.points * len(self.box)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.repeat([self.box[s][0] for s in self.signals], self.points).astype(float)
        hi = np.repeat([self.box[s][1] for s in self.signals], self.points).astype(float)
        return lo, hi


def realize_input(u_hat, spec: ControlPointSpec) -> tuple[TimedTrace, bool]:
    """Interpolate the control vector into a trace; also report whether clamping occurred.

    The vector is signal-major: ``points`` values for the first signal, then
    the next. Out-of-box values are clamped to the box.
    """
    u_hat = np.asarray(u_hat, dtype=float).ravel()
    if u_hat.size != spec.dim:
        raise ValueError(f"expected {spec.dim} control values, got {u_hat.size}")
    lo, hi = spec.bounds()
    clamped = bool(np.any((u_hat < lo) | (u_hat > hi)))
    u_hat = np.clip(u_hat, lo, hi)
    t = time_grid(spec.duration, spec.period)
    k = spec.points
    chans = {}
    for s, name in enumerate(spec.signals):
        vals = u_hat[s * k : (s + 1) * k]
        if spec.interpolation == CONSTANT or k == 1:
            chans[name] = vals[segment_index(t, spec.duration, k)]
        else:
            chans[name] = np.interp(t, np.linspace(0.0, spec.duration, k), vals)
    return TimedTrace(t, chans), clamped


def penalized_cost(rho_in: float, rho_out: float, k: int = 2, bound: float = math.inf) -> float:
    """``(max(0, -rho_in) + 1)^(2k) - 1 + rho_out`` with ``rho_out`` clipped to ``[-bound, bound]``."""
    penalty = (max(0.0, -rho_in) + 1.0) ** (2 * k) - 1.0
    if math.isinf(penalty):
        return math.inf
    return penalty + float(np.clip(rho_out, -bound, bound))


def cost(u_hat, phi_in: Formula, phi_out: Formula, model: Model, spec: ControlPointSpec,
         k: int = 2, bound: float = math.inf) -> float:
    u, _ = realize_input(u_hat, spec)
    y = model.simulate(u)
    return penalized_cost(robustness(phi_in, u), robustness(phi_out, y), k, bound)


@dataclass(frozen=True)
class FalsifierConfig:
    budget: int = 1000
    k: int = 2
    restarts: int = 10
    step: float = 0.25  # initial Gaussian scale as a fraction of the box width
    decay: float = 0.95
    rho_bound: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass
class FalsificationResult:
    counterexample: TimedTrace | None
    output: TimedTrace | None
    simulations: int
    best_cost: float

    @property
    def found(self) -> bool:
        return self.counterexample is not None


def falsify(model: Model, phi_in: Formula, phi_out: Formula, spec: ControlPointSpec,
            cfg: FalsifierConfig = FalsifierConfig()) -> FalsificationResult:
    """Restarted stochastic hill climbing on the penalized cost.

    A trace is returned only if it satisfies ``phi_in`` and its simulated
    output violates ``phi_out``; the search stops at the first such trace or
    when the simulation budget is spent.
    """
    rng = np.random.default_rng(cfg.seed)
    lo, hi = spec.bounds()
    width = hi - lo
    per_restart = math.ceil(cfg.budget / cfg.restarts)
    sims = 0
    best = math.inf

    def evaluate(x):
        nonlocal sims, best
        u, _ = realize_input(x, spec)
        y = model.simulate(u)
        sims += 1
        r_in, r_out = robustness(phi_in, u), robustness(phi_out, y)
        c = penalized_cost(r_in, r_out, cfg.k, cfg.rho_bound)
        best = min(best, c)
        witness = (u, y) if r_in >= 0 and r_out < 0 else None
        return c, witness

    while sims < cfg.budget:
        stop = min(cfg.budget, sims + per_restart)
        x = rng.uniform(lo, hi)
        fx, hit = evaluate(x)
        scale = cfg.step
        while hit is None and sims < stop:
            cand = np.clip(x + rng.normal(0.0, 1.0, x.size) * scale * width, lo, hi)
            fc, hit = evaluate(cand)
            if fc < fx:
                x, fx = cand, fc
            scale *= cfg.decay
        if hit is not None:
            log.debug("counterexample after %d simulations", sims)
            return FalsificationResult(hit[0], hit[1], sims, best)
    return FalsificationResult(None, None, sims, best)
