"""Counterexample-guided mining of input assumptions for a black-box model."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from stlmine.classifier import (
    ClassifierConfig, LabeledTraces, Split, classify_split, split_dataset,
)
from stlmine.enumeration import DEFAULT_OPERATORS, Enumerator
from stlmine.extraction import EmptyAssumption, extract_stl
from stlmine.falsification import ControlPointSpec, FalsifierConfig, falsify
from stlmine.formula import Formula, support
from stlmine.models import InputGenConfig, Model, sample_input_traces
from stlmine.monitor import satisfies
from stlmine.trace import TimedTrace

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class MinerConfig:
    input_gen: InputGenConfig = InputGenConfig()
    n_traces: int = 200
    max_length: int = 6  # templates strictly shorter than this are tried
    epsilon: float = 0.01
    classifier: ClassifierConfig = ClassifierConfig()
    falsifier: FalsifierConfig = FalsifierConfig()
    control_points: int = 10
    interpolation: str = "constant"
    operators: tuple[str, ...] = DEFAULT_OPERATORS
    anchor_intervals: bool = True
    max_retries: int = 10
    resample_rounds: int = 5
    value_ranges: dict | None = None  # per signal; defaults to the input box
    time_range: tuple[float, float] | None = None  # defaults to [0, duration]

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.max_length < 1:
            raise ValueError("max_length must be >= 1")
        if self.n_traces < 2:
            raise ValueError("need at least two traces")

    def control_spec(self) -> ControlPointSpec:
        g = self.input_gen
        return ControlPointSpec(dict(g.box), self.control_points, g.duration, g.period,
                                self.interpolation)


@dataclass
class CandidateLog:
    template: str
    attempt: int
    m: int
    train_accuracy: float
    test_accuracy: float
    tree_size: int
    split_valuations: list
    formula: str | None = None
    counterexample: bool = False
    simulations: int = 0
    note: str = ""


@dataclass
class MiningReport:
    formula: Formula | None
    reason: str
    log: list[CandidateLog] = field(default_factory=list)
    simulations: int = 0
    counterexamples: int = 0
    n_good: int = 0
    n_bad: int = 0
    test_accuracy: float | None = None
    train_accuracy: float | None = None
    wall_time: float = 0.0
    # final classifier state, kept for inspection; not serialized
    template: object = field(default=None, repr=False)
    classifier: object = field(default=None, repr=False)
    train: LabeledTraces | None = field(default=None, repr=False)
    test: LabeledTraces | None = field(default=None, repr=False)

    @property
    def success(self) -> bool:
        return self.formula is not None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "success": self.success,
            "formula": None if self.formula is None else str(self.formula),
            "reason": self.reason,
            "test_accuracy": self.test_accuracy,
            "train_accuracy": self.train_accuracy,
            "simulations": self.simulations,
            "counterexamples": self.counterexamples,
            "n_good": self.n_good,
            "n_bad": self.n_bad,
            "candidates": [asdict(c) for c in self.log],
            "wall_time": self.wall_time,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def summary(self) -> str:
        head = f"assumption: {self.formula}" if self.success else f"mining failed: {self.reason}"
        lines = [head,
                 f"  labelled traces: {self.n_good} good / {self.n_bad} bad",
                 f"  candidates tried: {len(self.log)}, counterexamples: {self.counterexamples}",
                 f"  simulations: {self.simulations}, wall time: {self.wall_time:.1f}s"]
        if self.success:
            lines.insert(1, f"  accuracy: train {self.train_accuracy:.3f}, test {self.test_accuracy:.3f}")
        return "\n".join(lines)


def label_traces(model: Model, traces, phi_out: Formula) -> LabeledTraces:
    """Good iff the simulated output satisfies ``phi_out``."""
    out = LabeledTraces()
    for i, u in enumerate(traces):
        try:
            y = model.simulate(u)
        except Exception as exc:
            raise RuntimeError(f"simulation of trace {i} failed: {exc}") from exc
        (out.good if satisfies(phi_out, y) else out.bad).append(u)
    return out


def _split_valuations(tree, valuations) -> list:
    used, stack = [], [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, Split):
            used.append({"feature": node.feature, "threshold": node.threshold,
                         "valuation": valuations[node.feature]})
            stack.extend([node.right, node.left])
    return used


def mine(model: Model, phi_out: Formula, cfg: MinerConfig = MinerConfig()) -> MiningReport:
    start = time.perf_counter()
    report = MiningReport(None, "")
    missing = support(phi_out) - set(model.outputs)
    if missing:
        raise ValueError(f"output requirement mentions non-output signals {sorted(missing)}")
    gen = replace(cfg.input_gen, box={k: cfg.input_gen.box.get(k, v) for k, v in model.inputs.items()})
    rng = np.random.default_rng(gen.seed)

    data = LabeledTraces()
    for _ in range(cfg.resample_rounds + 1):
        batch = label_traces(model, sample_input_traces(gen, cfg.n_traces, rng), phi_out)
        report.simulations += len(batch)
        data.good += batch.good
        data.bad += batch.bad
        if data.both_classes:
            break
    report.n_good, report.n_bad = len(data.good), len(data.bad)
    if not data.both_classes:
        report.reason = "degenerate labeling: every sampled input fell into one class"
        report.wall_time = time.perf_counter() - start
        return report

    train, test = split_dataset(data, cfg.classifier.ratio, cfg.classifier.seed)
    report.train, report.test = train, test
    spec = replace(cfg.control_spec(), box=dict(gen.box))
    value_ranges = cfg.value_ranges or gen.box
    time_range = cfg.time_range or (0.0, gen.duration)
    enum = Enumerator(list(gen.box), cfg.operators, cfg.max_length - 1, cfg.anchor_intervals)
    falsify_calls = 0

    for template in enum:
        psi = template.with_ranges(value_ranges=value_ranges, time_range=time_range)
        if psi.space.is_empty():
            continue
        for attempt in range(cfg.max_retries + 1):
            res = classify_split(psi, train, test, cfg.classifier)
            entry = CandidateLog(str(template), attempt, len(res.valuations), res.train_accuracy,
                                 res.accuracy, res.tree.size,
                                 _split_valuations(res.tree, res.valuations))
            report.log.append(entry)
            if not res.accuracy > 1 - cfg.epsilon:
                break
            try:
                phi_in = extract_stl(res.tree, psi, res.valuations)
            except EmptyAssumption:
                entry.note = "tree accepts no input"
                break
            entry.formula = str(phi_in)
            fcfg = replace(cfg.falsifier, seed=cfg.falsifier.seed + falsify_calls)
            falsify_calls += 1
            fres = falsify(model, phi_in, phi_out, spec, fcfg)
            entry.simulations = fres.simulations
            report.simulations += fres.simulations
            if not fres.found:
                report.formula = phi_in
                report.reason = "no counterexample within budget"
                report.test_accuracy, report.train_accuracy = res.accuracy, res.train_accuracy
                report.template, report.classifier = psi, res
                report.wall_time = time.perf_counter() - start
                return report
            cex = fres.counterexample
            if not (satisfies(phi_in, cex) and not satisfies(phi_out, model.simulate(cex))):
                raise AssertionError("falsifier returned an unverified counterexample")
            entry.counterexample = True
            report.counterexamples += 1
            train.bad.append(_on_grid(cex, train))
        else:
            report.log[-1].note = "retry limit reached"
    report.reason = f"no template shorter than {cfg.max_length} passed the accuracy gate"
    report.wall_time = time.perf_counter() - start
    return report


def _on_grid(cex: TimedTrace, data: LabeledTraces) -> TimedTrace:
    """Reuse the sampled traces' time array when the control grid matches it."""
    ref = data.traces()[0]
    if np.allclose(ref.times, cex.times) and ref.times.size == cex.times.size:
        return TimedTrace(ref.times, cex.channels)
    return cex
