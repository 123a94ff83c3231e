"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""
import json
import math
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from gen import random_formula, random_trace
from oracle import rho
from stlmine.classifier import (
    ClassifierConfig, compute_features, dt_based_stl_classifier, naive_baseline,
    split_dataset,
)
from stlmine.cli import main
from stlmine.config import PRESETS, miner_config_from, model_from
from stlmine.extraction import agreement, extract_stl, shift_formula
from stlmine.falsification import ControlPointSpec, FalsifierConfig, falsify
from stlmine.formula import (
    Atom, Globally, Or, flatten, to_nnf,
)
from stlmine.miner import mine
from stlmine.models import DelayModel, delay_pair_dataset
from stlmine.monitor import robustness, satisfies
from stlmine.parser import parse_formula
from stlmine.printer import to_text
from stlmine.pstl import parse_pstl
from stlmine.trace import TimedTrace


def record(n, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# -- shared runs ---------------------------------------------------------------

PAIR_TEMPLATE = "G[0,100](x >= 0.1 -> F[0,?tau](y >= 0.1))"


@pytest.fixture(scope="module")
def pair_run():
    start = time.perf_counter()
    data = delay_pair_dataset(300, 300, seed=2024)
    psi = parse_pstl(PAIR_TEMPLATE, {"tau": (0, 50)})
    res = dt_based_stl_classifier(psi, data, ClassifierConfig(m=6, seed=2024))
    train, test = split_dataset(data, 0.7, 2024)
    naive_acc, _ = naive_baseline(train, test)
    return data, psi, res, naive_acc, time.perf_counter() - start


@pytest.fixture(scope="module")
def oscillator_run():
    doc = PRESETS["oscillator"]
    model = model_from(doc)
    phi_out = parse_formula(doc["miner"]["phi_out"])
    start = time.perf_counter()
    report = mine(model, phi_out, miner_config_from(doc, model))
    return model, phi_out, report, time.perf_counter() - start


@pytest.fixture(scope="module")
def delay_mining_run():
    doc = PRESETS["delay"]
    model = model_from(doc)
    return mine(model, parse_formula(doc["miner"]["phi_out"]), miner_config_from(doc, model))


# -- criteria ------------------------------------------------------------------

def test_criterion_1_sine_robustness():
    start = time.perf_counter()
    t = np.round(np.arange(5001) * 0.01, 10)
    tr = TimedTrace(t, {"x": np.sin(2 * np.pi * t)})
    g = robustness(parse_formula("G[0,10)(x <= 3)"), tr)
    f = robustness(parse_formula("F[0,10](x < -3)"), tr)
    elapsed = time.perf_counter() - start
    ok = abs(g - 2.0) <= 1e-6 and abs(f + 2.0) <= 1e-6 and elapsed < 1.0
    record(1, "sine ground truth", ok, f"G={g:.9f}, F={f:.9f}, {elapsed:.3f}s")


def test_criterion_2_oracle_equivalence():
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    bad = 0
    for _ in range(1000):
        phi = random_formula(rng, int(rng.integers(1, 8)))
        tr = random_trace(rng, 50)
        if robustness(phi, tr) != rho(phi, tr):
            bad += 1
    elapsed = time.perf_counter() - start
    record(2, "monitor equals brute-force oracle on 1000 pairs", bad == 0 and elapsed < 30,
           f"{bad} mismatches, {elapsed:.1f}s")


def test_criterion_3_shift_identity():
    rng = np.random.default_rng(77)
    start = time.perf_counter()
    worst = 0.0
    bad = 0
    for _ in range(1000):
        phi = to_nnf(random_formula(rng, int(rng.integers(1, 8))))
        tr = random_trace(rng, 50)
        c = float(rng.uniform(-5, 5))
        want = robustness(phi, tr) - c
        got = robustness(shift_formula(phi, c), tr)
        if math.isinf(want):
            bad += got != want
        else:
            err = abs(got - want)
            worst = max(worst, err)
            bad += err > 1e-9
    elapsed = time.perf_counter() - start
    record(3, "threshold shift identity on 1000 NNF formulas", bad == 0 and elapsed < 30,
           f"max error {worst:.2e}, {elapsed:.1f}s")


def _agree(tree, psi, valuations, traces):
    phi = extract_stl(tree, psi, valuations)
    feats = compute_features(traces, psi, valuations).values
    return agreement(tree, phi, feats, traces)


def test_criterion_4_tree_formula_agreement(pair_run, oscillator_run, delay_mining_run):
    details, ok = [], True
    data, psi, res, _, _ = pair_run
    mism, excl = _agree(res.tree, psi, res.valuations, data.traces())
    details.append(f"delay-pair {mism} mismatches/{excl} ties of {len(data)}")
    ok &= mism == 0
    for name, rep in (("oscillator", oscillator_run[2]), ("delay model", delay_mining_run)):
        if not rep.success:
            details.append(f"{name}: no mined tree")
            ok = False
            continue
        traces = rep.train.traces() + rep.test.traces()
        mism, excl = _agree(rep.classifier.tree, rep.template, rep.classifier.valuations, traces)
        details.append(f"{name} {mism}/{excl} of {len(traces)}")
        ok &= mism == 0
    record(4, "extracted formula agrees with tree", ok, "; ".join(details))


def test_criterion_5_delayed_response(pair_run):
    _, _, res, naive_acc, elapsed = pair_run
    ok = res.accuracy >= 0.95 and naive_acc <= 0.6 and elapsed < 120
    record(5, "delayed-response dataset", ok,
           f"template test acc {res.accuracy:.3f}, naive {naive_acc:.3f}, {elapsed:.1f}s")


def oscillator_shape(phi):
    """``(a, b, c1, c2)`` if phi reads G[0,a](u1 < c1 -> G[0,b](u2 >= c2)), else None.

    Both sides are compared in negation normal form, in either operand order
    and with either strict or non-strict comparators.
    """
    phi = to_nnf(phi)
    if not isinstance(phi, Globally) or phi.interval.lo != 0:
        return None
    parts = flatten(phi.arg, Or)
    if len(parts) != 2:
        return None
    atom = next((p for p in parts if isinstance(p, Atom)), None)
    inner = next((p for p in parts if isinstance(p, Globally)), None)
    if atom is None or inner is None or inner.interval.lo != 0:
        return None
    if (atom.signal, atom.positive) != ("u1", True):
        return None
    if not isinstance(inner.arg, Atom) or (inner.arg.signal, inner.arg.positive) != ("u2", True):
        return None
    return phi.interval.hi, inner.interval.hi, atom.const, inner.arg.const


CONST_TOL = 0.1


def test_criterion_6_oscillator_mining(oscillator_run):
    model, phi_out, report, elapsed = oscillator_run
    shape = oscillator_shape(report.formula) if report.success else None
    final = report.log[-1] if report.log else None
    ok = (shape is not None and 3 <= shape[1] <= 5
          and abs(shape[2]) <= CONST_TOL and abs(shape[3]) <= CONST_TOL
          and report.test_accuracy == 1.0
          and final is not None and not final.counterexample and final.simulations == 1000
          and elapsed < 600)
    record(6, "oscillator mining", ok,
           f"{report.formula}; shape={shape}; test acc {report.test_accuracy}; {elapsed:.0f}s")


def test_criterion_7_delay_soundness():
    start = time.perf_counter()
    model = DelayModel(1)
    phi_out = parse_formula("G[1,100](y > 0)")
    spec = ControlPointSpec({"u": (-1, 1)}, 10, 100, 1)
    strong = falsify(model, parse_formula("G[0,99](u > 0)"), phi_out, spec,
                     FalsifierConfig(budget=1000, seed=0))
    weak = parse_formula("G[0,50](u > 0)")
    hits = 0
    for seed in range(10):
        res = falsify(model, weak, phi_out, spec, FalsifierConfig(budget=500, seed=seed))
        if res.found and res.simulations <= 500 and satisfies(weak, res.counterexample) \
                and not satisfies(phi_out, model.simulate(res.counterexample)):
            hits += 1
    elapsed = time.perf_counter() - start
    ok = not strong.found and strong.simulations == 1000 and hits >= 9 and elapsed < 120
    record(7, "delay-model soundness", ok,
           f"strong assumption falsified={strong.found}; weak falsified on {hits}/10 seeds; {elapsed:.1f}s")


def test_criterion_8_determinism(tmp_path):
    reports = []
    for k in range(2):
        out = tmp_path / f"run{k}.json"
        main(["mine", "delay", "--seed", "11", "--json", str(out)])
        rep = json.loads(out.read_text())
        rep.pop("wall_time")
        reports.append(rep)
    same = reports[0] == reports[1]
    record(8, "mine is reproducible under a fixed seed", same and reports[0]["success"],
           f"formula {reports[0]['formula']}, test acc {reports[0]['test_accuracy']}")


FIXTURES = [
    "G[240,480](x < 40.4281)",
    "G[0,100](x < 61.167)",
    "G(RPM <= 4500) && G(speed <= 120)",
    "G[0,20](u1 < 0 -> G[0,5](u2 >= 0))",
    "G(y >= -1 && y <= 1)",
    "G[0,100](x >= 0.1 -> F[0,20)(y >= 0.1))",
    "!G[15,30](x < 39) && G[30,45](x < 41.98)",
]


def test_criterion_9_fixture_roundtrip():
    ok = all(to_text(parse_formula(f)) == f and parse_formula(to_text(parse_formula(f))) == parse_formula(f)
             for f in FIXTURES)
    record(9, "external benchmark data not shipped; their formulas round-trip", ok,
           f"{len(FIXTURES)} fixtures")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
