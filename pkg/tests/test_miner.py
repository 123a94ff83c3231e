import json
from dataclasses import replace

import numpy as np
import pytest

from stlmine.classifier import ClassifierConfig
from stlmine.config import PRESETS, miner_config_from, model_from
from stlmine.falsification import ControlPointSpec, FalsifierConfig, falsify
from stlmine.formula import support
from stlmine.miner import MinerConfig, label_traces, mine
from stlmine.models import DelayModel, InputGenConfig, OscillatorModel, time_grid
from stlmine.monitor import satisfies
from stlmine.parser import parse_formula
from stlmine.pstl import parse_pstl
from stlmine.trace import TimedTrace

T100 = time_grid(100, 1)


def test_label_delay():
    m = DelayModel(1)
    good = TimedTrace(T100, {"u": np.full(101, 2.0)})
    bad = TimedTrace(T100, {"u": np.full(101, -1.0)})
    data = label_traces(m, [good, bad], parse_formula("G[1,100](y > 0)"))
    assert data.good == [good] and data.bad == [bad]


def test_label_oscillator_close_dips_bad():
    t = time_grid(25, 0.1)
    u1, u2 = np.ones(t.size), np.ones(t.size)
    u1[(t >= 10) & (t < 10.5)] = -1
    u2[(t >= 11) & (t < 11.5)] = -1
    data = label_traces(OscillatorModel(), [TimedTrace(t, {"u1": u1, "u2": u2})],
                        parse_formula("G(y >= -1 && y <= 1)"))
    assert len(data.bad) == 1


def delay_setup():
    doc = PRESETS["delay"]
    model = model_from(doc)
    return model, parse_formula(doc["miner"]["phi_out"]), miner_config_from(doc, model)


def test_delay_mining_is_sound():
    model, phi_out, cfg = delay_setup()
    report = mine(model, phi_out, cfg)
    assert report.success
    phi_in = report.formula
    assert support(phi_in) <= set(model.inputs)
    assert report.test_accuracy > 1 - cfg.epsilon
    # the mined assumption implies positivity of u on most of [0, 99]
    assert satisfies(phi_in, TimedTrace(T100, {"u": np.full(101, 0.5)}))
    dip = np.full(101, 0.5)
    dip[40] = -0.1
    assert not satisfies(phi_in, TimedTrace(T100, {"u": dip}))
    spec = ControlPointSpec(dict(cfg.input_gen.box), 10, 100, 1)
    res = falsify(model, phi_in, phi_out, spec, FalsifierConfig(budget=1000, seed=123))
    assert not res.found


def test_counterexamples_verified_and_logged():
    model, phi_out, cfg = delay_setup()
    report = mine(model, phi_out, cfg)
    flagged = [c for c in report.log if c.counterexample]
    assert report.counterexamples == len(flagged)
    for c in flagged:
        assert c.formula is not None


def test_report_json():
    model, phi_out, cfg = delay_setup()
    d = json.loads(mine(model, phi_out, cfg).to_json())
    assert d["schema_version"] == 1 and d["success"] and d["candidates"]


def test_length_budget_one_fails():
    model = OscillatorModel()
    cfg = MinerConfig(InputGenConfig({"u1": (-1, 1), "u2": (-1, 1)}, 5, 25, 0.1, 0),
                      n_traces=100, max_length=2, classifier=ClassifierConfig(m=9))
    report = mine(model, parse_formula("G(y >= -1 && y <= 1)"), cfg)
    assert not report.success and "no template" in report.reason
    assert report.log and all(len(c.template.split()) == 3 for c in report.log)


def test_never_evaluates_long_templates():
    model, phi_out, cfg = delay_setup()
    report = mine(model, phi_out, replace(cfg, max_length=2, epsilon=0.5))
    assert report.log
    assert all(parse_pstl(c.template).length < 2 for c in report.log)


def test_degenerate_labeling():
    model = DelayModel(1)
    cfg = MinerConfig(InputGenConfig({"u": (0.5, 1)}, 2, 100, 1, 0), n_traces=10,
                      resample_rounds=2)
    report = mine(model, parse_formula("G[1,100](y > 0)"), cfg)
    assert not report.success and "degenerate" in report.reason
    assert report.simulations == 30


def test_phi_out_must_use_outputs():
    with pytest.raises(ValueError):
        mine(DelayModel(1), parse_formula("G(u > 0)"), MinerConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        MinerConfig(epsilon=0)
    with pytest.raises(ValueError):
        MinerConfig(max_length=0)
