import sys

import numpy as np
import pytest

from stlmine.models import (
    DelayModel, InputGenConfig, OscillatorModel, SubprocessModel, delay_pair_dataset,
    make_model, pair_formula, sample_input_traces, time_grid,
)
from stlmine.monitor import satisfies
from stlmine.parser import parse_formula
from stlmine.trace import TimedTrace

T100 = time_grid(100, 1)


def test_delay_constant_input():
    y = DelayModel(1, default=1).simulate(TimedTrace(T100, {"u": np.full(101, 2.0)}))
    assert np.all(y["y"][1:] == 2) and y["y"][0] == 1
    assert satisfies(parse_formula("G[1,100](y > 0)"), y)


def test_delay_zero_is_identity():
    u = np.random.default_rng(0).normal(size=101)
    assert np.array_equal(DelayModel(0).simulate(TimedTrace(T100, {"u": u}))["y"], u)


def test_delay_negative_start_violates():
    u = np.ones(101)
    u[0] = -1
    y = DelayModel(1).simulate(TimedTrace(T100, {"u": u}))
    assert y["y"][1] == -1
    assert not satisfies(parse_formula("G[1,100](y > 0)"), y)


def test_delay_shift_property():
    rng = np.random.default_rng(1)
    seg = rng.uniform(-1, 1, 10)
    u = seg[np.minimum(np.arange(101) // 10, 9)]
    shift = 7
    u2 = np.r_[np.full(shift, u[0]), u[:-shift]]
    m = DelayModel(3)
    y1 = m.simulate(TimedTrace(T100, {"u": u}))["y"]
    y2 = m.simulate(TimedTrace(T100, {"u": u2}))["y"]
    assert np.array_equal(y2[3 + shift:], y1[3:-shift])


def test_delay_errors():
    tr = TimedTrace(T100, {"u": np.ones(101)})
    with pytest.raises(ValueError):
        DelayModel(200).simulate(tr)
    with pytest.raises(ValueError):
        DelayModel(0.5).simulate(tr)
    with pytest.raises(ValueError):
        DelayModel(1).simulate(TimedTrace(T100, {"v": np.ones(101)}))


T25 = time_grid(25, 0.1)
BOUNDED = parse_formula("G(y >= -1 && y <= 1)")


def osc_input(u1_dip=None, u2_dip=None, width=0.5):
    u1, u2 = np.ones(T25.size), np.ones(T25.size)
    if u1_dip is not None:
        u1[(T25 >= u1_dip) & (T25 < u1_dip + width)] = -1
    if u2_dip is not None:
        u2[(T25 >= u2_dip) & (T25 < u2_dip + width)] = -1
    return TimedTrace(T25, {"u1": u1, "u2": u2})


def test_oscillator_quiet_inputs():
    y = OscillatorModel().simulate(osc_input())
    assert np.max(np.abs(y["y"])) <= 1
    assert satisfies(BOUNDED, y)


def test_oscillator_close_dips_trigger():
    m = OscillatorModel()
    u = osc_input(10, 12)
    flag = m.flag(u)
    assert not flag[T25 < 12 - 1e-9].any() and flag[T25 >= 12 - 1e-9].all()
    assert np.max(np.abs(m.simulate(u)["y"])) > 1


def test_oscillator_far_dips_do_not_trigger():
    u = osc_input(10, 20)
    assert not OscillatorModel().flag(u).any()
    assert satisfies(BOUNDED, OscillatorModel().simulate(u))


def test_oscillator_window_is_closed():
    # u1 negative only at t=10.0, u2 negative only at t=13.0: exactly 3 s apart
    u = osc_input(10, 13, width=0.05)
    assert OscillatorModel().flag(u).any()
    u = osc_input(10, 13.1, width=0.05)
    assert not OscillatorModel().flag(u).any()


def test_oscillator_flag_latches_and_is_deterministic():
    m = OscillatorModel()
    cfg = InputGenConfig({"u1": (-1, 1), "u2": (-1, 1)}, 5, 25, 0.1, seed=3)
    for u in sample_input_traces(cfg, 30):
        f = m.flag(u)
        assert np.all(np.diff(f.astype(int)) >= 0)
        assert m.simulate(u) == m.simulate(u)


def test_sample_constant_trace():
    tr = sample_input_traces(InputGenConfig({"u": (2, 2)}, 1, 10, 1), 1)[0]
    assert np.all(tr["u"] == 2) and tr.times[-1] == 10


def test_sample_segments_and_seed():
    cfg = InputGenConfig({"u": (-1, 1), "v": (0, 5)}, 4, 20, 0.5, seed=9)
    a, b = sample_input_traces(cfg, 5), sample_input_traces(cfg, 5)
    assert a == b
    for tr in a:
        assert len(np.unique(tr["u"])) == 4
        assert np.all((tr["v"] >= 0) & (tr["v"] <= 5))
        # segment boundaries fall at multiples of 5 s
        change = tr.times[1:][np.diff(tr["u"]) != 0]
        assert np.allclose(change, [5, 10, 15])


def test_input_config_validation():
    with pytest.raises(ValueError):
        InputGenConfig(segments=0)
    with pytest.raises(ValueError):
        InputGenConfig(duration=0)
    with pytest.raises(ValueError):
        sample_input_traces(InputGenConfig(), 0)


def test_pair_dataset_separable():
    data = delay_pair_dataset(40, 40, seed=5)
    phi = pair_formula(20)
    assert all(satisfies(phi, tr) for tr in data.good)
    assert not any(satisfies(phi, tr) for tr in data.bad)


def test_pair_dataset_zero_delay_identity():
    data = delay_pair_dataset(5, 1, seed=0, good_delays=(0, 0))
    assert all(np.array_equal(tr["x"], tr["y"]) for tr in data.good)


def test_pair_dataset_deterministic():
    assert delay_pair_dataset(5, 5, seed=2).good == delay_pair_dataset(5, 5, seed=2).good


def test_make_model():
    assert isinstance(make_model("oscillator"), OscillatorModel)
    with pytest.raises(ValueError):
        make_model("simulink")


def test_subprocess_model(tmp_path):
    script = tmp_path / "neg.py"
    script.write_text(
        "import csv, sys\n"
        "rows = list(csv.reader(open(sys.argv[1])))\n"
        "w = csv.writer(open(sys.argv[2], 'w', newline=''))\n"
        "w.writerow(['time', 'y'])\n"
        "for r in rows[1:]:\n"
        "    w.writerow([r[0], -float(r[1])])\n"
    )
    m = SubprocessModel([sys.executable, str(script), "{input}", "{output}"], {"u": (-1, 1)}, ["y"])
    u = TimedTrace([0, 0.5, 1], {"u": [1, 2, -3]})
    assert m.simulate(u)["y"].tolist() == [-1, -2, 3]
