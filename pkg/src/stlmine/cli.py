"""Command-line interface: ``stlmine <command> ...``.

Exit codes: 0 success or SAT, 1 UNSAT or mining failure, 2 usage or IO error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from stlmine.classifier import (
    ClassifierConfig, DegenerateData, LabeledTraces, TreeConfig, classify_split,
    split_dataset,
)
from stlmine.config import (
    PRESETS, ConfigError, load_config, miner_config_from, model_from,
)
from stlmine.enumeration import DEFAULT_OPERATORS, OPERATOR_ORDER, Enumerator
from stlmine.extraction import EmptyAssumption, extract_stl
from stlmine.falsification import ControlPointSpec, FalsifierConfig, falsify
from stlmine.miner import SCHEMA_VERSION, mine
from stlmine.models import delay_pair_dataset
from stlmine.monitor import MonitorError, robustness
from stlmine.parser import ParseError, parse_formula
from stlmine.pstl import parse_pstl
from stlmine.trace import read_trace_csv, write_trace_csv

OK, FAIL, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _text(arg: str) -> str:
    """Formula text given inline or as ``@path``."""
    if arg.startswith("@"):
        return Path(arg[1:]).read_text().strip()
    return arg


def _range(text: str) -> tuple[str, tuple[float, float]]:
    try:
        name, rest = text.split("=", 1)
        lo, hi = rest.split(",")
        return name.strip(), (float(lo), float(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected name=lo,hi, got {text!r}") from None


def _write_json(obj, dest: str | None) -> None:
    if dest is None:
        return
    text = json.dumps(obj, indent=2)
    if dest == "-":
        print(text)
    else:
        Path(dest).write_text(text + "\n")


# -- commands --------------------------------------------------------------

def cmd_monitor(args) -> int:
    phi = parse_formula(_text(args.formula))
    trace = read_trace_csv(args.trace)
    rho = robustness(phi, trace, args.time)
    sat = rho >= 0
    print(f"robustness: {rho!r}")
    print("SAT" if sat else "UNSAT")
    return OK if sat else FAIL


def _load_dir(path: Path) -> list:
    files = sorted(path.glob("*.csv"))
    return [read_trace_csv(f) for f in files]


def cmd_classify(args) -> int:
    root = Path(args.data)
    data = LabeledTraces(_load_dir(root / "good"), _load_dir(root / "bad"))
    if not data.good or not data.bad:
        raise UsageError(f"{root} needs CSV traces under both good/ and bad/")
    cfg = ClassifierConfig(m=args.m, ratio=args.ratio, seed=args.seed,
                           tree=TreeConfig(max_depth=args.max_depth))
    train, test = split_dataset(data, cfg.ratio, cfg.seed)
    all_traces = data.traces()
    value_ranges = {}
    for name in all_traces[0].names:
        vals = np.concatenate([tr[name] for tr in all_traces])
        value_ranges[name] = (float(vals.min()), float(vals.max()))
    time_range = (0.0, min(tr.duration for tr in all_traces))
    ranges = dict(args.range or [])

    if args.template:
        templates = [parse_pstl(_text(args.template))]
    else:
        templates = Enumerator(all_traces[0].names, DEFAULT_OPERATORS, args.max_length,
                               anchor_intervals=not args.free_intervals)

    best = None
    tried = 0
    for template in templates:
        psi = template.with_ranges({k: v for k, v in ranges.items() if k in template.names},
                                   value_ranges=value_ranges, time_range=time_range)
        if psi.space.is_empty():
            continue
        res = classify_split(psi, train, test, cfg)
        tried += 1
        if best is None or res.accuracy > best[1].accuracy:
            best = (psi, res)
        if res.accuracy > 1 - args.epsilon:
            break
    if best is None:
        raise UsageError("no template could be evaluated")
    psi, res = best
    passed = res.accuracy > 1 - args.epsilon
    try:
        formula = str(extract_stl(res.tree, psi, res.valuations))
    except EmptyAssumption:
        formula = None
    report = {
        "schema_version": SCHEMA_VERSION,
        "template": str(psi),
        "formula": formula,
        "test_accuracy": res.accuracy,
        "train_accuracy": res.train_accuracy,
        "tree_size": res.tree.size,
        "templates_tried": tried,
        "passed_gate": passed,
        "n_good": len(data.good),
        "n_bad": len(data.bad),
    }
    print(f"template: {psi}")
    print(f"formula: {formula}")
    print(f"accuracy: train {res.train_accuracy:.3f}, test {res.accuracy:.3f}")
    if args.formula_out and formula:
        Path(args.formula_out).write_text(formula + "\n")
    _write_json(report, args.json)
    return OK if passed and formula else FAIL


def _doc_for(args) -> dict:
    if args.config:
        doc = load_config(args.config)
    elif args.model in PRESETS:
        doc = json.loads(json.dumps(PRESETS[args.model]))
    else:
        doc = {}
    return doc


def cmd_mine(args) -> int:
    doc = _doc_for(args)
    model = model_from(doc, args.model)
    phi_text = args.phi_out or doc.get("miner", {}).get("phi_out")
    if not phi_text:
        raise UsageError("no output requirement: pass --phi-out or set [miner] phi_out")
    phi_out = parse_formula(_text(phi_text))
    cfg = miner_config_from(doc, model, seed=args.seed, budget=args.budget, m=args.m,
                            max_length=args.max_length, epsilon=args.epsilon,
                            n_traces=args.n_traces)
    report = mine(model, phi_out, cfg)
    print(report.summary())
    _write_json(report.to_dict(), args.json)
    return OK if report.success else FAIL


def cmd_falsify(args) -> int:
    doc = _doc_for(args)
    model = model_from(doc, args.model)
    cfg = miner_config_from(doc, model)
    box = {**cfg.input_gen.box, **dict(args.box or [])}
    spec = ControlPointSpec(box, args.points or cfg.control_points,
                            args.duration or cfg.input_gen.duration,
                            args.period or cfg.input_gen.period,
                            args.interpolation or cfg.interpolation)
    fcfg = FalsifierConfig(budget=args.budget, k=args.k, seed=args.seed,
                           restarts=cfg.falsifier.restarts, rho_bound=cfg.falsifier.rho_bound)
    phi_in = parse_formula(_text(args.phi_in))
    phi_out = parse_formula(_text(args.phi_out or doc.get("miner", {}).get("phi_out", "")))
    res = falsify(model, phi_in, phi_out, spec, fcfg)
    print(f"simulations: {res.simulations}")
    if res.found:
        print("counterexample found")
        if args.out:
            write_trace_csv(res.counterexample, args.out)
        return FAIL
    print("no counterexample within budget")
    return OK


def cmd_enumerate(args) -> int:
    enum = Enumerator(args.signals.split(","), args.operators.split(","), args.max_length,
                      anchor_intervals=args.anchor)
    for k, psi in enumerate(enum):
        if k >= args.n:
            break
        print(psi)
    return OK


def cmd_gen_dataset(args) -> int:
    data = delay_pair_dataset(args.n_good, args.n_bad, seed=args.seed)
    out = Path(args.out)
    for label, traces in (("good", data.good), ("bad", data.bad)):
        (out / label).mkdir(parents=True, exist_ok=True)
        for i, tr in enumerate(traces):
            write_trace_csv(tr, out / label / f"{i:04d}.csv")
    print(f"wrote {len(data.good)} good and {len(data.bad)} bad traces to {out}")
    return OK


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stlmine", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("monitor", help="robustness of a formula on a trace CSV")
    s.add_argument("formula", help="formula text or @file")
    s.add_argument("trace")
    s.add_argument("--time", type=float, default=0.0)
    s.set_defaults(func=cmd_monitor)

    s = sub.add_parser("classify", help="learn a formula separating good/ and bad/ traces")
    s.add_argument("data", help="directory with good/*.csv and bad/*.csv")
    s.add_argument("--template", help="PSTL template (text or @file); default: enumerate")
    s.add_argument("--range", action="append", type=_range, metavar="NAME=LO,HI")
    s.add_argument("--m", type=int, default=10)
    s.add_argument("--ratio", type=float, default=0.7)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-depth", type=int, default=4)
    s.add_argument("--max-length", type=int, default=4)
    s.add_argument("--epsilon", type=float, default=0.05)
    s.add_argument("--free-intervals", action="store_true",
                   help="enumerate G[?a,?b] instead of G[0,?b]")
    s.add_argument("--formula-out")
    s.add_argument("--json", help="write the metrics JSON here ('-' for stdout)")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("mine", help="mine an input assumption for a model")
    s.add_argument("model", nargs="?", help=f"model name ({', '.join(PRESETS)})")
    s.add_argument("--phi-out")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--budget", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--max-length", type=int)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--n-traces", type=int)
    s.add_argument("--json", help="write the report JSON here ('-' for stdout)")
    s.set_defaults(func=cmd_mine)

    s = sub.add_parser("falsify", help="search for a counterexample to an assumption")
    s.add_argument("model", nargs="?")
    s.add_argument("--phi-in", required=True)
    s.add_argument("--phi-out")
    s.add_argument("--config")
    s.add_argument("--budget", type=int, default=1000)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--points", type=int)
    s.add_argument("--interpolation", choices=["constant", "linear"])
    s.add_argument("--box", action="append", type=_range, metavar="SIG=LO,HI")
    s.add_argument("--duration", type=float)
    s.add_argument("--period", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="counterexample CSV path")
    s.set_defaults(func=cmd_falsify)

    s = sub.add_parser("enumerate", help="print the first n templates")
    s.add_argument("n", type=int)
    s.add_argument("--signals", required=True, help="comma-separated signal names")
    s.add_argument("--operators", default=",".join(DEFAULT_OPERATORS),
                   help=f"subset of {','.join(OPERATOR_ORDER)}")
    s.add_argument("--max-length", type=int, default=5)
    s.add_argument("--anchor", action="store_true", help="use G[0,?t] intervals")
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("gen-dataset", help="write the delayed-response dataset as CSVs")
    s.add_argument("out")
    s.add_argument("--n-good", type=int, default=300)
    s.add_argument("--n-bad", type=int, default=300)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_gen_dataset)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ParseError, MonitorError, ConfigError, UsageError, DegenerateData,
            OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
