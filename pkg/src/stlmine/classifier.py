"""Robustness features, a small Gini CART, and the template classifier."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from stlmine.monitor import _grouped
from stlmine.pstl import ParametricFormula, Valuation, grid_sample, instantiate
from stlmine.trace import TimedTrace

log = logging.getLogger(__name__)


class DegenerateData(ValueError):
    """Training data lacks one of the two classes (or a usable split)."""


@dataclass
class LabeledTraces:
    good: list[TimedTrace] = field(default_factory=list)
    bad: list[TimedTrace] = field(default_factory=list)

    def __len__(self):
        return len(self.good) + len(self.bad)

    def traces(self) -> list[TimedTrace]:
        return [*self.good, *self.bad]

    def labels(self) -> np.ndarray:
        return np.r_[np.ones(len(self.good), int), np.zeros(len(self.bad), int)]

    @property
    def both_classes(self) -> bool:
        return bool(self.good) and bool(self.bad)


def split_dataset(data: LabeledTraces, ratio: float = 0.7, seed: int = 0):
    """Stratified shuffle split; each nonempty class keeps at least one training trace."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    parts = []
    for group in (data.good, data.bad):
        n = len(group)
        order = rng.permutation(n)
        n_train = max(1, int(np.floor(ratio * n + 1e-9))) if n else 0
        parts.append(([group[i] for i in order[:n_train]], [group[i] for i in order[n_train:]]))
    (g_tr, g_te), (b_tr, b_te) = parts
    return LabeledTraces(g_tr, b_tr), LabeledTraces(g_te, b_te)


@dataclass
class FeatureMatrix:
    values: np.ndarray  # (rows, m)
    labels: np.ndarray  # (rows,)
    valuations: list[dict[str, float]]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.values.ndim != 2 or self.values.shape[0] != self.labels.size:
            raise ValueError("feature matrix and labels disagree in shape")
        if self.values.shape[1] != len(self.valuations):
            raise ValueError("one column per valuation expected")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["label", *(json.dumps(v, sort_keys=True) for v in self.valuations)])
            for lab, row in zip(self.labels, self.values):
                w.writerow([int(lab), *(repr(float(v)) for v in row)])


def compute_features(traces: Sequence[TimedTrace], psi: ParametricFormula,
                     valuations: Sequence[Valuation], labels=None) -> FeatureMatrix:
    """Entry ``(r, i)`` is the robustness at time 0 of ``psi`` under ``valuations[i]`` on trace ``r``.

    Traces sharing a time grid are monitored together so that subformulas
    common to several valuations are computed once.
    """
    if not valuations:
        raise ValueError("need at least one valuation")
    phis = [instantiate(psi, nu) for nu in valuations]
    out = np.empty((len(traces), len(phis)))
    for idx, mon in _grouped(traces):
        for j, phi in enumerate(phis):
            out[idx, j] = mon.at(phi, 0)
    if labels is None:
        labels = np.zeros(len(traces), int)
    return FeatureMatrix(out, labels, [dict(nu) for nu in valuations])


# -- decision tree ---------------------------------------------------------

@dataclass(frozen=True)
class TreeConfig:
    max_depth: int | None = 4
    min_leaf: int = 1
    min_impurity_decrease: float = 1e-6


@dataclass(frozen=True)
class Leaf:
    label: int
    n: int = 0

    @property
    def size(self) -> int:
        return 1


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Leaf | Split"  # feature < threshold
    right: "Leaf | Split"  # feature >= threshold

    @property
    def size(self) -> int:
        return 1 + self.left.size + self.right.size


def _gini(ones, total):
    p = ones / total
    return 2.0 * p * (1.0 - p)


def _between(a: float, b: float) -> float:
    """A threshold t with a < t <= b, at the midpoint when both are finite."""
    if np.isfinite(a) and np.isfinite(b):
        t = a / 2.0 + b / 2.0
        return t if a < t else b
    if np.isfinite(b):
        return b - 1.0 if b - 1.0 > a else b
    if np.isfinite(a):
        return a + 1.0
    return 0.0


def _best_split(X: np.ndarray, y: np.ndarray, min_leaf: int):
    n, m = X.shape
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    ys = y[order]
    n_left = np.arange(1, n)[:, None]
    ones_left = np.cumsum(ys, axis=0)[:-1]
    ones_total = y.sum()
    n_right = n - n_left
    ones_right = ones_total - ones_left
    child = (n_left * _gini(ones_left, n_left) + n_right * _gini(ones_right, n_right)) / n
    gain = _gini(ones_total, n) - child
    ok = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    gain = np.where(ok, gain, -np.inf)
    # feature-major flattening: first maximum = lowest feature, then lowest threshold
    flat = int(np.argmax(gain.T))
    j, k = divmod(flat, n - 1)
    if not np.isfinite(gain[k, j]):
        return None
    return j, float(_between(xs[k, j], xs[k + 1, j])), float(gain[k, j])


def train_tree(fm: FeatureMatrix, config: TreeConfig = TreeConfig()) -> Leaf | Split:
    """Grow a binary CART tree on the feature matrix (Gini impurity)."""
    X, y = fm.values, fm.labels
    if X.shape[0] == 0:
        raise ValueError("cannot train on an empty feature matrix")
    return _grow(X, y, 0, config)


def _leaf(y: np.ndarray) -> Leaf:
    ones = int(y.sum())
    return Leaf(1 if ones > y.size - ones else 0, int(y.size))


def _grow(X, y, depth, cfg: TreeConfig):
    ones = int(y.sum())
    if ones in (0, y.size) or y.size < 2 * cfg.min_leaf:
        return _leaf(y)
    if cfg.max_depth is not None and depth >= cfg.max_depth:
        return _leaf(y)
    best = _best_split(X, y, cfg.min_leaf)
    if best is None or best[2] <= 0 or best[2] < cfg.min_impurity_decrease:
        return _leaf(y)
    j, thr, _ = best
    go_left = X[:, j] < thr
    return Split(j, thr, _grow(X[go_left], y[go_left], depth + 1, cfg),
                 _grow(X[~go_left], y[~go_left], depth + 1, cfg))


def predict(tree, row) -> int:
    node = tree
    while isinstance(node, Split):
        node = node.left if row[node.feature] < node.threshold else node.right
    return node.label


def predict_all(tree, X: np.ndarray) -> np.ndarray:
    return np.array([predict(tree, row) for row in np.asarray(X)], dtype=int)


def accuracy(truth, predicted) -> float:
    truth, predicted = np.asarray(truth), np.asarray(predicted)
    if truth.shape != predicted.shape:
        raise ValueError("label vectors differ in length")
    if truth.size == 0:
        raise ValueError("accuracy of an empty set is undefined")
    return float(np.mean(truth == predicted))


def leaves(tree):
    """Yield ``(path, leaf)`` where path is a list of ``(feature, threshold, went_right)``."""
    stack = [(tree, [])]
    while stack:
        node, path = stack.pop()
        if isinstance(node, Leaf):
            yield path, node
        else:
            stack.append((node.right, path + [(node.feature, node.threshold, True)]))
            stack.append((node.left, path + [(node.feature, node.threshold, False)]))


# -- template classifier ---------------------------------------------------

@dataclass(frozen=True)
class ClassifierConfig:
    m: int = 10
    ratio: float = 0.7
    seed: int = 0
    tree: TreeConfig = TreeConfig()


@dataclass
class ClassifierResult:
    accuracy: float  # on the held-out split
    tree: Leaf | Split
    valuations: list[dict[str, float]]
    train_accuracy: float
    train: FeatureMatrix
    test: FeatureMatrix


def classify_split(psi: ParametricFormula, train: LabeledTraces, test: LabeledTraces,
                   config: ClassifierConfig = ClassifierConfig()) -> ClassifierResult:
    """Learn a tree over ``psi``'s robustness features on a fixed train/test split."""
    if not train.both_classes:
        raise DegenerateData("training data must contain both classes")
    if len(test) == 0:
        raise DegenerateData("test split is empty")
    valuations = grid_sample(psi.space, config.m)
    n_tr = len(train)
    fm = compute_features(train.traces() + test.traces(), psi, valuations,
                          np.r_[train.labels(), test.labels()])
    fm_train = FeatureMatrix(fm.values[:n_tr], fm.labels[:n_tr], fm.valuations)
    fm_test = FeatureMatrix(fm.values[n_tr:], fm.labels[n_tr:], fm.valuations)
    tree = train_tree(fm_train, config.tree)
    train_acc = accuracy(fm_train.labels, predict_all(tree, fm_train.values))
    test_acc = accuracy(fm_test.labels, predict_all(tree, fm_test.values))
    return ClassifierResult(test_acc, tree, fm.valuations, train_acc, fm_train, fm_test)


def dt_based_stl_classifier(psi: ParametricFormula, data: LabeledTraces,
                            config: ClassifierConfig = ClassifierConfig()) -> ClassifierResult:
    if not data.both_classes:
        raise DegenerateData("data must contain both classes")
    train, test = split_dataset(data, config.ratio, config.seed)
    return classify_split(psi, train, test, config)


def naive_baseline(train: LabeledTraces, test: LabeledTraces,
                   tree_config: TreeConfig = TreeConfig(max_depth=None)) -> tuple[float, Leaf | Split]:
    """Tree over raw per-timepoint sample values; returns (test accuracy, tree)."""
    def flat(data: LabeledTraces) -> np.ndarray:
        rows = []
        for tr in data.traces():
            rows.append(np.concatenate([tr.channels[k] for k in sorted(tr.channels)]))
        if len({r.size for r in rows}) > 1:
            raise ValueError("per-timepoint features need traces of equal length")
        return np.array(rows)

    X_tr, X_te = flat(train), flat(test)
    if X_tr.shape[1] != X_te.shape[1]:
        raise ValueError("train and test traces differ in length")
    fm = FeatureMatrix(X_tr, train.labels(), [{"i": float(i)} for i in range(X_tr.shape[1])])
    tree = train_tree(fm, tree_config)
    return accuracy(test.labels(), predict_all(tree, X_te)), tree
