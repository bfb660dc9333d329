"""Cross-validation, nested forward feature selection, weighted partial dependence."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm

from ..core import RngLike, as_generator
from .dataset import Dataset
from .mars import DEFAULT_MAX_TERMS, fit_mars

# learner: training data -> (data -> predictions)
Learner = Callable[[Dataset], Callable[[Dataset], np.ndarray]]

SELECTION_THRESHOLD = math.sqrt(5e-5)


def kfold_indices(data: Dataset, k: int, rng: RngLike, stratify: bool | None = None) -> list[np.ndarray]:
    """Test-index arrays of a (stratified for class targets) k-fold split."""
    n = len(data)
    if k < 2 or k > n:
        raise ValueError(f"need 2 <= k <= rows ({n}), got k={k}")
    gen = as_generator(rng)
    if stratify is None:
        stratify = not data.is_regression
    folds: list[list[int]] = [[] for _ in range(k)]
    if stratify:
        # deal each class round-robin, continuing where the previous class stopped
        pos = 0
        for label in sorted(set(data.y.tolist())):
            idx = gen.permutation(np.flatnonzero(data.y == label))
            for i in idx:
                folds[pos % k].append(int(i))
                pos += 1
    else:
        for f, part in enumerate(np.array_split(gen.permutation(n), k)):
            folds[f] = part.tolist()
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


def rmse(pred, y) -> float:
    d = np.asarray(pred, dtype=float) - np.asarray(y, dtype=float)
    return float(np.sqrt(np.mean(d * d)))


def accuracy(pred, y) -> float:
    return float(np.mean(np.asarray(pred).astype(str) == np.asarray(y).astype(str)))


def cross_validate(data: Dataset, learner: Learner, k: int, rng: RngLike) -> tuple[float, list[float]]:
    """Mean and per-fold metric: accuracy for class targets, RMSE for numeric ones."""
    metric = rmse if data.is_regression else accuracy
    folds = kfold_indices(data, k, rng)
    scores = []
    for test in folds:
        train = np.setdiff1d(np.arange(len(data)), test)
        predict = learner(data.rows(train))
        te = data.rows(test)
        scores.append(metric(predict(te), te.y))
    return float(np.mean(scores)), scores


def mean_learner(train: Dataset):
    mu = float(np.mean(train.y.astype(float)))
    return lambda d: np.full(len(d), mu)


def constant_learner(label):
    return lambda train: (lambda d: np.full(len(d), label))


def tree_learner(max_depth=None, min_leaf=1):
    from .tree import fit_tree

    return lambda train: fit_tree(train, max_depth, min_leaf).predict


def mars_learner(max_terms=DEFAULT_MAX_TERMS, max_degree=2):
    return lambda train: fit_mars(train, max_terms, max_degree).predict


@dataclass
class SelectionTrace:
    """Nested forward search result.

    ``steps`` holds (feature, mean inner RMSE) with the empty model first
    (feature ""). Folds that stopped early carry their last RMSE forward so
    the averaged sequence stays non-increasing.
    """

    steps: list[tuple[str, float]]
    selected: list[str]
    outer_rmse: float
    fold_traces: list[list[tuple[str, float]]] = field(default_factory=list)
    threshold: float = SELECTION_THRESHOLD

    @property
    def fold_sets(self) -> list[list[str]]:
        return [[f for f, _ in t[1:]] for t in self.fold_traces]


def _holdout_rmse(train: Dataset, test: Dataset, feats: Sequence[str], max_terms: int) -> float:
    if not feats:
        return rmse(np.full(len(test), float(np.mean(train.y))), test.y)
    model = fit_mars(train.select(feats), max_terms)
    return rmse(model.predict(test.select(feats)), test.y)


def forward_search(
    train: Dataset, test: Dataset, threshold: float, max_terms: int = DEFAULT_MAX_TERMS
) -> list[tuple[str, float]]:
    """Greedy forward search scored on a fixed holdout; ties go to the earlier column."""
    current: list[str] = []
    trace = [("", _holdout_rmse(train, test, current, max_terms))]
    remaining = list(train.names)
    while remaining:
        scores = [_holdout_rmse(train, test, current + [f], max_terms) for f in remaining]
        b = int(np.argmin(scores))
        if trace[-1][1] - scores[b] < threshold:
            break
        current.append(remaining.pop(b))
        trace.append((current[-1], scores[b]))
    return trace


def forward_feature_selection(
    data: Dataset,
    threshold: float = SELECTION_THRESHOLD,
    outer_k: int = 10,
    rng: RngLike = 0,
    *,
    inner_train_fraction: float = 2.0 / 3.0,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> SelectionTrace:
    """Outer k-fold CV around a forward search scored by MARS on a 2/3-1/3 holdout."""
    n = len(data)
    if n < 15 or outer_k > n:
        raise ValueError(f"too few rows ({n}) for {outer_k} outer folds")
    gen = as_generator(rng)
    folds = kfold_indices(data, outer_k, gen, stratify=False)
    fold_traces, preds, truth = [], [], []
    for test in folds:
        train_idx = np.setdiff1d(np.arange(n), test)
        perm = gen.permutation(train_idx)
        cut = int(round(inner_train_fraction * len(perm)))
        if cut < 2 or cut >= len(perm):
            raise ValueError("outer training fold too small for an inner holdout")
        inner_tr, inner_te = data.rows(np.sort(perm[:cut])), data.rows(np.sort(perm[cut:]))
        trace = forward_search(inner_tr, inner_te, threshold, max_terms)
        fold_traces.append(trace)
        feats = [f for f, _ in trace[1:]]
        outer_tr, outer_te = data.rows(train_idx), data.rows(test)
        if feats:
            pred = fit_mars(outer_tr.select(feats), max_terms).predict(outer_te.select(feats))
        else:
            pred = np.full(len(test), float(np.mean(outer_tr.y)))
        preds.append(pred)
        truth.append(outer_te.y)
    outer = rmse(np.concatenate(preds), np.concatenate(truth))

    longest = max(len(t) for t in fold_traces)
    steps = []
    for s in range(longest):
        vals = [t[min(s, len(t) - 1)][1] for t in fold_traces]
        names = [t[s][0] for t in fold_traces if s < len(t)]
        steps.append((Counter(names).most_common(1)[0][0] if s else "", float(np.mean(vals))))
    sets = [tuple(f for f, _ in t[1:]) for t in fold_traces]
    selected = list(Counter(sets).most_common(1)[0][0])
    return SelectionTrace(steps, selected, outer, fold_traces, threshold)


def weighted_partial_dependence(model, data: Dataset, feature: str, grid) -> list[tuple[float, float | None]]:
    """Model response at each grid value, averaging rows weighted by closeness.

    Row i gets weight a * phi(x_i - x*) with a = sd(feature) / 4 and phi the
    standard normal density. Grid points where every weight underflows give
    None.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("grid must be non-empty")
    x = data.column(feature)
    scale = float(np.std(x, ddof=1)) / 4.0 if len(x) > 1 else 0.0
    out = []
    for g in grid:
        # a constant feature has zero spread; every row is then equally close
        w = scale * norm.pdf(x - g) if scale > 0 else np.ones_like(x)
        total = float(w.sum())
        if not total > 0:
            out.append((float(g), None))
            continue
        pred = model.predict(data.with_column(feature, np.full(len(data), g)))
        out.append((float(g), float(np.dot(w, pred) / total)))
    return out
