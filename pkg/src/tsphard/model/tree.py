"""CART classification tree with Gini impurity."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .dataset import Dataset


@dataclass
class Node:
    label: str
    n: int
    feature: str | None = None
    threshold: float | None = None
    left: "Node | None" = None
    right: "Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"label": self.label, "n": self.n}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "label": self.label,
            "n": self.n,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Node":
        if "feature" not in d:
            return cls(str(d["label"]), int(d.get("n", 0)))
        return cls(
            str(d["label"]),
            int(d.get("n", 0)),
            str(d["feature"]),
            float(d["threshold"]),
            cls.from_dict(d["left"]),
            cls.from_dict(d["right"]),
        )


@dataclass
class DecisionTree:
    root: Node
    max_depth: int | None
    min_leaf: int

    def predict(self, data: Dataset) -> np.ndarray:
        return np.array([predict_tree(self, dict(zip(data.names, row))) for row in data.X])

    def features_used(self) -> set[str]:
        out, stack = set(), [self.root]
        while stack:
            node = stack.pop()
            if not node.is_leaf:
                out.add(node.feature)
                stack += [node.left, node.right]
        return out

    def to_dict(self) -> dict:
        return {"type": "tree", "max_depth": self.max_depth, "min_leaf": self.min_leaf, "root": self.root.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(Node.from_dict(d["root"]), d.get("max_depth"), int(d.get("min_leaf", 1)))


def gini(labels) -> float:
    n = len(labels)
    if n == 0:
        return 0.0
    p = np.array(list(Counter(labels).values())) / n
    return float(1.0 - np.sum(p * p))


def majority(labels) -> str:
    """Most frequent label; ties go to the alphabetically first (easy < hard)."""
    counts = Counter(labels)
    top = max(counts.values())
    return sorted(k for k, v in counts.items() if v == top)[0]


def _best_split(X: np.ndarray, y: np.ndarray, names, min_leaf: int):
    """Lowest weighted Gini over (feature, midpoint threshold); None if no valid split."""
    n = len(y)
    classes, yi = np.unique(y, return_inverse=True)
    total = np.bincount(yi, minlength=len(classes)).astype(float)
    best = None  # (impurity, name, threshold)
    for name in sorted(names):
        col = X[:, names.index(name)]
        order = np.argsort(col, kind="stable")
        xs, ys = col[order], yi[order]
        onehot = np.zeros((n, len(classes)))
        onehot[np.arange(n), ys] = 1.0
        left = np.cumsum(onehot, axis=0)[:-1]  # counts with k+1 rows on the left
        nl = np.arange(1, n, dtype=float)
        nr = n - nl
        right = total - left
        gl = 1.0 - ((left / nl[:, None]) ** 2).sum(axis=1)
        gr = 1.0 - ((right / nr[:, None]) ** 2).sum(axis=1)
        imp = (nl * gl + nr * gr) / n
        ok = (xs[1:] > xs[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not ok.any():
            continue
        cand = np.flatnonzero(ok)
        k = cand[np.argmin(imp[cand])]  # first (smallest threshold) among equal minima
        thr = 0.5 * (xs[k] + xs[k + 1])
        if best is None or imp[k] < best[0]:
            best = (float(imp[k]), name, float(thr))
    return best


def fit_tree(data: Dataset, max_depth: int | None = None, min_leaf: int = 1) -> DecisionTree:
    """Greedy CART; stops at pure nodes, ``max_depth`` or ``min_leaf``."""
    if min_leaf < 1:
        raise ValueError("min_leaf must be positive")
    y = np.asarray(data.y).astype(str)
    names = list(data.names)

    def grow(idx: np.ndarray, depth: int) -> Node:
        labels = y[idx]
        node = Node(majority(labels), len(idx))
        parent = gini(labels)
        if parent == 0.0 or (max_depth is not None and depth >= max_depth) or len(idx) < 2 * min_leaf:
            return node
        split = _best_split(data.X[idx], labels, names, min_leaf)
        # zero-gain splits are allowed: XOR-like data has no improving first split
        if split is None or split[0] > parent + 1e-15:
            return node
        _, name, thr = split
        go_left = data.X[idx, names.index(name)] <= thr
        node.feature, node.threshold = name, thr
        node.left = grow(idx[go_left], depth + 1)
        node.right = grow(idx[~go_left], depth + 1)
        return node

    return DecisionTree(grow(np.arange(len(y)), 0), max_depth, min_leaf)


def predict_tree(tree: DecisionTree, x: Mapping[str, float]) -> str:
    node = tree.root
    while not node.is_leaf:
        if node.feature not in x:
            raise ValueError(f"feature {node.feature!r} missing from input")
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.label
