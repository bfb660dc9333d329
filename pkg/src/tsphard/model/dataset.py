"""Feature table with a target column."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.names):
            raise ValueError("X must be (rows, len(names))")
        if len(self.y) != X.shape[0]:
            raise ValueError("X and y have different row counts")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain missing or non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", np.asarray(self.y))
        object.__setattr__(self, "names", tuple(self.names))

    @classmethod
    def from_rows(cls, rows: Sequence[tuple[Mapping[str, float], object]], names: Sequence[str]) -> "Dataset":
        X = [[float(fv[n]) for n in names] for fv, _ in rows]
        y = [t for _, t in rows]
        return cls(np.array(X, dtype=float).reshape(len(rows), len(names)), np.array(y), tuple(names))

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def is_regression(self) -> bool:
        return np.issubdtype(self.y.dtype, np.number)

    def rows(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], self.names)

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.index(name)]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown feature {name!r}") from None

    def select(self, names: Sequence[str]) -> "Dataset":
        cols = [self.index(n) for n in names]
        return Dataset(self.X[:, cols], self.y, tuple(names))

    def with_column(self, name: str, values) -> "Dataset":
        X = self.X.copy()
        X[:, self.index(name)] = values
        return Dataset(X, self.y, self.names)
