"""Multivariate adaptive regression splines (hinge bases, degree <= 2).

Forward pass: greedily add the reflected hinge pair (parent x h(x - c),
parent x h(c - x)) with the largest drop in training SSE. Candidates are
scored against an orthonormal basis of the current model, so each
(parent, feature) pair costs a few matrix products over all knots at once.

Backward pass: repeatedly drop the term whose removal leaves the smallest
SSE and keep the submodel with the lowest GCV seen along the way.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.linalg import solve_triangular

from .dataset import Dataset

KNOT_PENALTY = 3.0
DEFAULT_MAX_TERMS = 45
_REL_TOL = 1e-10


@dataclass(frozen=True)
class Hinge:
    feature: str
    knot: float
    direction: int  # +1: max(0, x - knot); -1: max(0, knot - x)

    def __call__(self, x):
        return np.maximum(0.0, self.direction * (np.asarray(x, dtype=float) - self.knot))

    def label(self) -> str:
        if self.direction > 0:
            return f"h({self.feature}-{self.knot:.6g})"
        return f"h({self.knot:.6g}-{self.feature})"


@dataclass(frozen=True)
class Term:
    coef: float
    factors: tuple[Hinge, ...]

    def label(self) -> str:
        return "*".join(h.label() for h in self.factors)


@dataclass
class MarsModel:
    intercept: float
    terms: list[Term] = field(default_factory=list)
    gcv: float = float("nan")

    @property
    def features(self) -> set[str]:
        return {h.feature for t in self.terms for h in t.factors}

    def basis(self, data: Dataset) -> np.ndarray:
        cols = [np.ones(len(data))]
        for t in self.terms:
            col = np.ones(len(data))
            for h in t.factors:
                col = col * h(data.column(h.feature))
            cols.append(col)
        return np.column_stack(cols)

    def predict(self, data: Dataset) -> np.ndarray:
        missing = self.features - set(data.names)
        if missing:
            raise ValueError(f"features missing from input: {sorted(missing)}")
        coef = np.array([self.intercept] + [t.coef for t in self.terms])
        return self.basis(data) @ coef

    def table(self) -> list[tuple[str, float]]:
        """(spline, coefficient) rows, intercept first."""
        return [("(Intercept)", self.intercept)] + [(t.label(), t.coef) for t in self.terms]

    def to_dict(self) -> dict:
        return {
            "type": "mars",
            "intercept": self.intercept,
            "terms": [
                {
                    "coef": t.coef,
                    "factors": [
                        {"feature": h.feature, "knot": h.knot, "dir": "+" if h.direction > 0 else "-"}
                        for h in t.factors
                    ],
                }
                for t in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MarsModel":
        terms = [
            Term(
                float(t["coef"]),
                tuple(
                    Hinge(str(f["feature"]), float(f["knot"]), 1 if f["dir"] == "+" else -1)
                    for f in t["factors"]
                ),
            )
            for t in d.get("terms", [])
        ]
        return cls(float(d["intercept"]), terms)


def predict_mars(model: MarsModel, x: Mapping[str, float]) -> float:
    total = model.intercept
    for t in model.terms:
        prod = t.coef
        for h in t.factors:
            if h.feature not in x:
                raise ValueError(f"feature {h.feature!r} missing from input")
            prod *= max(0.0, h.direction * (float(x[h.feature]) - h.knot))
        total += prod
    return float(total)


def gcv(sse: float, n: int, n_terms: int, n_knots: int, penalty: float = KNOT_PENALTY) -> float:
    """SSE / (n (1 - C/n)^2) with C = terms (incl. intercept) + penalty * knots."""
    c = n_terms + penalty * n_knots
    if c >= n:
        return math.inf
    return sse / (n * (1.0 - c / n) ** 2)


def _n_knots(factor_lists) -> int:
    return len({(h.feature, h.knot) for fs in factor_lists for h in fs})


def _forward(X, y, names, max_terms, max_degree, tol):
    n, p = X.shape
    Q = np.ones((n, 1)) / math.sqrt(n)
    cols = [np.ones(n)]
    factors: list[tuple[Hinge, ...]] = [()]
    r = y - Q @ (Q.T @ y)
    sse = float(r @ r)
    sst = sse
    knots = [np.unique(X[:, f]) for f in range(p)]
    hp = [np.maximum(0.0, X[:, f][:, None] - knots[f][None, :]) for f in range(p)]
    hm = [np.maximum(0.0, knots[f][None, :] - X[:, f][:, None]) for f in range(p)]
    hp2 = [h * h for h in hp]
    hm2 = [h * h for h in hm]

    while len(factors) - 1 + 2 <= max_terms and sse > 1e-14 * max(sst, 1e-300):
        best_gain, best = 0.0, None
        for e, (pcol, pf) in enumerate(zip(cols, factors)):
            if len(pf) >= max_degree:
                continue
            used = {h.feature for h in pf}
            w2 = pcol * pcol
            Qw = Q * pcol[:, None]
            rw = r * pcol
            for f in range(p):
                if names[f] in used:
                    continue
                A1 = Qw.T @ hp[f]
                A2 = Qw.T @ hm[f]
                s1 = w2 @ hp2[f]
                s2 = w2 @ hm2[f]
                rc1 = rw @ hp[f]
                rc2 = rw @ hm[f]
                n1 = s1 - np.einsum("ij,ij->j", A1, A1)
                n2 = s2 - np.einsum("ij,ij->j", A2, A2)
                v1 = n1 > tol * np.maximum(s1, 1e-300)
                # the two hinges have disjoint support, so <c1, c2> = 0 before projection
                c12 = -np.einsum("ij,ij->j", A1, A2)
                with np.errstate(divide="ignore", invalid="ignore"):
                    g1 = np.where(v1, rc1 * rc1 / n1, 0.0)
                    s_n1 = np.where(v1, np.sqrt(np.where(v1, n1, 1.0)), 1.0)
                    u12 = np.where(v1, c12 / s_n1, 0.0)
                    n2p = n2 - u12 * u12
                    rc2p = rc2 - np.where(v1, rc1 / s_n1, 0.0) * u12
                    v2 = n2p > tol * np.maximum(s2, 1e-300)
                    g2 = np.where(v2, rc2p * rc2p / n2p, 0.0)
                gain = g1 + g2
                k = int(np.argmax(gain))
                if gain[k] > best_gain:
                    best_gain, best = float(gain[k]), (e, f, k)
        if best is None or best_gain < 1e-6 * sse:
            break
        e, f, k = best
        c = float(knots[f][k])
        added = 0
        for direction, H in ((1, hp[f]), (-1, hm[f])):
            col = cols[e] * H[:, k]
            q = col - Q @ (Q.T @ col)
            q = q - Q @ (Q.T @ q)
            nq = float(np.linalg.norm(q))
            if nq * nq <= tol * max(float(col @ col), 1e-300):
                continue
            Q = np.column_stack([Q, q / nq])
            cols.append(col)
            factors.append(factors[e] + (Hinge(names[f], c, direction),))
            added += 1
        if not added:
            break
        r = y - Q @ (Q.T @ y)
        sse = float(r @ r)
    return cols, factors


def _lstsq_sse(B, y):
    coef, *_ = np.linalg.lstsq(B, y, rcond=None)
    res = y - B @ coef
    return float(res @ res), coef


def _drop_costs(B, y):
    """SSE of the full fit and the SSE increase from deleting each column.

    Deleting column j raises SSE by coef_j^2 / [(B'B)^-1]_jj, read off one QR.
    """
    Q, R = np.linalg.qr(B)
    coef = solve_triangular(R, Q.T @ y)
    rinv = solve_triangular(R, np.eye(R.shape[0]))
    res = y - B @ coef
    return float(res @ res), coef * coef / (rinv * rinv).sum(axis=1)


def _backward(cols, factors, y, penalty):
    n = len(y)
    B = np.column_stack(cols)
    sst = float(((y - y.mean()) ** 2).sum())
    slack = 1e-12 * max(sst / n, 1e-300)
    current = list(range(1, len(cols)))

    def score(subset, sse):
        return gcv(sse, n, len(subset) + 1, _n_knots([factors[i] for i in subset]), penalty)

    sse, inc = _drop_costs(B[:, [0] + current], y)
    best_g, best_subset = score(current, sse), list(current)
    while current:
        # delete the term whose removal leaves the smallest SSE (first on ties)
        current.pop(int(np.argmin(inc[1:])))
        sse, inc = _drop_costs(B[:, [0] + current], y)
        g = score(current, sse)
        # smaller models win ties at the level of rounding noise
        if g <= best_g + slack:
            best_g, best_subset = g, list(current)
    return best_subset, best_g


def fit_mars(
    data: Dataset,
    max_terms: int = DEFAULT_MAX_TERMS,
    max_degree: int = 2,
    penalty: float = KNOT_PENALTY,
) -> MarsModel:
    """Fit a MARS model to a numeric target.

    ``max_terms`` bounds the non-intercept terms of the forward pass.
    """
    if not 1 <= max_degree <= 2:
        raise ValueError("max_degree must be 1 or 2")
    y = np.asarray(data.y, dtype=float)
    if len(y) < 3:
        raise ValueError("MARS needs at least 3 rows")
    if np.ptp(y) == 0:
        return MarsModel(float(y[0]), [], 0.0)
    cols, factors = _forward(data.X, y, list(data.names), max_terms, max_degree, _REL_TOL)
    subset, g = _backward(cols, factors, y, penalty)
    B = np.column_stack([cols[0]] + [cols[i] for i in subset])
    _, coef = _lstsq_sse(B, y)
    terms = [Term(float(c), factors[i]) for c, i in zip(coef[1:], subset)]
    return MarsModel(float(coef[0]), terms, float(g))
