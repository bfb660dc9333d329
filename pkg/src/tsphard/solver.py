"""2-opt local search, exact tours and the 2-opt approximation-ratio fitness."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import CapacityError, Instance, RngLike, as_generator, distance_matrix, tour_length

EXACT_CAP = 20
BRUTE_FORCE_CAP = 10


@dataclass(frozen=True)
class SolveResult:
    tour: np.ndarray
    length: float
    iterations: int = 0


@dataclass(frozen=True)
class FitnessValue:
    """Mean 2-opt tour length over the optimum, plus the raw repetitions."""

    ratio: float
    optimal_length: float
    lengths: np.ndarray = field(repr=False)
    swaps: np.ndarray = field(repr=False)

    @property
    def repetitions(self) -> int:
        return len(self.lengths)

    def summary(self, stat: str = "mean") -> float:
        """Ratio under another summary statistic (mean, median, min, max)."""
        fn = {"mean": np.mean, "median": np.median, "min": np.min, "max": np.max}[stat]
        return float(fn(self.lengths)) / self.optimal_length

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "optimal_length": self.optimal_length,
            "lengths": [float(x) for x in self.lengths],
            "swaps": [int(s) for s in self.swaps],
        }


def _as_tour(start, n: int) -> np.ndarray:
    t = np.array(start, dtype=np.int64)
    if t.shape != (n,) or not np.array_equal(np.sort(t), np.arange(n)):
        raise ValueError("start is not a permutation of the nodes")
    return t


def random_tour(n: int, rng: RngLike) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be positive")
    return as_generator(rng).permutation(n).astype(np.int64)


def two_opt(dm: np.ndarray, start) -> SolveResult:
    """Deterministic best-improvement 2-opt from ``start``."""
    dm = np.ascontiguousarray(dm, dtype=float)
    tour = _as_tour(start, dm.shape[0])
    if len(tour) < 4:
        return SolveResult(tour, tour_length(dm, tour), 0)
    swaps = _kernels.two_opt_inplace(dm, tour)
    return SolveResult(tour, float(_kernels.canonical_len(dm, tour)), int(swaps))


def improving_exchanges(dm: np.ndarray, tour, eps: float = 1e-12) -> list[tuple[int, int]]:
    """All 2-exchanges (i, j) that shorten ``tour`` by more than ``eps``.

    Straightforward audit: builds each neighbour explicitly.
    """
    t = list(tour)
    n = len(t)
    base = tour_length(dm, t)
    found = []
    for i in range(n - 2):
        for j in range(i + 2, n if i > 0 else n - 1):
            cand = t[: i + 1] + t[i + 1 : j + 1][::-1] + t[j + 1 :]
            if tour_length(dm, cand) < base - eps:
                found.append((i, j))
    return found


def exact_tour(dm: np.ndarray, cap: int = EXACT_CAP) -> SolveResult:
    """Optimal tour by Held-Karp dynamic programming (N <= cap)."""
    dm = np.ascontiguousarray(dm, dtype=float)
    n = dm.shape[0]
    if n > cap:
        raise CapacityError(f"exact solver is capped at N={cap} cities (got N={n})")
    if n < 3:
        raise ValueError("exact_tour needs at least 3 cities")
    _, tour = _kernels.held_karp(dm)
    return SolveResult(tour, float(_kernels.canonical_len(dm, tour)), 0)


def brute_force_tour(dm: np.ndarray) -> SolveResult:
    """Exhaustive search with node 0 first and one direction per tour."""
    n = dm.shape[0]
    if n > BRUTE_FORCE_CAP:
        raise CapacityError(f"brute force is capped at N={BRUTE_FORCE_CAP} cities (got N={n})")
    if n < 3:
        raise ValueError("brute_force_tour needs at least 3 cities")
    best, best_tour = math.inf, None
    for perm in itertools.permutations(range(1, n)):
        if perm[0] > perm[-1]:
            continue
        t = (0,) + perm
        length = sum(dm[t[k], t[(k + 1) % n]] for k in range(n))
        if length < best:
            best, best_tour = length, t
    return SolveResult(np.array(best_tour, dtype=np.int64), float(best), 0)


def compute_fitness(
    inst: Instance,
    repetitions: int,
    rng: RngLike,
    *,
    optimal_length: float | None = None,
    cap: int = EXACT_CAP,
) -> FitnessValue:
    """Mean length of ``repetitions`` 2-opt runs divided by the optimal length.

    All start tours are drawn up front from ``rng``, so the result does not
    depend on the order in which repetitions are evaluated. A known optimum
    can be supplied to skip the exact solve.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be positive")
    dm = distance_matrix(inst)
    if optimal_length is None:
        optimal_length = exact_tour(dm, cap).length
    n = inst.n
    starts = as_generator(rng).permuted(np.tile(np.arange(n, dtype=np.int64), (repetitions, 1)), axis=1)
    if n < 4:
        lengths = np.array([_kernels.canonical_len(dm, s) for s in starts])
        swaps = np.zeros(repetitions, dtype=np.int64)
    else:
        lengths, swaps = _kernels.two_opt_batch(dm, starts)
    if optimal_length <= 0:
        raise ValueError("optimal tour length is zero (all cities coincide)")
    # averaging the per-run ratios keeps ratio == 1.0 exact when every run is optimal
    ratio = math.fsum(lengths / optimal_length) / repetitions
    return FitnessValue(ratio, float(optimal_length), lengths, swaps)
