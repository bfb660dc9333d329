"""Morphing a hard instance into an easy one along a convex-combination path."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Instance,
    RngLike,
    as_generator,
    cut_to_boundary,
    normal_mutation,
    rescale,
    round_to_grid,
)

DEFAULT_ALPHAS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class Matching:
    """``assignment[i]`` is the point of B matched to point i of A."""

    assignment: np.ndarray
    total_distance: float


def _check_sizes(a: Instance, b: Instance) -> None:
    if a.n != b.n:
        raise ValueError(f"instance sizes differ: {a.n} != {b.n}")


def _matching(a: Instance, b: Instance, assignment) -> Matching:
    assignment = np.asarray(assignment, dtype=np.int64)
    d = np.linalg.norm(a.points - b.points[assignment], axis=1)
    return Matching(assignment, float(d.sum()))


def greedy_point_matching(a: Instance, b: Instance) -> Matching:
    """Repeatedly pair the closest unmatched points (ties: smallest (i, j))."""
    _check_sizes(a, b)
    n = a.n
    d = np.linalg.norm(a.points[:, None, :] - b.points[None, :, :], axis=-1)
    # a stable sort of the flattened matrix visits equal distances in (i, j) order
    order = np.argsort(d, axis=None, kind="stable")
    used_a = np.zeros(n, dtype=bool)
    used_b = np.zeros(n, dtype=bool)
    assignment = np.full(n, -1, dtype=np.int64)
    left = n
    for flat in order:
        i, j = divmod(int(flat), n)
        if used_a[i] or used_b[j]:
            continue
        assignment[i] = j
        used_a[i] = used_b[j] = True
        left -= 1
        if left == 0:
            break
    return _matching(a, b, assignment)


def random_point_matching(a: Instance, b: Instance, rng: RngLike) -> Matching:
    _check_sizes(a, b)
    return _matching(a, b, as_generator(rng).permutation(a.n))


def _process(inst: Instance, cells: int, scheme: str, gen, rate: float, sd: float) -> Instance:
    out = round_to_grid(rescale(inst), cells)
    if scheme == "rnd":
        out = cut_to_boundary(normal_mutation(out, rate, sd, gen))
    elif scheme != "nrnd":
        raise ValueError(f"unknown rounding scheme {scheme!r}")
    return out


def morph(
    hard: Instance,
    easy: Instance,
    alpha: float,
    cells: int = 100,
    rounding_scheme: str = "nrnd",
    rng: RngLike = 0,
    *,
    matching: Matching | None = None,
    normal_mutation_rate: float = 0.01,
    normal_mutation_sd: float = 0.025,
) -> Instance:
    """alpha * hard + (1 - alpha) * matched easy, then rescale and round.

    alpha = 1 is the hard end. The rnd scheme adds a normal mutation and a cut
    to the unit square afterwards.
    """
    _check_sizes(hard, easy)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if matching is None:
        matching = greedy_point_matching(hard, easy)
    matched = easy.points[matching.assignment]
    mixed = Instance(alpha * hard.points + (1.0 - alpha) * matched, meta={"alpha": float(alpha)})
    return _process(
        mixed, cells, rounding_scheme, as_generator(rng), normal_mutation_rate, normal_mutation_sd
    )


def morph_sequence(
    hard: Instance,
    easy: Instance,
    alphas=DEFAULT_ALPHAS,
    cells: int = 100,
    rounding_scheme: str = "nrnd",
    rng: RngLike = 0,
    **kw,
) -> list[tuple[float, Instance]]:
    """One morph per alpha, all sharing a single greedy matching."""
    alphas = list(alphas)
    if not alphas:
        raise ValueError("alphas must be non-empty")
    matching = greedy_point_matching(hard, easy)
    gen = as_generator(rng)
    return [
        (float(a), morph(hard, easy, a, cells, rounding_scheme, gen, matching=matching, **kw))
        for a in alphas
    ]
