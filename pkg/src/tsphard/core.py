"""Instances, reproducible random streams, geometry and the instance operators.

Everything here is a pure function of its arguments; instances are immutable
(their coordinate array is read-only) and every operator returns a new one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np


class CapacityError(ValueError):
    """Raised when an instance is larger than an exact method allows."""


@dataclass(frozen=True)
class RngStream:
    """A (seed, path) address for an independent random stream.

    Equal addresses always yield identical sequences; children with distinct
    paths are independent (``numpy.random.SeedSequence`` spawn keys).
    """

    seed: int
    path: tuple[int, ...] = ()

    def child(self, *index: int) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(int(i) for i in index))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed) & (2**64 - 1), spawn_key=self.path)
        return np.random.default_rng(ss)


RngLike = Union[RngStream, np.random.Generator, int]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return RngStream(int(rng)).generator()


@dataclass(frozen=True, eq=False)
class Instance:
    """N labelled points in the plane."""

    points: np.ndarray
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim != 2 or pts.shape[1] != 2:
            if pts.size == 0:
                pts = pts.reshape(0, 2)
            else:
                raise ValueError(f"points must have shape (N, 2), got {pts.shape}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def with_points(self, points, **meta) -> "Instance":
        return Instance(points, self.name, {**self.meta, **meta})

    def key(self) -> bytes:
        """Byte key identifying the exact coordinates (for caching)."""
        return self.points.tobytes()


def _check_rate(rate: float) -> None:
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate must lie in [0, 1], got {rate}")


def random_instance(n: int, rng: RngLike) -> Instance:
    if n < 1:
        raise ValueError("instance size must be at least 1")
    return Instance(as_generator(rng).random((n, 2)))


def rescale(inst: Instance) -> Instance:
    """Per-axis min-max normalisation onto [0, 1].

    A constant axis is mapped to 0.5 and reported in
    ``meta["degenerate_axes"]``.
    """
    if inst.n < 2:
        raise ValueError("rescale needs at least 2 points")
    pts = inst.points
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    out = np.empty_like(pts)
    degenerate = []
    for ax in range(2):
        if span[ax] > 0:
            out[:, ax] = (pts[:, ax] - lo[ax]) / span[ax]
        else:
            out[:, ax] = 0.5
            degenerate.append(ax)
    if degenerate:
        return inst.with_points(out, degenerate_axes=degenerate)
    return inst.with_points(out)


def round_to_grid(inst: Instance, cells: int) -> Instance:
    """Snap every coordinate to the centre of its cell in a cells x cells grid."""
    if cells < 1:
        raise ValueError("cells must be a positive integer")
    idx = np.floor(inst.points * cells)
    idx = np.clip(idx, 0, cells - 1)
    return inst.with_points((idx + 0.5) / cells)


def cut_to_boundary(inst: Instance) -> Instance:
    return inst.with_points(np.clip(inst.points, 0.0, 1.0))


def normal_mutation(inst: Instance, rate: float, sd: float, rng: RngLike) -> Instance:
    """Add N(0, sd) noise to both coordinates of each city with probability ``rate``."""
    _check_rate(rate)
    if sd < 0:
        raise ValueError("sd must be non-negative")
    gen = as_generator(rng)
    hit = gen.random(inst.n) < rate
    noise = gen.normal(0.0, 1.0, size=(inst.n, 2)) * sd
    return inst.with_points(inst.points + noise * hit[:, None])


def uniform_mutation(inst: Instance, rate: float, rng: RngLike) -> Instance:
    """Redraw both coordinates of each city uniformly with probability ``rate``."""
    _check_rate(rate)
    gen = as_generator(rng)
    hit = gen.random(inst.n) < rate
    fresh = gen.random((inst.n, 2))
    return inst.with_points(np.where(hit[:, None], fresh, inst.points))


def uniform_crossover(a: Instance, b: Instance, rng: RngLike) -> Instance:
    if a.n != b.n:
        raise ValueError(f"parent sizes differ: {a.n} != {b.n}")
    take_a = as_generator(rng).random(a.n) < 0.5
    return a.with_points(np.where(take_a[:, None], a.points, b.points))


# -- geometry ---------------------------------------------------------------


def distance_matrix(inst: Instance) -> np.ndarray:
    pts = inst.points
    diff = pts[:, None, :] - pts[None, :, :]
    d = np.sqrt((diff**2).sum(axis=-1))
    np.fill_diagonal(d, 0.0)
    return d


def tour_length(dm: np.ndarray, tour: Sequence[int]) -> float:
    t = np.asarray(tour, dtype=np.int64)
    n = dm.shape[0]
    if t.shape != (n,) or not np.array_equal(np.sort(t), np.arange(n)):
        raise ValueError("tour is not a permutation of the nodes")
    return float(dm[t, np.roll(t, -1)].sum())


@dataclass(frozen=True)
class Mst:
    """Spanning tree as (parent, child, weight) edges plus hop depth per node."""

    edges: tuple[tuple[int, int, float], ...]
    depth: np.ndarray

    @property
    def weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))


def minimum_spanning_tree(dm: np.ndarray, root: int = 0) -> Mst:
    """Prim's algorithm from ``root``; ties go to the lowest node index."""
    n = dm.shape[0]
    if n < 2:
        raise ValueError("MST needs at least 2 nodes")
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.full(n, -1)
    depth = np.zeros(n, dtype=np.int64)
    best[root] = 0.0
    edges = []
    for _ in range(n):
        cand = np.where(in_tree, np.inf, best)
        v = int(np.argmin(cand))
        in_tree[v] = True
        if parent[v] >= 0:
            edges.append((int(parent[v]), v, float(dm[parent[v], v])))
            depth[v] = depth[parent[v]] + 1
        closer = (~in_tree) & (dm[v] < best)
        best[closer] = dm[v][closer]
        parent[closer] = v
    depth.setflags(write=False)
    return Mst(tuple(edges), depth)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(inst: Instance) -> tuple[list[int], float]:
    """Counter-clockwise hull vertex indices and hull area.

    Points lying on the interior of a hull edge are not hull vertices.
    Coincident points contribute their lowest index only.
    """
    pts = inst.points
    if inst.n < 3:
        raise ValueError("convex hull needs at least 3 points")
    order = sorted(range(inst.n), key=lambda i: (pts[i, 0], pts[i, 1], i))
    uniq = []
    for i in order:
        if not uniq or tuple(pts[i]) != tuple(pts[uniq[-1]]):
            uniq.append(i)
    if len(uniq) == 1:
        return [uniq[0]], 0.0

    def half(seq):
        chain: list[int] = []
        for i in seq:
            while len(chain) >= 2 and _cross(pts[chain[-2]], pts[chain[-1]], pts[i]) <= 0:
                chain.pop()
            chain.append(i)
        return chain

    lower = half(uniq)
    upper = half(reversed(uniq))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        # all points collinear: the two extremes
        return [uniq[0], uniq[-1]], 0.0
    xy = pts[hull]
    area = 0.5 * abs(
        float(np.dot(xy[:, 0], np.roll(xy[:, 1], -1)) - np.dot(xy[:, 1], np.roll(xy[:, 0], -1)))
    )
    return hull, area


def canonical_order(inst: Instance) -> np.ndarray:
    """Permutation sorting points lexicographically by (x, y)."""
    pts = inst.points
    return np.lexsort((pts[:, 1], pts[:, 0]))


def regular_polygon(n: int, radius: float = 1.0, center=(0.0, 0.0), phase: float = 0.0) -> Instance:
    ang = phase + 2 * math.pi * np.arange(n) / n
    pts = np.column_stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)])
    return Instance(pts)


def derive_seed(seed: int, *path: int) -> int:
    """A 63-bit integer seed for the sub-stream ``(seed, path)``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
