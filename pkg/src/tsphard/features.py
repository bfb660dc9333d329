"""The 47 instance features, in eight groups.

``extract_features`` sorts the points lexicographically before computing
anything, so the vector does not depend on the order of the input points
(MST root, nearest-neighbour ties and cluster assignment all key off this
canonical order).
"""
from __future__ import annotations

from collections import deque

import numpy as np

from .core import Instance, canonical_order, convex_hull, distance_matrix, minimum_spanning_tree

CLUSTER_EPS = {"01pct": 0.01, "05pct": 0.05, "10pct": 0.1}
MIN_PTS = 3
KDE_GRID = 512
HIST_BINS = 10

GROUPS: dict[str, list[str]] = {
    "distance": [
        "distance_min",
        "distance_max",
        "distance_mean",
        "distance_median",
        "distance_prop_below_mean",
        "distance_distinct_fraction",
        "distance_sd",
        "distance_mean_tour_length",
    ],
    "mode": ["mode_number", "mode_quantity", "mode_frequency", "mode_mean"],
    "cluster": [f"cluster_{k}_number_of_clusters" for k in CLUSTER_EPS]
    + [f"cluster_{k}_mean_distance_to_centroid" for k in CLUSTER_EPS],
    "nnd": ["nnds_min", "nnds_max", "nnds_mean", "nnds_median", "nnds_sd", "nnds_cv"],
    "centroid": [
        "centroid_x",
        "centroid_y",
        "centroid_min_distance_to_centroid",
        "centroid_mean_distance_to_centroid",
        "centroid_max_distance_to_centroid",
    ],
    "mst": [f"mst_depth_{s}" for s in ("min", "mean", "median", "max", "sd")]
    + [f"mst_dists_{s}" for s in ("min", "mean", "median", "max", "sd")]
    + ["mst_dists_sum"],
    "angle": ["angle_min", "angle_mean", "angle_median", "angle_max", "angle_sd"],
    "hull": ["chull_area", "chull_points_on_hull"],
}

FEATURE_NAMES: list[str] = [name for group in GROUPS.values() for name in group]
assert len(FEATURE_NAMES) == 47


def _sd(v: np.ndarray) -> float:
    return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0


def _five(v) -> list[float]:
    """min, mean, median, max, sample sd."""
    v = np.asarray(v, dtype=float)
    return [float(v.min()), float(v.mean()), float(np.median(v)), float(v.max()), _sd(v)]


def edge_costs(dm: np.ndarray) -> np.ndarray:
    return dm[np.triu_indices(dm.shape[0], 1)]


def distance_features(dm: np.ndarray) -> list[float]:
    n = dm.shape[0]
    if n < 2:
        raise ValueError("distance features need at least 2 cities")
    c = edge_costs(dm)
    mean = float(c.mean())
    # compare at 1e-10 so grid distances computed along different axes match
    distinct = len(np.unique(np.round(c, 10))) / len(c)
    return [
        float(c.min()),
        float(c.max()),
        mean,
        float(np.median(c)),
        float(np.mean(c < mean)),
        float(distinct),
        _sd(c),
        float(c.sum()) * 2.0 / (n - 1),
    ]


def silverman_bandwidth(x: np.ndarray) -> float:
    """0.9 * min(sd, IQR/1.34) * n^(-1/5), with R's fallbacks for zero spread."""
    sd = _sd(x)
    q75, q25 = np.percentile(x, [75, 25])
    lo = min(sd, (q75 - q25) / 1.34)
    if lo <= 0:
        lo = sd or abs(float(x[0])) or 1.0
    return 0.9 * lo * len(x) ** -0.2


def gaussian_kde(x: np.ndarray, grid: np.ndarray, bw: float) -> np.ndarray:
    z = (grid[:, None] - x[None, :]) / bw
    return np.exp(-0.5 * z * z).sum(axis=1) / (len(x) * bw * np.sqrt(2 * np.pi))


def _peaks(values: np.ndarray) -> np.ndarray:
    """Indices of strict local maxima; plateaus count once (their first index).

    The two ends count when they exceed their only neighbour.
    """
    v = np.asarray(values, dtype=float)
    keep = np.concatenate([[True], v[1:] != v[:-1]])
    idx = np.flatnonzero(keep)
    u = v[idx]
    if len(u) == 1:
        return idx
    left = np.concatenate([[-np.inf], u[:-1]])
    right = np.concatenate([u[1:], [-np.inf]])
    return idx[(u > left) & (u > right)]


def mode_features(dm: np.ndarray) -> list[float]:
    """mode_number, mode_quantity, mode_frequency, mode_mean.

    number/frequency/mean come from a Gaussian KDE (Silverman bandwidth) on a
    512-point grid over [min, max] of the edge costs; quantity counts the
    peaks of a 10-bin histogram.
    """
    c = edge_costs(dm)
    if len(c) == 0:
        raise ValueError("mode features need at least 2 cities")
    lo, hi = float(c.min()), float(c.max())
    if hi - lo <= 1e-12 * max(abs(hi), 1.0):
        return [1.0, 1.0, 1.0, float(c.mean())]
    grid = np.linspace(lo, hi, KDE_GRID)
    dens = gaussian_kde(c, grid, silverman_bandwidth(c))
    modes = _peaks(dens)
    counts, _ = np.histogram(c, bins=HIST_BINS, range=(lo, hi))
    return [
        float(len(modes)),
        float(len(_peaks(counts))),
        float(dens[modes].mean()),
        float(grid[modes].mean()),
    ]


def gdbscan(inst: Instance, eps: float, min_pts: int = MIN_PTS) -> np.ndarray:
    """Density-based clustering; returns labels with -1 for noise.

    A point is core when at least ``min_pts`` points (itself included) lie
    within ``eps``. Clusters are connected components of core points; a border
    point joins the cluster of its nearest core neighbour, ties going to the
    cluster whose lexicographically smallest core point comes first. Labels
    are numbered by each cluster's lowest member index.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = inst.n
    labels = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels
    dm = distance_matrix(inst)
    near = dm <= eps
    core = near.sum(axis=1) >= min_pts
    comp = np.full(n, -1, dtype=np.int64)
    ncomp = 0
    for s in np.flatnonzero(core):
        if comp[s] >= 0:
            continue
        comp[s] = ncomp
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for w in np.flatnonzero(near[v] & core):
                if comp[w] < 0:
                    comp[w] = ncomp
                    queue.append(w)
        ncomp += 1
    if ncomp == 0:
        return labels
    pts = inst.points
    comp_key = {}
    for k in range(ncomp):
        members = np.flatnonzero(comp == k)
        comp_key[k] = min((pts[i, 0], pts[i, 1]) for i in members)
    for v in range(n):
        if core[v]:
            continue
        cores = np.flatnonzero(near[v] & core)
        if len(cores) == 0:
            continue
        dmin = dm[v, cores].min()
        cand = {int(comp[w]) for w in cores if dm[v, w] == dmin}
        comp[v] = min(cand, key=lambda k: comp_key[k])
    first = {}
    for v in range(n):
        if comp[v] >= 0 and comp[v] not in first:
            first[comp[v]] = len(first)
    for v in range(n):
        if comp[v] >= 0:
            labels[v] = first[comp[v]]
    return labels


def _cluster_stats(inst: Instance, labels: np.ndarray) -> tuple[float, float]:
    ids = np.unique(labels[labels >= 0])
    if len(ids) == 0:
        return 0.0, 0.0
    dists = []
    for k in ids:
        p = inst.points[labels == k]
        dists.append(np.linalg.norm(p - p.mean(axis=0), axis=1))
    return float(len(ids)), float(np.concatenate(dists).mean())


def cluster_features(inst: Instance) -> list[float]:
    counts, means = [], []
    for eps in CLUSTER_EPS.values():
        k, m = _cluster_stats(inst, gdbscan(inst, eps))
        counts.append(k)
        means.append(m)
    return counts + means


def nnd_features(inst: Instance) -> list[float]:
    """Nearest-neighbour distances divided by their maximum."""
    if inst.n < 2:
        raise ValueError("nnd features need at least 2 cities")
    dm = distance_matrix(inst)
    np.fill_diagonal(dm, np.inf)
    nnd = dm.min(axis=1)
    top = nnd.max()
    norm = nnd / top if top > 0 else np.zeros_like(nnd)
    mn, mean, med, mx, sd = _five(norm)
    cv = sd / mean if mean > 0 else 0.0
    return [mn, mx, mean, med, sd, cv]


def centroid_features(inst: Instance) -> list[float]:
    c = inst.points.mean(axis=0)
    d = np.linalg.norm(inst.points - c, axis=1)
    return [float(c[0]), float(c[1]), float(d.min()), float(d.mean()), float(d.max())]


def mst_features(inst: Instance, dm: np.ndarray | None = None) -> list[float]:
    """Depth and edge-length statistics of the MST rooted at node 0."""
    if dm is None:
        dm = distance_matrix(inst)
    mst = minimum_spanning_tree(dm, root=0)
    w = np.array([e[2] for e in mst.edges])
    total = float(edge_costs(dm).sum())
    return _five(mst.depth) + _five(w) + [mst.weight / total if total > 0 else 0.0]


def _two_nearest(inst: Instance, dm: np.ndarray, v: int) -> tuple[int, int]:
    pts = inst.points
    others = np.array([u for u in range(inst.n) if u != v])
    # distance first, then coordinates, so ties do not depend on point order
    order = np.lexsort((others, pts[others, 1], pts[others, 0], dm[v, others]))
    return int(others[order[0]]), int(others[order[1]])


def angle_features(inst: Instance, dm: np.ndarray | None = None) -> list[float]:
    """Angle at each node between its two nearest neighbours."""
    if inst.n < 3:
        raise ValueError("angle features need at least 3 cities")
    if dm is None:
        dm = distance_matrix(inst)
    pts = inst.points
    angles = np.empty(inst.n)
    for v in range(inst.n):
        a, b = _two_nearest(inst, dm, v)
        u, w = pts[a] - pts[v], pts[b] - pts[v]
        nu, nw = np.hypot(*u), np.hypot(*w)
        if nu == 0 or nw == 0:
            angles[v] = 0.0
        else:
            angles[v] = np.arccos(np.clip(np.dot(u, w) / (nu * nw), -1.0, 1.0))
    return _five(angles)


def hull_features(inst: Instance) -> list[float]:
    hull, area = convex_hull(inst)
    return [float(area), len(hull) / inst.n]


def extract_features(inst: Instance) -> dict[str, float]:
    """All 47 features, keyed by name in canonical order."""
    if inst.n < 4:
        raise ValueError("feature extraction needs at least 4 cities")
    canon = Instance(inst.points[canonical_order(inst)])
    dm = distance_matrix(canon)
    values = (
        distance_features(dm)
        + mode_features(dm)
        + cluster_features(canon)
        + nnd_features(canon)
        + centroid_features(canon)
        + mst_features(canon, dm)
        + angle_features(canon, dm)
        + hull_features(canon)
    )
    return dict(zip(FEATURE_NAMES, values))


def feature_array(fv: dict[str, float]) -> np.ndarray:
    return np.array([fv[name] for name in FEATURE_NAMES], dtype=float)
