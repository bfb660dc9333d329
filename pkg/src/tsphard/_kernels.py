"""Compiled inner loops for 2-opt and Held-Karp."""
import numpy as np
from numba import njit

GAIN_EPS = 1e-12


@njit(cache=True, nogil=True)
def two_opt_inplace(dm, tour):
    """Best-improvement 2-opt on ``tour`` (modified in place).

    Returns the number of exchanges applied. Equal gains keep the first
    (i, j) in scan order.
    """
    n = tour.shape[0]
    swaps = 0
    while True:
        best = GAIN_EPS
        bi = -1
        bj = -1
        for i in range(n - 2):
            a = tour[i]
            b = tour[i + 1]
            dab = dm[a, b]
            jmax = n - 1 if i > 0 else n - 2
            for j in range(i + 2, jmax + 1):
                c = tour[j]
                d = tour[(j + 1) % n]
                gain = dab + dm[c, d] - dm[a, c] - dm[b, d]
                if gain > best:
                    best = gain
                    bi = i
                    bj = j
        if bi < 0:
            return swaps
        lo = bi + 1
        hi = bj
        while lo < hi:
            tmp = tour[lo]
            tour[lo] = tour[hi]
            tour[hi] = tmp
            lo += 1
            hi -= 1
        swaps += 1


@njit(cache=True, nogil=True)
def tour_len(dm, tour):
    n = tour.shape[0]
    s = 0.0
    for k in range(n):
        s += dm[tour[k], tour[(k + 1) % n]]
    return s


@njit(cache=True, nogil=True)
def canonical_len(dm, tour):
    """Tour length summed from node 0 in the direction of its smaller neighbour.

    Equal cyclic tours give bit-identical lengths regardless of rotation or
    orientation.
    """
    n = tour.shape[0]
    z = 0
    for k in range(n):
        if tour[k] == 0:
            z = k
            break
    step = 1
    if tour[(z + 1) % n] > tour[(z - 1 + n) % n]:
        step = -1
    s = 0.0
    k = z
    for _ in range(n):
        nxt = (k + step + n) % n
        s += dm[tour[k], tour[nxt]]
        k = nxt
    return s


@njit(cache=True, nogil=True)
def two_opt_batch(dm, starts):
    """Run 2-opt from every row of ``starts``; rows become the local optima."""
    reps = starts.shape[0]
    lengths = np.empty(reps)
    swaps = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        swaps[r] = two_opt_inplace(dm, starts[r])
        lengths[r] = canonical_len(dm, starts[r])
    return lengths, swaps


@njit(cache=True, nogil=True)
def held_karp(dm):
    """Optimal tour by subset dynamic programming, node 0 fixed as start."""
    n = dm.shape[0]
    m = n - 1
    full = (1 << m) - 1
    dp = np.full((1 << m, m), np.inf)
    par = np.full((1 << m, m), -1, dtype=np.int8)
    for j in range(m):
        dp[1 << j, j] = dm[0, j + 1]
    for mask in range(1, full + 1):
        for j in range(m):
            if not (mask >> j) & 1:
                continue
            cur = dp[mask, j]
            if cur == np.inf:
                continue
            for k in range(m):
                if (mask >> k) & 1:
                    continue
                nm = mask | (1 << k)
                v = cur + dm[j + 1, k + 1]
                if v < dp[nm, k]:
                    dp[nm, k] = v
                    par[nm, k] = j
    best = np.inf
    last = -1
    for j in range(m):
        v = dp[full, j] + dm[j + 1, 0]
        if v < best:
            best = v
            last = j
    tour = np.empty(n, dtype=np.int64)
    tour[0] = 0
    mask = full
    pos = n - 1
    j = last
    while j >= 0:
        tour[pos] = j + 1
        pos -= 1
        pj = par[mask, j]
        mask ^= 1 << j
        j = pj
    return best, tour
