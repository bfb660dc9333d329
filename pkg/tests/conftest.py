import itertools
import json
from pathlib import Path

import numpy as np
import pytest

from tsphard.core import Instance


def cross(a, b):
    return float(a[0] * b[1] - a[1] * b[0])


@pytest.fixture
def square():
    return Instance([[0, 0], [1, 0], [1, 1], [0, 1]], "square")


def brute_mst_weight(dm):
    """Minimum over all edge subsets of size n-1 that connect the graph."""
    n = dm.shape[0]
    edges = list(itertools.combinations(range(n), 2))
    best = np.inf
    for sub in itertools.combinations(edges, n - 1):
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                a = parent[a]
            return a

        ok = True
        for i, j in sub:
            ri, rj = find(i), find(j)
            if ri == rj:
                ok = False
                break
            parent[ri] = rj
        if ok:
            best = min(best, sum(dm[i, j] for i, j in sub))
    return best


def extreme_points(pts):
    """Indices of points not inside or on an edge of a triangle/segment of others."""
    n = len(pts)
    out = []
    for p in range(n):
        others = [q for q in range(n) if q != p]
        inside = False
        for a, b, c in itertools.combinations(others, 3):
            A, B, C, P = pts[a], pts[b], pts[c], pts[p]
            d1 = cross(B - A, P - A)
            d2 = cross(C - B, P - B)
            d3 = cross(A - C, P - C)
            if (d1 >= 0 and d2 >= 0 and d3 >= 0) or (d1 <= 0 and d2 <= 0 and d3 <= 0):
                area = abs(cross(B - A, C - A))
                if area > 0:
                    inside = True
                    break
        if not inside:
            # on a segment between two other points
            for a, b in itertools.combinations(others, 2):
                A, B, P = pts[a], pts[b], pts[p]
                if abs(cross(B - A, P - A)) < 1e-15 and np.dot(P - A, P - B) < 0:
                    inside = True
                    break
        if not inside:
            out.append(p)
    return out


ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(num: int, title: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {title} -- {detail}"
        ACCEPTANCE[num] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])


def tree_files(root: Path) -> dict:
    """path -> bytes for every output file; manifests minus timing and paths under root."""
    out = {}
    for p in sorted(root.rglob("*")):
        if not p.is_file():
            continue
        data = p.read_bytes()
        if p.name == "manifest.json":
            m = json.loads(data)
            m.pop("wall_time")
            m.pop("out")
            m["config"].pop("out")
            m["inputs"] = [i.replace(str(root), "<root>") for i in m["inputs"]]
            m["config"] = json.loads(json.dumps(m["config"]).replace(str(root), "<root>"))
            data = json.dumps(m, sort_keys=True).encode()
        out[str(p.relative_to(root))] = data
    return out
