"""Instance files: a TSPLIB EUC_2D subset and the native JSON format.

Distances are never rounded to integers, unlike TSPLIB's EUC_2D convention;
only the coordinate section is exchanged.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import Instance


class InstanceFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def dumps_tsplib(inst: Instance, name: str | None = None, comment: str | None = None) -> str:
    lines = [f"NAME : {name or inst.name or 'instance'}"]
    if comment:
        lines.append(f"COMMENT : {comment}")
    lines += [
        "TYPE : TSP",
        f"DIMENSION : {inst.n}",
        "EDGE_WEIGHT_TYPE : EUC_2D",
        "NODE_COORD_SECTION",
    ]
    for i, (x, y) in enumerate(inst.points, start=1):
        lines.append(f"{i} {_fmt(x)} {_fmt(y)}")
    lines.append("EOF")
    return "\n".join(lines) + "\n"


def loads_tsplib(text: str) -> Instance:
    header: dict[str, str] = {}
    coords: dict[int, tuple[float, float]] = {}
    in_coords = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if in_coords:
            parts = line.split()
            if len(parts) != 3:
                if ":" in line or parts[0].isalpha():
                    in_coords = False
                else:
                    raise InstanceFormatError(f"bad coordinate line: {raw!r}")
            else:
                try:
                    coords[int(parts[0])] = (float(parts[1]), float(parts[2]))
                except ValueError as e:
                    raise InstanceFormatError(f"bad coordinate line: {raw!r}") from e
                continue
        if line.startswith("NODE_COORD_SECTION"):
            in_coords = True
            continue
        if ":" in line:
            key, _, val = line.partition(":")
            header[key.strip().upper()] = val.strip()
    if header.get("TYPE", "TSP").upper() != "TSP":
        raise InstanceFormatError(f"unsupported TYPE {header['TYPE']!r}")
    ewt = header.get("EDGE_WEIGHT_TYPE", "EUC_2D").upper()
    if ewt != "EUC_2D":
        raise InstanceFormatError(f"unsupported EDGE_WEIGHT_TYPE {ewt!r}")
    if "DIMENSION" not in header:
        raise InstanceFormatError("missing DIMENSION")
    n = int(header["DIMENSION"])
    if sorted(coords) != list(range(1, n + 1)):
        raise InstanceFormatError(f"expected node ids 1..{n}, got {len(coords)} coordinates")
    pts = np.array([coords[i] for i in range(1, n + 1)], dtype=float)
    return Instance(pts, header.get("NAME", ""))


def instance_to_dict(inst: Instance) -> dict:
    return {
        "name": inst.name,
        "points": [[float(x), float(y)] for x, y in inst.points],
        "meta": inst.meta,
    }


def instance_from_dict(d: dict) -> Instance:
    try:
        pts = np.asarray(d["points"], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise InstanceFormatError(f"malformed instance object: {e}") from e
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InstanceFormatError("points must be a list of [x, y] pairs")
    return Instance(pts, str(d.get("name", "")), dict(d.get("meta") or {}))


def read_instance(path) -> Instance:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise InstanceFormatError(f"{path}: {e}") from e
    try:
        if path.suffix.lower() == ".json":
            inst = instance_from_dict(json.loads(text))
        else:
            inst = loads_tsplib(text)
    except (InstanceFormatError, json.JSONDecodeError, ValueError) as e:
        raise InstanceFormatError(f"{path}: {e}") from e
    if not inst.name:
        inst = Instance(inst.points, path.stem, inst.meta)
    return inst


def write_instance(inst: Instance, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")
    else:
        path.write_text(dumps_tsplib(inst))


def list_instance_files(directory) -> list[Path]:
    directory = Path(directory)
    files = [p for p in directory.iterdir() if p.suffix.lower() in (".json", ".tsp")]
    # prefer JSON when both forms of an instance exist
    by_stem: dict[str, Path] = {}
    for p in sorted(files):
        if p.stem not in by_stem or p.suffix.lower() == ".json":
            by_stem[p.stem] = p
    return [by_stem[k] for k in sorted(by_stem)]
