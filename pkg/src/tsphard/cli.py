"""Command-line driver: evolve, features, morph, solve, train, predict.

Exit codes: 0 success, 1 usage error, 2 runtime or data error. Data goes to
files under ``--out`` (``solve`` prints JSON to stdout); progress goes to
stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .core import CapacityError, Instance, RngStream, derive_seed, distance_matrix
from .evolve import OBJECTIVES, EaConfig, evolve
from .features import FEATURE_NAMES, extract_features
from .io import InstanceFormatError, list_instance_files, read_instance, write_instance
from .model import (
    SELECTION_THRESHOLD,
    Dataset,
    DecisionTree,
    MarsModel,
    cross_validate,
    fit_mars,
    fit_tree,
    forward_feature_selection,
    model_from_dict,
    weighted_partial_dependence,
)
from .model.resampling import mean_learner
from .morph import DEFAULT_ALPHAS, morph_sequence
from .solver import compute_fitness, exact_tour, random_tour, two_opt

log = logging.getLogger("tsphard")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- defaults (flags > config file > these) ---------------------------------

COMMON = {"seed": 0, "out": "out", "threads": 1, "scheme": "nrnd", "cells": 100}
DEFAULTS = {
    "evolve": {
        "cls": "both",
        "size": 15,
        "count": 1,
        "pop_size": 16,
        "generations": 200,
        "repetitions": 50,
        "time_limit": 900.0,
        "uniform_rate": 0.001,
        "normal_rate": 0.01,
        "normal_sd": 0.025,
        "exact_cap": 20,
    },
    "features": {},
    "morph": {"alphas": ",".join(str(a) for a in DEFAULT_ALPHAS), "repetitions": 50, "normal_rate": 0.01, "normal_sd": 0.025, "exact_cap": 20},
    "solve": {"method": "two-opt", "exact_cap": 20},
    "train": {"target": None, "features": None, "max_depth": 2, "min_leaf": 1, "folds": 10, "max_terms": 45, "threshold": SELECTION_THRESHOLD},
    "predict": {"pdp": None, "grid_points": 50},
}


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".9g")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "" if x is None else str(x)


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n")


def read_csv(path) -> tuple[list[str], list[dict[str, str]]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
            return list(reader.fieldnames or []), rows
    except OSError as e:
        raise DataError(f"{path}: {e}") from e


def load_dataset(path, target: str, features=None, numeric_target=True) -> tuple[Dataset, list[str]]:
    header, rows = read_csv(path)
    if not rows:
        raise DataError(f"{path}: no data rows")
    if target not in header:
        raise DataError(f"{path}: target column {target!r} not found")
    names = list(features) if features else [n for n in FEATURE_NAMES if n in header]
    missing = [n for n in names if n not in header]
    if missing or not names:
        raise DataError(f"{path}: missing feature columns {missing or 'all'}")
    try:
        X = np.array([[float(r[n]) for n in names] for r in rows])
        y = np.array([float(r[target]) for r in rows]) if numeric_target else np.array([r[target] for r in rows])
        data = Dataset(X, y, names)
    except (ValueError, TypeError) as e:
        raise DataError(f"{path}: malformed value ({e})") from e
    ids = [r.get("instance_id", str(i)) for i, r in enumerate(rows)]
    return data, ids


def feature_row(inst_id, inst, cls="", alpha=None) -> list:
    fv = extract_features(inst)
    return [inst_id, inst.n, cls, alpha] + [fv[n] for n in FEATURE_NAMES]


FEATURE_HEADER = ["instance_id", "size", "class", "alpha"] + FEATURE_NAMES


def _manifest(out: Path, command: str, cfg: dict, inputs, t0: float) -> None:
    write_json(
        out / "manifest.json",
        {
            "command": command,
            "config": cfg,
            "seed": cfg.get("seed"),
            "inputs": [str(p) for p in inputs],
            "out": str(out),
            "version": __version__,
            "wall_time": round(time.monotonic() - t0, 3),
        },
    )


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# -- commands ---------------------------------------------------------------


def cmd_evolve(cfg: dict) -> int:
    t0 = time.monotonic()
    out = Path(cfg["out"])
    classes = list(OBJECTIVES) if cfg["cls"] == "both" else [cfg["cls"]]
    if cfg["count"] < 1:
        raise UsageError("--count must be positive")
    if cfg["size"] > cfg["exact_cap"]:
        raise CapacityError(f"--size {cfg['size']} exceeds the exact solver cap N={cfg['exact_cap']}")
    jobs = []
    for ci, cls in enumerate(classes):
        for i in range(cfg["count"]):
            try:
                ea = EaConfig(
                    pop_size=cfg["pop_size"],
                    inst_size=cfg["size"],
                    generations=cfg["generations"],
                    time_limit=cfg["time_limit"],
                    cells=cfg["cells"],
                    repetitions=cfg["repetitions"],
                    objective=cls,
                    rounding_scheme=cfg["scheme"],
                    uniform_mutation_rate=cfg["uniform_rate"],
                    normal_mutation_rate=cfg["normal_rate"],
                    normal_mutation_sd=cfg["normal_sd"],
                    seed=derive_seed(cfg["seed"], OBJECTIVES.index(cls), i),
                    exact_cap=cfg["exact_cap"],
                )
            except CapacityError:
                raise
            except ValueError as e:  # bad flag values
                raise UsageError(str(e)) from e
            jobs.append((f"{cls}_{cfg['scheme']}_{cfg['size']}_{i:03d}", ea))

    def run(job):
        name, ea = job
        r = evolve(ea)
        log.info("%s: elite ratio %.4f after %d generations", name, r.elite_fitness.ratio, r.generations_executed)
        return name, r

    results = _map(run, jobs, cfg["threads"])
    summary: dict[str, list] = {}
    for name, r in results:
        c = r.config
        elite = Instance(r.elite.points, name, {"class": c.objective, "scheme": c.rounding_scheme, "ratio": r.elite_fitness.ratio})
        write_instance(elite, out / "instances" / f"{name}.json")
        write_instance(elite, out / "instances" / f"{name}.tsp")
        write_json(out / "runs" / f"{name}.json", r.to_dict())
        write_csv(out / "traces" / f"{name}.csv", ["generation", "min", "mean", "max"], r.trace_rows())
        summary.setdefault(c.objective, []).append(r)
    rows = []
    for cls in classes:
        runs = summary[cls]
        rows.append(
            [
                cfg["size"],
                cls,
                cfg["scheme"],
                float(np.mean([r.elite_fitness.ratio for r in runs])),
                float(np.mean([r.generations_executed for r in runs])),
                len(runs),
            ]
        )
    write_csv(out / "summary.csv", ["size", "class", "type", "mean_approximation_quality", "mean_generations", "runs"], rows)
    _manifest(out, "evolve", cfg, [], t0)
    return 0


def _collect_instances(paths) -> list[Path]:
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            files += list_instance_files(p)
        elif p.exists():
            files.append(p)
        else:
            raise UsageError(f"no such file or directory: {p}")
    if not files:
        raise UsageError("no instance files found in the given inputs")
    return files


def cmd_features(cfg: dict) -> int:
    t0 = time.monotonic()
    files = _collect_instances(cfg["inputs"])
    out = Path(cfg["out"])

    def one(path):
        inst = read_instance(path)
        if inst.n < 4:
            raise DataError(f"{path}: feature extraction needs at least 4 cities")
        return feature_row(inst.name or path.stem, inst, inst.meta.get("class", ""), inst.meta.get("alpha"))

    rows = _map(one, files, cfg["threads"])
    write_csv(out / "features.csv", FEATURE_HEADER, rows)
    _manifest(out, "features", cfg, files, t0)
    return 0


def _parse_alphas(text: str) -> list[float]:
    try:
        alphas = [float(a) for a in str(text).split(",") if a.strip()]
    except ValueError as e:
        raise UsageError(f"bad --alphas: {text!r}") from e
    if not alphas or any(not 0.0 <= a <= 1.0 for a in alphas):
        raise UsageError("--alphas must be a non-empty comma list of values in [0, 1]")
    return alphas


def cmd_morph(cfg: dict) -> int:
    t0 = time.monotonic()
    alphas = _parse_alphas(cfg["alphas"])
    if not cfg.get("hard") or not cfg.get("easy"):
        raise UsageError("--hard and --easy directories are required")
    hard_files = _collect_instances([cfg["hard"]])
    easy_files = _collect_instances([cfg["easy"]])
    hard = [read_instance(p) for p in hard_files]
    easy = [read_instance(p) for p in easy_files]
    sizes = {i.n for i in hard + easy}
    if len(sizes) != 1:
        raise DataError(f"instance sizes differ across the hard/easy sets: {sorted(sizes)}")
    out = Path(cfg["out"])
    root = RngStream(cfg["seed"])
    pairs = [(hi, ei) for hi in range(len(hard)) for ei in range(len(easy))]

    def one(pair):
        hi, ei = pair
        h, e = hard[hi], easy[ei]
        seq = morph_sequence(
            h, e, alphas, cfg["cells"], cfg["scheme"], root.child(0, hi, ei),
            normal_mutation_rate=cfg["normal_rate"], normal_mutation_sd=cfg["normal_sd"],
        )
        rows = []
        for ai, (alpha, inst) in enumerate(seq):
            pair_id = f"{h.name}__{e.name}"
            iid = f"{pair_id}__a{alpha:.3f}"
            fit = compute_fitness(inst, cfg["repetitions"], root.child(1, hi, ei, ai), cap=cfg["exact_cap"])
            inst = Instance(inst.points, iid, {"alpha": alpha, "hard": h.name, "easy": e.name, "ratio": fit.ratio})
            write_instance(inst, out / "instances" / f"{iid}.json")
            fv = extract_features(inst)
            rows.append([iid, pair_id, h.name, e.name, inst.n, alpha, fit.ratio] + [fv[n] for n in FEATURE_NAMES])
        return rows

    rows = [r for chunk in _map(one, pairs, cfg["threads"]) for r in chunk]
    header = ["instance_id", "pair_id", "hard_id", "easy_id", "size", "alpha", "fitness"] + FEATURE_NAMES
    write_csv(out / "morph.csv", header, rows)
    _manifest(out, "morph", cfg, hard_files + easy_files, t0)
    return 0


def cmd_solve(cfg: dict) -> int:
    inst = read_instance(cfg["instance"])
    dm = distance_matrix(inst)
    if cfg["method"] == "exact":
        res = exact_tour(dm, cfg["exact_cap"])
        out = {"method": "exact", "length": res.length, "tour": res.tour.tolist()}
    else:
        res = two_opt(dm, random_tour(inst.n, RngStream(cfg["seed"])))
        out = {"method": "two-opt", "length": res.length, "swaps": res.iterations, "tour": res.tour.tolist()}
        if inst.n <= cfg["exact_cap"]:
            out["ratio"] = res.length / exact_tour(dm, cfg["exact_cap"]).length
    print(json.dumps(out))
    return 0


def cmd_train(cfg: dict) -> int:
    t0 = time.monotonic()
    kind = cfg["kind"]
    out = Path(cfg["out"])
    target = cfg["target"] or ("class" if kind == "tree" else "fitness")
    features = [f for f in cfg["features"].split(",") if f] if cfg["features"] else None
    data, _ = load_dataset(cfg["csv"], target, features, numeric_target=(kind != "tree"))
    k = cfg["folds"]
    if k < 2 or k > len(data):
        raise UsageError(f"--folds must lie in [2, {len(data)}]")
    rng = RngStream(cfg["seed"])
    if kind == "tree":
        if len(set(data.y.tolist())) < 2:
            log.warning("single class in training data; the tree is a constant")
        learner = lambda tr: fit_tree(tr, cfg["max_depth"], cfg["min_leaf"]).predict  # noqa: E731
        acc, folds = cross_validate(data, learner, k, rng)
        model = fit_tree(data, cfg["max_depth"], cfg["min_leaf"])
        write_json(out / "model.json", model.to_dict())
        write_json(out / "report.json", {"model": "tree", "target": target, "features": list(data.names), "cv_accuracy": acc, "fold_accuracy": folds})
        log.info("tree: %d-fold CV accuracy %.4f", k, acc)
    elif kind == "mars":
        learner = lambda tr: fit_mars(tr, cfg["max_terms"]).predict  # noqa: E731
        cv_rmse, folds = cross_validate(data, learner, k, rng)
        base, _ = cross_validate(data, mean_learner, k, rng)
        model = fit_mars(data, cfg["max_terms"])
        write_json(out / "model.json", model.to_dict())
        write_csv(out / "mars_terms.csv", ["spline", "coefficient"], model.table())
        write_json(out / "report.json", {"model": "mars", "target": target, "cv_rmse": cv_rmse, "fold_rmse": folds, "mean_predictor_rmse": base, "n_terms": len(model.terms)})
        log.info("mars: CV RMSE %.6f vs mean predictor %.6f", cv_rmse, base)
    else:
        trace = forward_feature_selection(data, cfg["threshold"], k, rng, max_terms=cfg["max_terms"])
        rows = [(i, f or "(empty model)", r) for i, (f, r) in enumerate(trace.steps)]
        write_csv(out / "selection.csv", ["step", "feature", "rmse"], rows)
        write_json(out / "report.json", {"model": "select", "target": target, "selected": trace.selected, "outer_rmse": trace.outer_rmse, "fold_sets": trace.fold_sets, "threshold": trace.threshold})
        if trace.selected:
            write_json(out / "model.json", fit_mars(data.select(trace.selected), cfg["max_terms"]).to_dict())
        log.info("select: %s (outer RMSE %.6f)", trace.selected, trace.outer_rmse)
    _manifest(out, f"train {kind}", cfg, [cfg["csv"]], t0)
    return 0


def cmd_predict(cfg: dict) -> int:
    t0 = time.monotonic()
    out = Path(cfg["out"])
    try:
        model = model_from_dict(json.loads(Path(cfg["model"]).read_text()))
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise DataError(f"{cfg['model']}: cannot load model ({e})") from e
    header, rows = read_csv(cfg["csv"])
    if isinstance(model, MarsModel):
        needed = sorted(model.features)
    else:
        needed = sorted(model.features_used())
    missing = [n for n in needed if n not in header]
    if missing:
        raise DataError(f"feature CSV lacks model features {missing}")
    try:
        X = np.array([[float(r[n]) for n in needed] for r in rows]).reshape(len(rows), len(needed))
    except ValueError as e:
        raise DataError(f"{cfg['csv']}: malformed value ({e})") from e
    data = Dataset(X, np.zeros(len(rows)), needed)
    pred = model.predict(data)
    ids = [r.get("instance_id", str(i)) for i, r in enumerate(rows)]
    write_csv(out / "predictions.csv", ["instance_id", "prediction"], zip(ids, pred))
    if cfg["pdp"]:
        if not isinstance(model, MarsModel):
            raise UsageError("--pdp needs a regression (mars) model")
        feat = cfg["pdp"]
        if feat not in header:
            raise DataError(f"feature {feat!r} not in {cfg['csv']}")
        cols = list(dict.fromkeys(needed + [feat]))
        Xp = np.array([[float(r[n]) for n in cols] for r in rows])
        dp = Dataset(Xp, np.zeros(len(rows)), cols)
        x = dp.column(feat)
        grid = np.linspace(x.min(), x.max(), max(cfg["grid_points"], 1))
        curve = weighted_partial_dependence(model, dp, feat, grid)
        write_csv(out / f"pdp_{feat}.csv", ["x", "f"], curve)
    _manifest(out, "predict", cfg, [cfg["model"], cfg["csv"]], t0)
    return 0


COMMANDS = {
    "evolve": cmd_evolve,
    "features": cmd_features,
    "morph": cmd_morph,
    "solve": cmd_solve,
    "train": cmd_train,
    "predict": cmd_predict,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tsphard", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--scheme", choices=["rnd", "nrnd"])
        sp.add_argument("--cells", type=int)
        sp.add_argument("--config", help="JSON file of option overrides (flags win)")

    sp = sub.add_parser("evolve", help="evolve easy/hard instances")
    common(sp)
    sp.add_argument("--class", dest="cls", choices=["easy", "hard", "both"])
    sp.add_argument("--size", type=int)
    sp.add_argument("--count", type=int)
    sp.add_argument("--pop-size", type=int)
    sp.add_argument("--generations", type=int)
    sp.add_argument("--repetitions", type=int)
    sp.add_argument("--time-limit", type=float, help="seconds per run")
    sp.add_argument("--uniform-rate", type=float)
    sp.add_argument("--normal-rate", type=float)
    sp.add_argument("--normal-sd", type=float)
    sp.add_argument("--exact-cap", type=int)

    sp = sub.add_parser("features", help="feature CSV for instance files/directories")
    common(sp)
    sp.add_argument("inputs", nargs="+")

    sp = sub.add_parser("morph", help="morph every hard instance into every easy one")
    common(sp)
    sp.add_argument("--hard")
    sp.add_argument("--easy")
    sp.add_argument("--alphas")
    sp.add_argument("--repetitions", type=int)
    sp.add_argument("--normal-rate", type=float)
    sp.add_argument("--normal-sd", type=float)
    sp.add_argument("--exact-cap", type=int)

    sp = sub.add_parser("solve", help="solve one instance, print JSON")
    common(sp)
    sp.add_argument("instance")
    sp.add_argument("--method", choices=["two-opt", "exact"])
    sp.add_argument("--exact-cap", type=int)

    sp = sub.add_parser("train", help="fit tree / mars / forward selection on a feature CSV")
    common(sp)
    sp.add_argument("kind", choices=["tree", "mars", "select"])
    sp.add_argument("csv")
    sp.add_argument("--target")
    sp.add_argument("--features", help="comma-separated feature columns (default: all 47 present)")
    sp.add_argument("--max-depth", type=int)
    sp.add_argument("--min-leaf", type=int)
    sp.add_argument("--folds", type=int)
    sp.add_argument("--max-terms", type=int)
    sp.add_argument("--threshold", type=float)

    sp = sub.add_parser("predict", help="apply a model JSON to a feature CSV")
    common(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("csv")
    sp.add_argument("--pdp", metavar="FEATURE")
    sp.add_argument("--grid-points", type=int)
    return p


def resolve(args: argparse.Namespace) -> dict:
    cfg = {**COMMON, **DEFAULTS[args.command]}
    if args.config:
        try:
            overrides = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as e:
            raise UsageError(f"cannot read config {args.config}: {e}") from e
        unknown = set(overrides) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(overrides)
    for k, v in vars(args).items():
        if k in ("config", "verbose", "command") or v is None:
            continue
        cfg[k] = v
    if cfg["threads"] < 1:
        raise UsageError("--threads must be positive")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except UsageError as e:
        print(f"tsphard {args.command}: error: {e}", file=sys.stderr)
        return 1
    except (CapacityError, DataError, InstanceFormatError) as e:
        print(f"tsphard {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as e:
        print(f"tsphard {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
