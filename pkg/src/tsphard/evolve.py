"""Evolutionary generation of instances that are easy or hard for 2-opt."""
from __future__ import annotations

import logging
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    CapacityError,
    Instance,
    RngLike,
    RngStream,
    as_generator,
    cut_to_boundary,
    distance_matrix,
    normal_mutation,
    random_instance,
    rescale,
    round_to_grid,
    uniform_crossover,
    uniform_mutation,
)
from .solver import EXACT_CAP, FitnessValue, compute_fitness, exact_tour

log = logging.getLogger(__name__)

OBJECTIVES = ("easy", "hard")
SCHEMES = ("rnd", "nrnd")

# stream path tags
_INIT, _FITNESS, _BREED = 0, 1, 2


@dataclass(frozen=True)
class EaConfig:
    pop_size: int = 16
    inst_size: int = 15
    generations: int = 200
    time_limit: float = 900.0  # seconds
    cells: int = 100
    repetitions: int = 50
    objective: str = "hard"
    rounding_scheme: str = "nrnd"
    uniform_mutation_rate: float = 0.001
    normal_mutation_rate: float = 0.01
    normal_mutation_sd: float = 0.025
    seed: int = 0
    exact_cap: int = EXACT_CAP

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.rounding_scheme not in SCHEMES:
            raise ValueError(f"rounding_scheme must be one of {SCHEMES}")
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2 (mating pool of floor(pop_size/2))")
        if self.inst_size < 3:
            raise ValueError("inst_size must be at least 3")
        if self.generations < 0 or self.repetitions < 1 or self.cells < 1:
            raise ValueError("generations >= 0, repetitions >= 1 and cells >= 1 required")
        for rate in (self.uniform_mutation_rate, self.normal_mutation_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("mutation rates must lie in [0, 1]")
        if self.normal_mutation_sd <= 0:
            raise ValueError("normal_mutation_sd must be positive")
        if self.inst_size > self.exact_cap:
            raise CapacityError(
                f"inst_size {self.inst_size} exceeds the exact solver cap N={self.exact_cap}"
            )

    @property
    def pool_size(self) -> int:
        return self.pop_size // 2


@dataclass
class EaRun:
    config: EaConfig
    fitness_trace: list[np.ndarray]
    elite: Instance
    elite_fitness: FitnessValue
    generations_executed: int
    wall_time: float
    final_population: list[Instance] = field(repr=False)
    final_fitness: np.ndarray = field(repr=False)

    def best_so_far(self) -> np.ndarray:
        """Running best per-generation fitness (max for hard, min for easy)."""
        if not self.fitness_trace:
            return np.array([])
        best = np.array([_best(f, self.config.objective) for f in self.fitness_trace])
        acc = np.maximum.accumulate if self.config.objective == "hard" else np.minimum.accumulate
        return acc(best)

    def top(self, k: int) -> list[tuple[Instance, float]]:
        """The ``k`` fittest members of the evaluated final population."""
        order = np.argsort(self.final_fitness, kind="stable")
        if self.config.objective == "hard":
            order = np.argsort(-self.final_fitness, kind="stable")
        return [(self.final_population[i], float(self.final_fitness[i])) for i in order[:k]]

    def trace_rows(self) -> list[tuple[int, float, float, float]]:
        return [(g + 1, float(f.min()), float(f.mean()), float(f.max())) for g, f in enumerate(self.fitness_trace)]

    def to_dict(self) -> dict:
        from .io import instance_to_dict

        return {
            "config": asdict(self.config),
            "generations_executed": self.generations_executed,
            "fitness_trace": [[float(x) for x in f] for f in self.fitness_trace],
            "elite": {"instance": instance_to_dict(self.elite), "fitness": self.elite_fitness.to_dict()},
            "final_fitness": [float(x) for x in self.final_fitness],
        }


def _better(a: float, b: float, objective: str) -> bool:
    return a > b if objective == "hard" else a < b


def _best(f, objective: str) -> float:
    return float(np.max(f) if objective == "hard" else np.min(f))


def elite_of(population: Sequence, fitness, objective: str) -> int:
    """Index of the fittest individual; the lowest index wins ties."""
    if len(population) == 0:
        raise ValueError("empty population")
    f = np.asarray(fitness, dtype=float)
    return int(np.argmax(f) if objective == "hard" else np.argmin(f))


def create_mating_pool(pool_size: int, population: Sequence, fitness, objective: str, rng: RngLike) -> list:
    """Binary tournaments with replacement; the first draw wins ties."""
    if len(population) == 0:
        raise ValueError("empty population")
    if pool_size < 1:
        raise ValueError("pool_size must be positive")
    gen = as_generator(rng)
    f = np.asarray(fitness, dtype=float)
    pool = []
    for _ in range(pool_size):
        i, j = gen.integers(0, len(population), size=2)
        pool.append(population[j] if _better(f[j], f[i], objective) else population[i])
    return pool


class _OptimumCache:
    """Optimal tour lengths keyed by exact coordinates (bounded LRU)."""

    def __init__(self, cap: int, maxsize: int = 4096):
        self.cap = cap
        self.maxsize = maxsize
        self._d: OrderedDict[bytes, float] = OrderedDict()
        self.hits = 0

    def __call__(self, inst: Instance) -> float:
        k = inst.key()
        if k in self._d:
            self._d.move_to_end(k)
            self.hits += 1
            return self._d[k]
        v = exact_tour(distance_matrix(inst), self.cap).length
        self._d[k] = v
        if len(self._d) > self.maxsize:
            self._d.popitem(last=False)
        return v


def _initial(cfg: EaConfig, stream: RngStream) -> Instance:
    gen = stream.generator()
    inst = round_to_grid(rescale(random_instance(cfg.inst_size, gen)), cfg.cells)
    if cfg.rounding_scheme == "rnd":
        inst = cut_to_boundary(normal_mutation(inst, cfg.normal_mutation_rate, cfg.normal_mutation_sd, gen))
    return inst


def make_offspring(cfg: EaConfig, p1: Instance, p2: Instance, gen: np.random.Generator) -> Instance:
    """Crossover and mutation followed by the scheme-ordered rescale/round steps."""
    child = uniform_mutation(uniform_crossover(p1, p2, gen), cfg.uniform_mutation_rate, gen)
    if cfg.rounding_scheme == "nrnd":
        child = normal_mutation(child, cfg.normal_mutation_rate, cfg.normal_mutation_sd, gen)
    child = round_to_grid(rescale(child), cfg.cells)
    if cfg.rounding_scheme == "rnd":
        child = normal_mutation(child, cfg.normal_mutation_rate, cfg.normal_mutation_sd, gen)
        child = cut_to_boundary(child)
    return child


def evolve(
    cfg: EaConfig,
    *,
    threads: int = 1,
    progress: Callable[[int, np.ndarray], None] | None = None,
) -> EaRun:
    """Run the EA. Results depend only on ``cfg`` (unless the time limit hits)."""
    t0 = time.monotonic()
    root = RngStream(cfg.seed)
    optimum = _OptimumCache(cfg.exact_cap)
    pool_exec = ThreadPoolExecutor(threads) if threads > 1 else None

    def evaluate(pop: list[Instance], g: int, carried: FitnessValue | None) -> list[FitnessValue]:
        # slot 0 holds the elite, which keeps its fitness (1-elitism carries it unchanged)
        todo = list(range(1 if carried is not None else 0, len(pop)))
        # optima first (shared cache, sequential), then the 2-opt runs
        opts = {k: optimum(pop[k]) for k in todo}

        def one(k):
            return compute_fitness(
                pop[k], cfg.repetitions, root.child(_FITNESS, g, k), optimal_length=opts[k]
            )

        if pool_exec is None:
            fresh = [one(k) for k in todo]
        else:
            fresh = list(pool_exec.map(one, todo))
        return ([carried] if carried is not None else []) + fresh

    population = [_initial(cfg, root.child(_INIT, i)) for i in range(cfg.pop_size)]
    trace: list[np.ndarray] = []
    elite: tuple[Instance, FitnessValue] | None = None

    def consider(pop, fits):
        nonlocal elite
        ratios = np.array([f.ratio for f in fits])
        b = elite_of(pop, ratios, cfg.objective)
        if elite is None or _better(ratios[b], elite[1].ratio, cfg.objective):
            elite = (pop[b], fits[b])
        return ratios, b

    g = 0
    carried = None
    try:
        while g < cfg.generations:
            fits = evaluate(population, g, carried)
            ratios, b = consider(population, fits)
            trace.append(ratios)
            if progress is not None:
                progress(g + 1, ratios)
            gen = root.child(_BREED, g).generator()
            pool = create_mating_pool(cfg.pool_size, population, ratios, cfg.objective, gen)
            nxt = [population[b]]
            carried = fits[b]
            for _ in range(1, cfg.pop_size):
                p1 = pool[gen.integers(len(pool))]
                p2 = pool[gen.integers(len(pool))]
                nxt.append(make_offspring(cfg, p1, p2, gen))
            population = nxt
            g += 1
            if time.monotonic() - t0 > cfg.time_limit:
                log.info("time limit reached after %d generations", g)
                break
        final = evaluate(population, g, carried)
        final_ratios, _ = consider(population, final)
    finally:
        if pool_exec is not None:
            pool_exec.shutdown()
    log.debug("optimum cache hits: %d", optimum.hits)
    return EaRun(
        config=cfg,
        fitness_trace=trace,
        elite=elite[0],
        elite_fitness=elite[1],
        generations_executed=g,
        wall_time=time.monotonic() - t0,
        final_population=population,
        final_fitness=final_ratios,
    )
