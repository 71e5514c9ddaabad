"""Differential-evolution search over base matrices.

Candidates must have every column sum at least 2, a cycle-free degree-2
subgraph and (unless ``paper_strict``) every degree-2 bit sharing a check
with a bit of degree at least 3.  Fitness is the BEC erasure threshold, or
minus the BIAWGN Eb/N0 threshold in dB.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .de_bec import bec_threshold
from .de_bms import awgn_threshold
from .proto_core import BaseMatrix, Theorem1Report, check_theorem1

MAX_REPAIR_ROUNDS = 100
MAX_INIT_DRAWS = 1000


@dataclass(frozen=True)
class DeOptConfig:
    rows: int
    cols: int
    pop_size: int | None = None
    p_c: float = 0.88
    scale: float = 0.5
    generations: int = 100
    cap: int = 9
    objective: str = "bec"
    seed: int = 0
    paper_strict: bool = False
    bec_resolution: float = 1e-4
    bec_t_max: int = 5000
    awgn_resolution_db: float = 0.01

    def __post_init__(self):
        if self.rows < 1 or self.cols < 2 or self.rows >= self.cols:
            raise ValueError("need 1 <= rows < cols")
        if self.population < 4:
            raise ValueError("population must be at least 4")
        if not 0.0 <= self.p_c <= 1.0:
            raise ValueError("p_c must lie in [0, 1]")
        if self.cap < 2:
            raise ValueError("entry cap must be at least 2")
        if self.objective not in ("bec", "awgn"):
            raise ValueError(f"unknown objective {self.objective!r}")

    @property
    def population(self) -> int:
        return self.pop_size if self.pop_size is not None else 10 * self.rows * self.cols


@dataclass(frozen=True)
class Candidate:
    matrix: BaseMatrix
    fitness: float
    report: Theorem1Report


def is_valid(a: np.ndarray, paper_strict: bool = False) -> bool:
    a = np.asarray(a)
    if (a.sum(axis=1) == 0).any() or (a.sum(axis=0) < 2).any():
        return False
    rep = check_theorem1(BaseMatrix(a))
    return rep.deg2_cycle_free and (paper_strict or rep.every_deg2_touches_deg3plus)


def mutate(r1, r2, r3, cap: int = 9, scale: float = 0.5) -> np.ndarray:
    """``|r1 + scale (r2 - r3)|`` rounded half away from zero, clamped to ``cap``."""
    a, b, c = (np.asarray(x, dtype=np.int64) for x in (r1, r2, r3))
    if not a.shape == b.shape == c.shape:
        raise ValueError("shape mismatch")
    v = np.abs(a + scale * (b - c))
    return np.minimum(np.floor(v + 0.5).astype(np.int64), cap)


def repair(a: np.ndarray, rng: np.random.Generator, cap: int = 9, paper_strict: bool = False) -> np.ndarray | None:
    """Make ``a`` satisfy the candidate constraints with one random fix per
    round; ``None`` after :data:`MAX_REPAIR_ROUNDS` rounds."""
    a = np.minimum(np.asarray(a, dtype=np.int64), cap).copy()
    rows, cols = a.shape
    for rnd in range(MAX_REPAIR_ROUNDS):
        empty = np.flatnonzero(a.sum(axis=1) == 0)
        if empty.size:
            a[empty[0], rng.integers(cols)] += 1
            continue
        light = np.flatnonzero(a.sum(axis=0) < 2)
        if light.size:
            v = light[0]
            room = np.flatnonzero(a[:, v] < cap)
            a[rng.choice(room), v] += 1
            continue
        rep = check_theorem1(BaseMatrix(a))
        if not rep.deg2_cycle_free:
            v = next(i for kind, i in rep.cycle_witness if kind == "v")
            if rows <= 2 or rnd >= MAX_REPAIR_ROUNDS // 2:
                # moving cannot help (or has not helped): raise the bit to degree 3
                a[rng.choice(np.flatnonzero(a[:, v] < cap)), v] += 1
                continue
            # move one edge of a degree-2 bit on the cycle to another row
            rows_v = np.repeat(np.arange(rows), a[:, v])
            src = rng.choice(rows_v)
            others = [r for r in range(rows) if r != src and a[r, v] < cap]
            if not others:
                return None
            dst = rng.choice(others)
            a[src, v] -= 1
            a[dst, v] += 1
            continue
        if not paper_strict and rep.isolated_deg2:
            v = rep.isolated_deg2[0]
            c = rng.choice(np.flatnonzero(a[:, v]))
            deg = a.sum(axis=0)
            heavy = [u for u in range(cols) if u != v and deg[u] >= 3 and a[c, u] < cap]
            pool = heavy or [u for u in range(cols) if u != v and a[c, u] < cap]
            if not pool:
                return None
            a[c, rng.choice(pool)] += 1
            continue
        return a
    return None


def crossover_and_repair(
    target: np.ndarray,
    mutant: np.ndarray,
    p_c: float,
    rng: np.random.Generator,
    cap: int = 9,
    paper_strict: bool = False,
) -> np.ndarray | None:
    """Binomial crossover then repair.  ``None`` means the offspring could
    not be repaired and the target should be kept."""
    target = np.asarray(target, dtype=np.int64)
    mutant = np.asarray(mutant, dtype=np.int64)
    if target.shape != mutant.shape:
        raise ValueError("shape mismatch")
    take = rng.random(target.shape) < p_c
    child = np.where(take, mutant, target)
    if not take.any():
        return child
    return repair(child, rng, cap, paper_strict)


def select(old: Candidate, new: Candidate) -> Candidate:
    """Strictly better fitness wins; ties keep the incumbent."""
    return new if new.fitness > old.fitness else old


def fitness(a: BaseMatrix, cfg: DeOptConfig) -> float:
    if cfg.objective == "bec":
        return bec_threshold(a, resolution=cfg.bec_resolution, t_max=cfg.bec_t_max)
    try:
        return -awgn_threshold(a, resolution_db=cfg.awgn_resolution_db)
    except ValueError:
        return -np.inf


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float


@dataclass
class OptResult:
    best: Candidate
    trace: list[GenerationStats]
    population: list[Candidate] = field(repr=False)

    def write_trace(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("generation,best_fitness,mean_fitness\n")
            for g in self.trace:
                fh.write(f"{g.generation},{g.best_fitness:.8f},{g.mean_fitness:.8f}\n")


class _Evaluator:
    """Fitness cache keyed by matrix content; misses are evaluated in
    parallel.  Fitness is pure, so the thread count cannot change results."""

    def __init__(self, cfg: DeOptConfig, threads: int):
        self.cfg = cfg
        self.cache: dict[bytes, float] = {}
        self.pool = ThreadPoolExecutor(threads) if threads > 1 else None

    def __call__(self, mats: list[BaseMatrix]) -> list[float]:
        todo = {}
        for m in mats:
            if m.key() not in self.cache:
                todo.setdefault(m.key(), m)
        if todo:
            keys = list(todo)
            job = lambda k: fitness(todo[k], self.cfg)  # noqa: E731
            vals = list(self.pool.map(job, keys)) if self.pool else [job(k) for k in keys]
            self.cache.update(zip(keys, vals))
        return [self.cache[m.key()] for m in mats]

    def close(self):
        if self.pool:
            self.pool.shutdown()


def init_population(cfg: DeOptConfig) -> list[np.ndarray]:
    """Uniform binary matrices, each repaired; unrepairable draws are redrawn."""
    pop = []
    for k in range(cfg.population):
        rng = np.random.default_rng([cfg.seed, 0, k])
        for _ in range(MAX_INIT_DRAWS):
            a = repair(rng.integers(0, 2, size=(cfg.rows, cfg.cols)), rng, cfg.cap, cfg.paper_strict)
            if a is not None:
                break
        else:
            raise RuntimeError(f"could not draw a valid {cfg.rows}x{cfg.cols} candidate")
        pop.append(a)
    return pop


def _candidates(mats: list[np.ndarray], evaluate: _Evaluator) -> list[Candidate]:
    bms = [BaseMatrix(m) for m in mats]
    return [Candidate(b, f, check_theorem1(b)) for b, f in zip(bms, evaluate(bms))]


def _stats(gen: int, pop: list[Candidate]) -> GenerationStats:
    f = np.array([c.fitness for c in pop])
    return GenerationStats(gen, float(f.max()), float(f.mean()))


def optimize(
    cfg: DeOptConfig,
    generations: int | None = None,
    wall_clock: float | None = None,
    threads: int = 1,
    on_generation: Callable[[int, list[Candidate]], None] | None = None,
) -> OptResult:
    """Run differential evolution for ``generations`` (default
    ``cfg.generations``) or until ``wall_clock`` seconds have passed.

    Candidate ``k`` in generation ``g`` draws from ``default_rng([seed, g, k])``.
    """
    gens = cfg.generations if generations is None else generations
    start = time.monotonic()
    evaluate = _Evaluator(cfg, threads)
    try:
        pop = _candidates(init_population(cfg), evaluate)
        trace = [_stats(0, pop)]
        if on_generation:
            on_generation(0, pop)
        n = cfg.population
        for g in range(1, gens + 1):
            if wall_clock is not None and time.monotonic() - start > wall_clock:
                break
            children: list[np.ndarray | None] = []
            for k in range(n):
                rng = np.random.default_rng([cfg.seed, g, k])
                r1, r2, r3 = rng.choice(np.delete(np.arange(n), k), size=3, replace=False)
                m = mutate(pop[r1].matrix.entries, pop[r2].matrix.entries, pop[r3].matrix.entries, cfg.cap, cfg.scale)
                children.append(crossover_and_repair(pop[k].matrix.entries, m, cfg.p_c, rng, cfg.cap, cfg.paper_strict))
            idx = [k for k, c in enumerate(children) if c is not None]
            offspring = _candidates([children[k] for k in idx], evaluate)
            for k, child in zip(idx, offspring):
                pop[k] = select(pop[k], child)
            trace.append(_stats(g, pop))
            if on_generation:
                on_generation(g, pop)
        best = max(pop, key=lambda c: c.fitness)
    finally:
        evaluate.close()
    return OptResult(best, trace, pop)
