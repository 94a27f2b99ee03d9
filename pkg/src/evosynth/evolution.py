"""Generational evolutionary search over typed program trees.

One generation is: score whatever lacks a cached score, drop individuals
that outgrew the current best by more than the length slack, resample the
population by stochastic universal sampling over exponentially scaled
fitness, then mutate and cross over in place. The best individual seen so
far re-enters the pool every generation, and an optional language-model
hook may append extra mutants of it (never replacing anyone).
"""
from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import guidance as _guidance
from .machine import InstancePack, RunBudget, accuracy_matrix, pack_instances
from .programs import (FlatProgram, Node, PrimitiveSet, default_primitive_set,
                       flatten, height, length, mutate_subtree, crossover_subtrees,
                       random_program, serialize_program)
from .tasks import Corpus

ORIGINS = ("random", "llm_seed", "llm_mutation", "mutation", "crossover", "elite")

# cached program scores; cleared wholesale when it grows past this
_MEMO_CAP = 500_000


@dataclass(eq=False)
class Individual:
    tree: Node
    flat: FlatProgram
    text: str
    length: int
    height: int
    origin: str
    fitness: float | None = None


def make_individual(tree: Node, pset: PrimitiveSet, origin: str) -> Individual:
    if origin not in ORIGINS:
        raise ValueError(f"unknown origin {origin!r}")
    return Individual(tree=tree, flat=flatten(tree, pset),
                      text=serialize_program(tree),
                      length=length(tree), height=height(tree), origin=origin)


@dataclass
class EvolutionConfig:
    population_size: int
    n_generations: int = 1500
    mut_prob: float = 0.5
    xover_prob: float = 0.5
    length_slack: int = 25
    fitness_scale: float = 50.0
    budget: RunBudget = field(default_factory=RunBudget)
    seed: int = 0
    workers: int = 1
    llm_settings: "_guidance.GuidanceSettings | None" = None
    early_stop_at: float | None = None
    early_stop_settle: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        for p in (self.mut_prob, self.xover_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.early_stop_at is not None and not 0.0 < self.early_stop_at <= 1.0:
            raise ValueError("early_stop_at must lie in (0, 1]")
        if self.early_stop_settle < 0:
            raise ValueError("early_stop_settle must be >= 0")


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    best_length: int
    best_height: int
    mean_fitness: float
    population_size: int  # survivors of the length filter


@dataclass
class RunReport:
    stats: list[GenerationStats]
    elite: Individual
    train_accuracy: float
    test_accuracy: float
    wall_time_s: float
    seed: int


def transform_fitness(f: float, scale: float = 50.0) -> float:
    """Exponential selection pressure: e**(f * scale) - 1."""
    return math.expm1(f * scale)


def sus_positions(weights: Sequence[float], n: int, rng: random.Random) -> list[int]:
    """Stochastic universal sampling: n index draws with one random offset.

    Expected count of index i is n * w_i / sum(w); the realized count is
    always its floor or ceiling. All-zero weights fall back to uniform.
    """
    if not weights or n < 0:
        raise ValueError("need weights and n >= 0")
    total = float(sum(weights))
    if total <= 0.0:
        weights = [1.0] * len(weights)
        total = float(len(weights))
    step = total / n if n else 0.0
    start = rng.random() * step if n else 0.0
    picks: list[int] = []
    i = 0
    cum = float(weights[0])
    for k in range(n):
        pointer = start + k * step
        while cum <= pointer and i < len(weights) - 1:
            i += 1
            cum += float(weights[i])
        picks.append(i)
    return picks


def sus_select(individuals: Sequence[Individual], n: int, rng: random.Random,
               scale: float = 50.0) -> list[Individual]:
    weights = [transform_fitness(ind.fitness, scale) for ind in individuals]
    return [individuals[i] for i in sus_positions(weights, n, rng)]


def length_bound_filter(individuals: Sequence[Individual],
                        slack: int = 25) -> list[Individual]:
    """Drop everything longer than the best-and-shortest individual + slack."""
    ref = min(individuals, key=lambda ind: (-ind.fitness, ind.length))
    cutoff = ref.length + slack
    return [ind for ind in individuals if ind.length <= cutoff]


def elite(individuals: Sequence[Individual]) -> Individual:
    """Highest fitness; ties go to the shorter program, then the earlier one."""
    best = individuals[0]
    for ind in individuals[1:]:
        if ind.fitness > best.fitness or \
                (ind.fitness == best.fitness and ind.length < best.length):
            best = ind
    return best


class _FitnessCache:
    """Program-text keyed scores shared across generations of one run."""

    def __init__(self, pack: InstancePack, budget: RunBudget, workers: int):
        self.pack = pack
        self.budget = budget
        self.workers = workers
        self.scores: dict[str, float] = {}

    def evaluate(self, individuals: Sequence[Individual]) -> None:
        todo: dict[str, Individual] = {}
        for ind in individuals:
            if ind.fitness is None:
                cached = self.scores.get(ind.text)
                if cached is None:
                    todo.setdefault(ind.text, ind)
                else:
                    ind.fitness = cached
        if todo:
            fresh = list(todo.values())
            acc = accuracy_matrix([ind.flat for ind in fresh], self.pack,
                                  self.budget, self.workers)
            fits = acc.mean(axis=1)
            if len(self.scores) > _MEMO_CAP:
                self.scores.clear()
            for ind, fit in zip(fresh, fits):
                ind.fitness = float(fit)
                self.scores[ind.text] = ind.fitness
        for ind in individuals:
            if ind.fitness is None:
                ind.fitness = self.scores[ind.text]


def evolve(config: EvolutionConfig, corpus: Corpus,
           seeds: Sequence[Node] = (),
           llm: "_guidance.GuidanceHandle | None" = None,
           seed_origin: str = "llm_seed") -> RunReport:
    """Run the full loop and score the final elite on both corpus splits."""
    t0 = time.perf_counter()
    pset = default_primitive_set()
    rng = random.Random(config.seed)
    train_pack = pack_instances(corpus.train_instances)
    cache = _FitnessCache(train_pack, config.budget, config.workers)

    population = [make_individual(random_program(pset, rng), pset, "random")
                  for _ in range(config.population_size)]
    population += [make_individual(t, pset, seed_origin) for t in seeds]

    stats: list[GenerationStats] = []
    best: Individual | None = None
    last_improved = 0

    def observe(generation: int, pool: list[Individual], kept: int) -> Individual:
        nonlocal best, last_improved
        gen_best = elite(pool)
        if best is None or gen_best.fitness > best.fitness or \
                (gen_best.fitness == best.fitness and gen_best.length < best.length):
            best = gen_best
            last_improved = generation
        stats.append(GenerationStats(
            generation=generation,
            best_fitness=best.fitness,
            best_length=best.length,
            best_height=best.height,
            mean_fitness=sum(i.fitness for i in pool) / len(pool),
            population_size=kept,
        ))
        return best

    def solved(generation: int) -> bool:
        # elitism keeps best fitness non-decreasing, so stopping once the
        # target holds yields the same final train accuracy as running out
        # the budget; the settle window lets the elite keep shrinking first,
        # since shorter equal-fitness programs generalize better
        if config.early_stop_at is None or best.fitness < config.early_stop_at:
            return False
        return generation - last_improved >= config.early_stop_settle

    cache.evaluate(population)
    observe(0, population, len(population))

    for generation in range(1, config.n_generations + 1):
        if solved(generation - 1):
            break
        population = length_bound_filter(population, config.length_slack)
        kept = len(population)
        population = sus_select(population, config.population_size, rng,
                                config.fitness_scale)
        for i in range(len(population)):
            if rng.random() < config.mut_prob:
                tree = mutate_subtree(population[i].tree, pset, rng)
                population[i] = make_individual(tree, pset, "mutation")
        for i in range(0, len(population) - 1, 2):
            if rng.random() < config.xover_prob:
                a, b = crossover_subtrees(population[i].tree,
                                          population[i + 1].tree, rng)
                population[i] = make_individual(a, pset, "crossover")
                population[i + 1] = make_individual(b, pset, "crossover")
        if llm is not None:
            extras = _llm_mutants(llm, best, population, rng, config, cache)
            population += extras
            if not llm.available:
                llm = None
        population.append(best)
        cache.evaluate(population)
        observe(generation, population, kept)

    test_accuracy = (
        accuracy_matrix([best.flat], pack_instances(corpus.test_instances),
                        config.budget, config.workers)[0].mean()
        if corpus.test_instances else float("nan"))
    return RunReport(
        stats=stats,
        elite=best,
        train_accuracy=best.fitness,
        test_accuracy=float(test_accuracy),
        wall_time_s=time.perf_counter() - t0,
        seed=config.seed,
    )


def _llm_mutants(handle: "_guidance.GuidanceHandle", best: Individual,
                 population: list[Individual], rng: random.Random,
                 config: EvolutionConfig,
                 cache: _FitnessCache) -> list[Individual]:
    """Elite always, plus a small random sample; results are appended."""
    sample_cap = max(1, config.population_size // 100)
    targets = [best] + rng.sample(population, k=min(sample_cap, len(population)))
    pset = default_primitive_set()
    out: list[Individual] = []
    for ind in targets:
        if ind.fitness is None:
            cache.evaluate([ind])
        acc = accuracy_matrix([ind.flat], cache.pack, config.budget,
                              config.workers)[0]
        worst = np.argsort(acc, kind="stable")[:3]
        try:
            tree = handle.mutate(ind.text, ind.fitness, [int(k) for k in worst])
        except _guidance.GuidedMutationFailed:
            continue
        except _guidance.GuidanceUnavailable:
            break
        out.append(make_individual(tree, pset, "llm_mutation"))
    return out


def clone_config(config: EvolutionConfig, **overrides) -> EvolutionConfig:
    return replace(config, **overrides)
