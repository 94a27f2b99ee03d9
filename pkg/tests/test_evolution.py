"""Selection mechanics, length bounding, elitism, and the evolve loop."""
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from evosynth import (EvolutionConfig, RunBudget, TaskKind, clone_config,
                      default_primitive_set, evolve, generate_corpus,
                      make_individual, parse_program)
from evosynth.evolution import (elite, length_bound_filter, sus_positions,
                                sus_select, transform_fitness)
from evosynth.solutions import COUNT_SOLUTION, MAX_MIN_SOLUTION

pset = default_primitive_set()


def individual(text, fitness):
    ind = make_individual(parse_program(text), pset, "random")
    ind.fitness = fitness
    return ind


# ---------------------------------------------------------------------------
# fitness transform


def test_transform_endpoints_exact():
    assert transform_fitness(0.0) == 0.0
    target = math.exp(50.0) - 1.0
    assert abs(transform_fitness(1.0) - target) <= math.ulp(math.exp(50.0))


def test_transform_is_monotone():
    xs = [k / 50 for k in range(51)]
    ys = [transform_fitness(x) for x in xs]
    assert all(b > a for a, b in zip(ys, ys[1:]))


def test_transform_scale_knob():
    assert transform_fitness(1.0, scale=0.0) == 0.0
    assert transform_fitness(0.5, scale=2.0) == pytest.approx(math.expm1(1.0))


# ---------------------------------------------------------------------------
# stochastic universal sampling


@given(st.lists(st.floats(0.0, 100.0), min_size=1, max_size=40),
       st.integers(1, 200), st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_sus_counts_are_floor_or_ceil(weights, n, seed):
    rng = random.Random(seed)
    picks = sus_positions(weights, n, rng)
    assert len(picks) == n
    total = sum(weights)
    for i, w in enumerate(weights):
        expected = n * (w / total) if total > 0 else n / len(weights)
        got = picks.count(i)
        assert math.floor(expected) <= got <= math.ceil(expected)


def test_sus_zero_weights_fall_back_to_uniform():
    rng = random.Random(1)
    picks = sus_positions([0.0, 0.0, 0.0, 0.0], 8, rng)
    assert all(picks.count(i) == 2 for i in range(4))


def test_sus_integral_expectations_are_exact():
    rng = random.Random(9)
    picks = sus_positions([1.0] * 10, 10, rng)
    assert sorted(picks) == list(range(10))


def test_sus_zero_draws():
    assert sus_positions([1.0, 2.0], 0, random.Random(0)) == []


def test_sus_select_maps_positions_to_individuals():
    pop = [individual("no_op()", 0.0), individual("no_op()", 1.0)]
    out = sus_select(pop, 6, random.Random(3))
    # fitness 1 transforms to e^50-1, fitness 0 to 0: all picks are pop[1]
    assert all(ind is pop[1] for ind in out)


# ---------------------------------------------------------------------------
# length bounding and elitism


def test_filter_culls_beyond_reference_plus_slack():
    short = individual("testing_output_write(get0())", 0.9)                 # len 2
    ref = individual("no_op()", 1.0)                                        # len 1
    nested = "prog2(no_op(), {})"
    deep = "no_op()"
    for _ in range(15):
        deep = nested.format(deep)                                          # len 31
    long_weak = individual(deep, 0.5)
    long_strong = individual(deep, 1.0)
    kept = length_bound_filter([short, ref, long_weak, long_strong], slack=25)
    assert ref in kept and short in kept
    assert long_weak not in kept and long_strong not in kept


def test_filter_reference_is_best_then_shortest():
    a = individual("prog2(no_op(), no_op())", 1.0)   # len 3, ties on fitness
    b = individual("no_op()", 1.0)                   # len 1: the reference
    deep = "no_op()"
    for _ in range(14):
        deep = "prog2(no_op(), {})".format(deep)     # len 29 > 1 + 25
    c = individual(deep, 0.2)
    kept = length_bound_filter([a, b, c], slack=25)
    assert b in kept and a in kept and c not in kept


def test_filter_keeps_everything_within_slack():
    pop = [individual("no_op()", 0.1 * k) for k in range(5)]
    assert length_bound_filter(pop, slack=25) == pop


def test_elite_prefers_fitness_then_brevity_then_order():
    a = individual("prog2(no_op(), no_op())", 1.0)
    b = individual("no_op()", 1.0)
    c = individual("no_op()", 0.5)
    assert elite([c, a, b]) is b
    d = individual("no_op()", 1.0)
    assert elite([b, d]) is b
    assert elite([d, b]) is d


# ---------------------------------------------------------------------------
# config


def test_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(population_size=1)
    with pytest.raises(ValueError):
        EvolutionConfig(population_size=10, mut_prob=1.5)
    with pytest.raises(ValueError):
        EvolutionConfig(population_size=10, early_stop_at=0.0)
    with pytest.raises(ValueError):
        EvolutionConfig(population_size=10, early_stop_settle=-1)


def test_clone_config_overrides():
    base = EvolutionConfig(population_size=10, seed=4)
    other = clone_config(base, population_size=20)
    assert other.population_size == 20 and other.seed == 4
    assert base.population_size == 10


# ---------------------------------------------------------------------------
# the loop itself (small corpora to stay fast)


@pytest.fixture(scope="module")
def small_corpus():
    return generate_corpus(TaskKind.COUNT, 20, 10, seed=6)


@pytest.fixture(scope="module")
def hard_corpus():
    # max_min: the shortest known solver has length 8, so random initial
    # populations essentially never contain a perfect program
    return generate_corpus(TaskKind.MAX_MIN, 20, 10, seed=6)


def small_config(**kw):
    kw.setdefault("population_size", 40)
    kw.setdefault("n_generations", 15)
    kw.setdefault("seed", 3)
    return EvolutionConfig(**kw)


def test_evolve_is_reproducible(small_corpus):
    a = evolve(small_config(), small_corpus)
    b = evolve(small_config(), small_corpus)
    assert a.elite.text == b.elite.text
    assert [s.best_fitness for s in a.stats] == [s.best_fitness for s in b.stats]
    assert a.train_accuracy == b.train_accuracy
    assert a.test_accuracy == b.test_accuracy


def test_evolve_seed_changes_outcome(hard_corpus):
    a = evolve(small_config(), hard_corpus)
    b = evolve(small_config(seed=99), hard_corpus)
    assert [s.mean_fitness for s in a.stats] != [s.mean_fitness for s in b.stats]


def test_best_fitness_is_monotone(small_corpus):
    report = evolve(small_config(n_generations=30), small_corpus)
    best = [s.best_fitness for s in report.stats]
    assert all(b >= a for a, b in zip(best, best[1:]))
    assert report.stats[0].generation == 0
    assert report.train_accuracy == best[-1]


def test_injected_seed_tree_dominates(hard_corpus):
    from evosynth import serialize_program
    solution = parse_program(MAX_MIN_SOLUTION)
    report = evolve(small_config(n_generations=2), hard_corpus,
                    seeds=[solution])
    assert report.train_accuracy == 1.0
    assert report.elite.origin == "llm_seed"
    assert report.elite.text == serialize_program(solution)


def test_harvested_seed_origin_label(hard_corpus):
    solution = parse_program(MAX_MIN_SOLUTION)
    report = evolve(small_config(n_generations=2), hard_corpus,
                    seeds=[solution], seed_origin="elite")
    assert report.elite.origin == "elite"


def test_early_stop_truncates_run(small_corpus):
    solution = parse_program(COUNT_SOLUTION)
    report = evolve(small_config(n_generations=500, early_stop_at=1.0),
                    small_corpus, seeds=[solution])
    assert report.train_accuracy == 1.0
    assert len(report.stats) < 500


def test_early_stop_settle_waits_for_shrink(small_corpus):
    solution = parse_program(COUNT_SOLUTION)
    cfg = small_config(n_generations=500, early_stop_at=1.0,
                       early_stop_settle=20)
    report = evolve(cfg, small_corpus, seeds=[solution])
    # solved at generation 0, so the run must last at least the settle window
    assert len(report.stats) - 1 >= 20
    assert report.train_accuracy == 1.0


def test_cached_fitness_matches_fresh_evaluation(small_corpus):
    from evosynth import fitness as fresh_fitness
    report = evolve(small_config(), small_corpus)
    got = fresh_fitness(report.elite.flat, small_corpus.train_instances,
                        RunBudget())
    assert report.train_accuracy == got
