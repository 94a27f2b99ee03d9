import pytest

from evosynth import (RunBudget, TaskKind, default_primitive_set, fitness,
                      flatten, generate_corpus, parse_program)


@pytest.fixture(scope="session")
def pset():
    return default_primitive_set()


@pytest.fixture(scope="session", autouse=True)
def warm_kernel():
    """Trigger the one-off kernel compile so timed tests measure steady state."""
    corpus = generate_corpus(TaskKind.COUNT, 2, 0, 0)
    tree = parse_program("prog2(no_op(), testing_output_write(get0()))")
    fitness(flatten(tree), corpus.train_instances, RunBudget(iterations=2))
