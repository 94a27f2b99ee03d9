"""
Programs and the two interpreters
=================================

Programs are kind-correct trees over 37 primitives. They can be run two
ways: a plain recursive walker, and a compiled stack machine over the
flattened array form. Both implement the same semantics; the second one
is what makes population-scale evaluation cheap.
"""
import random

from evosynth import (RunBudget, TaskKind, default_primitive_set, flatten,
                      generate_corpus, height, init_state, length,
                      parse_program, random_program, reference_run,
                      run_program, serialize_program)
from evosynth.solutions import INVERSE_SOLUTION

pset = default_primitive_set()

# programs parse from nested call syntax
tree = parse_program(INVERSE_SOLUTION)
print(f"inverse solver: length={length(tree)} height={height(tree)}")
print(serialize_program(tree))

# run it on a fresh instance through both routes
corpus = generate_corpus(TaskKind.INVERSE, 1, 0, seed=3)
inst = corpus.train_instances[0]
budget = RunBudget()

slow = reference_run(tree, init_state(inst), budget)
fast = run_program(flatten(tree), init_state(inst), budget)
print(f"\ninput     {list(inst.testing.input)}")
print(f"expected  {list(inst.testing.output)}")
print(f"walker    {slow.output} ({slow.status})")
print(f"machine   {fast.output} ({fast.status})")

# random programs are always kind-correct by construction
rng = random.Random(0)
for _ in range(3):
    t = random_program(pset, rng)
    print(f"\nrandom ({length(t)} nodes): {serialize_program(t)[:70]}")

# runaway programs are cut off rather than looping forever: loop counts
# must stay in [1, 30] and only two loops may nest
bad = parse_program("loop(get0(), testing_input_move_right())")
print("\nzero-count loop:", run_program(flatten(bad), init_state(inst),
                                        budget).status)
