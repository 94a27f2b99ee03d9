"""
Measuring evaluation throughput
===============================

Scoring dominates the cost of a run: population x corpus x 200 root
iterations. The compiled kernel runs flattened programs as opcode
arrays; the tree walker exists to check it, not to race it. This
script times both on the same random population and verifies that
worker sharding leaves the fitness vector bit-identical.
"""
import time

import numpy as np

from evosynth import RunBudget, TaskKind, generate_corpus
from evosynth.machine import (accuracy_matrix, init_state, pack_instances,
                              reference_run, run_program)
from evosynth.programs import (default_primitive_set, flatten,
                               random_program)
import random

N_PROGRAMS = 400
pset = default_primitive_set()
rng = random.Random(9)
trees = [random_program(pset, rng, max_height=4) for _ in range(N_PROGRAMS)]
flats = [flatten(t, pset) for t in trees]

corpus = generate_corpus(TaskKind.SORTED, 40, 10, seed=3)
pack = pack_instances(corpus.train_instances)
budget = RunBudget()

# first kernel call compiles; keep it out of the timings
accuracy_matrix(flats[:1], pack, budget)

t0 = time.perf_counter()
matrix = accuracy_matrix(flats, pack, budget)
kernel_s = time.perf_counter() - t0
evals = N_PROGRAMS * len(corpus.train_instances)
print(f"kernel: {evals} evaluations in {kernel_s:.2f}s "
      f"({evals / kernel_s:,.0f}/s)")

# the tree walker on a 40-program sample, scaled up for comparison
sample = trees[:40]
t0 = time.perf_counter()
for tree in sample:
    for inst in corpus.train_instances:
        reference_run(tree, init_state(inst), budget)
walker_s = (time.perf_counter() - t0) * (N_PROGRAMS / len(sample))
print(f"walker (extrapolated): {walker_s:.2f}s, "
      f"speedup {walker_s / kernel_s:.0f}x")

# sharding across worker threads must not change a single bit
sharded = accuracy_matrix(flats, pack, budget, workers=3)
print("workers=3 identical to workers=1:",
      bool(np.array_equal(matrix, sharded)))

# and the kernel agrees with the walker program-by-program
state = init_state(corpus.train_instances[0])
walked = reference_run(trees[7], init_state(corpus.train_instances[0]), budget)
ran = run_program(flats[7], state, budget)
print("spot check, same output buffer:", walked.output == ran.output)
