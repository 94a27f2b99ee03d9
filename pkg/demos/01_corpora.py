"""
Generating task corpora
=======================

Four list-transformation puzzle families. Each instance bundles a few
solved training pairs with one held-out testing pair; the training pairs
are what a program gets to look at while it runs.
"""
from evosynth import CorpusParams, TaskKind, generate_corpus, save_corpus

# one corpus per task, fully determined by the seed
for task in TaskKind:
    corpus = generate_corpus(task, n_train=3, n_test=1, seed=7)
    inst = corpus.train_instances[0]
    print(f"{task.value}: variant={inst.variant}")
    for ex in inst.training:
        print(f"  train {list(ex.input)} -> {list(ex.output)}")
    print(f"  test  {list(inst.testing.input)} -> {list(inst.testing.output)}")

# the hidden variant differs per instance; programs must infer it from the
# training pairs at runtime
corpus = generate_corpus(TaskKind.MAX_MIN, n_train=6, n_test=0, seed=1)
print("\nmax_min variants drawn:",
      [inst.variant for inst in corpus.train_instances])

# restricting the variant vocabulary, e.g. reversal-only corpora
params = CorpusParams(variants=("inverted",))
corpus = generate_corpus(TaskKind.INVERSE, 50, 50, seed=42, params=params)
print("inverse restricted:",
      {inst.variant for inst in corpus.instances()})

# corpora round-trip through JSON
save_corpus(corpus, "/tmp/inverse_demo.json")
print("saved /tmp/inverse_demo.json")
