"""
Model-guided search with a scripted client
==========================================

A chat model can seed the initial population and propose mutations. The
scripted client used here replays canned responses, which keeps runs
deterministic and testable; swapping in HttpChatClient pointed at any
chat-completions endpoint (credential via EVOSYNTH_LLM_KEY) gives the
live version with the same call pattern.
"""
from evosynth import EvolutionConfig, TaskKind, generate_corpus, evolve
from evosynth.guidance import GuidanceHandle, MockChatClient, render_instance
from evosynth.solutions import MAX_MIN_SOLUTION

corpus = generate_corpus(TaskKind.MAX_MIN, 30, 30, seed=5)

# what the model actually sees: training instances rendered as text
print(render_instance(corpus.train_instances[0]))

# a script standing in for the model: five descriptions, one synthesis,
# then a reply containing program candidates (here: thirty solvers)
script = (
    [f"candidate description {k}" for k in range(5)]
    + ["Each instance either selects the maximum or the minimum; the "
       "training pairs show which."]
    + ["\n".join([MAX_MIN_SOLUTION] * 30)]
)
client = MockChatClient(script)

handle = GuidanceHandle.build(client, corpus.train_instances)
print(f"\ndistilled description: {handle.description!r}")

seeds = handle.seed_trees()
print(f"{len(seeds)} seed programs extracted")

config = EvolutionConfig(population_size=100, n_generations=10, seed=2)
report = evolve(config, corpus, seeds=seeds, llm=handle)
print(f"train {report.train_accuracy:.3f}, test {report.test_accuracy:.3f}, "
      f"elite origin: {report.elite.origin}")

# the script is exhausted, so guided mutation degraded gracefully mid-run
print("guidance still available:", handle.available)
