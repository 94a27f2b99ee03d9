"""Program synthesis from examples over a typed list-manipulation language.

The pieces, bottom up: `tasks` generates and serializes example corpora,
`programs` owns the primitive table and tree representation, `machine`
evaluates programs two ways (a compiled stack machine and a plain recursive
oracle with identical semantics), `evolution` runs the genetic search,
`guidance` adds optional chat-model seeding and mutation, and `ensemble`
combines independent runs through an elite-seeded final run.
"""

__version__ = "0.1.0"

from .tasks import (TaskKind, VARIANTS, Example, Instance, Corpus,
                    CorpusParams, CorpusError, CorpusFormatError,
                    CorpusValidationError, ground_truth, generate_corpus,
                    save_corpus, load_corpus)
from .programs import (Kind, Node, PrimitiveSignature, PrimitiveSet,
                       FlatProgram, ProgramError, ProgramParseError,
                       ProgramKindError, default_primitive_set, is_subkind,
                       iter_nodes, length, height, check_kinds,
                       is_kind_correct, random_program, mutate_subtree,
                       crossover_subtrees, serialize_program, parse_program,
                       flatten, reconstruct)
from .machine import (RunBudget, RunResult, MachineState, InstancePack,
                      STATUS_OK, STATUS_ERROR, init_state, reference_run,
                      reference_fitness, run_program, accuracy,
                      pack_instances, accuracy_matrix, evaluate_population,
                      fitness, instance_accuracies)
from .evolution import (Individual, EvolutionConfig, GenerationStats,
                        RunReport, make_individual, transform_fitness,
                        sus_positions, sus_select, length_bound_filter,
                        elite, evolve, clone_config)
from .guidance import (GuidanceSettings, GuidanceHandle, GuidanceUnavailable,
                       GuidedMutationFailed, MockChatClient, HttpChatClient,
                       load_mock_script, render_instance, render_instances,
                       extract_programs, API_KEY_ENV)
from .ensemble import (EnsembleConfig, EnsembleReport, AggregateRow,
                       aggregate, ensemble_run)
from .solutions import SOLUTIONS, SOLUTION_VARIANTS

__all__ = [name for name in dir() if not name.startswith("_")]
