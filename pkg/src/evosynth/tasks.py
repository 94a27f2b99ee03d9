"""Synthetic list-transformation tasks and their instance corpora.

Four task families, in rough order of difficulty: count the elements of a
list, return its maximum or minimum, reverse it (or copy it unchanged), and
sort it ascending or descending. Each puzzle instance bundles a handful of
solved training pairs with one held-out testing pair; the hidden variant
(max vs. min, ascending vs. descending, ...) is constant within an instance
and must be inferred from the training pairs at runtime.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator, Sequence

ELEMENT_MIN = 0
ELEMENT_MAX = 9


class TaskKind(str, Enum):
    COUNT = "count"
    MAX_MIN = "max_min"
    INVERSE = "inverse"
    SORTED = "sorted"


# Per-task variant vocabulary. The variant is drawn per instance and shared
# by all of its examples.
VARIANTS: dict[TaskKind, tuple[str, ...]] = {
    TaskKind.COUNT: ("none",),
    TaskKind.MAX_MIN: ("max", "min"),
    TaskKind.INVERSE: ("inverted", "identity"),
    TaskKind.SORTED: ("ascending", "descending"),
}


class CorpusError(ValueError):
    """Base class for corpus file problems."""


class CorpusFormatError(CorpusError):
    """Structurally malformed corpus file (missing/mistyped fields)."""


class CorpusValidationError(CorpusError):
    """Well-formed file whose contents break a task invariant."""


@dataclass(frozen=True)
class Example:
    input: tuple[int, ...]
    output: tuple[int, ...]


@dataclass(frozen=True)
class Instance:
    training: tuple[Example, ...]
    testing: Example
    variant: str


@dataclass(frozen=True)
class Corpus:
    task: TaskKind
    train_instances: tuple[Instance, ...]
    test_instances: tuple[Instance, ...]
    seed: int

    def instances(self) -> Iterator[Instance]:
        yield from self.train_instances
        yield from self.test_instances


@dataclass(frozen=True)
class CorpusParams:
    """Knobs for instance generation.

    ``variants`` restricts the variant draw to a subset of the task's
    vocabulary (``None`` means all of them). Count inputs are capped at
    length 9 regardless of ``max_len`` so the answer stays a single digit.
    """

    min_len: int = 1
    max_len: int = 10
    min_train_examples: int = 2
    max_train_examples: int = 5
    variants: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not (1 <= self.min_len <= self.max_len):
            raise ValueError("list length range must satisfy 1 <= min <= max")
        if not (1 <= self.min_train_examples <= self.max_train_examples):
            raise ValueError("training-examples range must satisfy 1 <= min <= max")


DEFAULT_PARAMS = CorpusParams()


def ground_truth(task: TaskKind, variant: str, values: Sequence[int]) -> list[int]:
    """Expected output for ``values`` under a task/variant combination."""
    if not values:
        raise ValueError("input list must be non-empty")
    if task is TaskKind.COUNT and variant == "none":
        return [len(values)]
    if task is TaskKind.MAX_MIN:
        if variant == "max":
            return [max(values)]
        if variant == "min":
            return [min(values)]
    if task is TaskKind.INVERSE:
        if variant == "inverted":
            return list(reversed(values))
        if variant == "identity":
            return list(values)
    if task is TaskKind.SORTED:
        if variant == "ascending":
            return sorted(values)
        if variant == "descending":
            return sorted(values, reverse=True)
    raise ValueError(f"unknown variant {variant!r} for task {task.value!r}")


def _allowed_variants(task: TaskKind, params: CorpusParams) -> tuple[str, ...]:
    allowed = VARIANTS[task]
    if params.variants is None:
        return allowed
    chosen = tuple(params.variants)
    bad = [v for v in chosen if v not in allowed]
    if bad or not chosen:
        raise ValueError(f"invalid variants {bad!r} for task {task.value!r}")
    return chosen


def _random_input(rng: random.Random, min_len: int, max_len: int) -> tuple[int, ...]:
    n = rng.randint(min_len, max_len)
    return tuple(rng.randint(ELEMENT_MIN, ELEMENT_MAX) for _ in range(n))


def generate_instance(task: TaskKind, rng: random.Random,
                      params: CorpusParams = DEFAULT_PARAMS) -> Instance:
    """Draw one instance: a uniform variant, then fresh random examples.

    For max_min and sorted, the first training example is redrawn until its
    input holds at least two distinct values. A constant first example
    carries no evidence about the variant, making some instances unsolvable
    in principle for programs that key off that example.
    """
    variant = rng.choice(_allowed_variants(task, params))
    max_len = min(params.max_len, 9) if task is TaskKind.COUNT else params.max_len
    n_train = rng.randint(params.min_train_examples, params.max_train_examples)

    training: list[Example] = []
    for i in range(n_train):
        values = _random_input(rng, params.min_len, max_len)
        if i == 0 and task in (TaskKind.MAX_MIN, TaskKind.SORTED):
            while len(set(values)) < 2:
                values = _random_input(rng, params.min_len, max_len)
        training.append(Example(values, tuple(ground_truth(task, variant, values))))

    test_values = _random_input(rng, params.min_len, max_len)
    testing = Example(test_values, tuple(ground_truth(task, variant, test_values)))
    return Instance(tuple(training), testing, variant)


def generate_corpus(task: TaskKind, n_train: int, n_test: int, seed: int,
                    params: CorpusParams = DEFAULT_PARAMS) -> Corpus:
    """Deterministic corpus: a pure function of (task, sizes, seed, params)."""
    if n_train < 1 or n_test < 0:
        raise ValueError("need n_train >= 1 and n_test >= 0")
    rng = random.Random(seed)
    train = tuple(generate_instance(task, rng, params) for _ in range(n_train))
    test = tuple(generate_instance(task, rng, params) for _ in range(n_test))
    return Corpus(task, train, test, seed)


# ---------------------------------------------------------------------------
# persistence: UTF-8 JSON with a stable key order so corpora diff cleanly


def _example_to_dict(ex: Example) -> dict:
    return {"input": list(ex.input), "output": list(ex.output)}


def _instance_to_dict(inst: Instance) -> dict:
    return {
        "variant": inst.variant,
        "training": [_example_to_dict(ex) for ex in inst.training],
        "testing": _example_to_dict(inst.testing),
    }


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    doc = {
        "task": corpus.task.value,
        "seed": corpus.seed,
        "train_instances": [_instance_to_dict(i) for i in corpus.train_instances],
        "test_instances": [_instance_to_dict(i) for i in corpus.test_instances],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _require(doc: dict, field: str, kind: type, where: str):
    if not isinstance(doc, dict):
        raise CorpusFormatError(f"{where}: expected an object")
    if field not in doc:
        raise CorpusFormatError(f"{where}: missing field {field!r}")
    value = doc[field]
    if kind is int and isinstance(value, bool):
        raise CorpusFormatError(f"{where}.{field}: expected an integer")
    if not isinstance(value, kind):
        raise CorpusFormatError(f"{where}.{field}: expected {kind.__name__}")
    return value


def _int_list(doc: dict, field: str, where: str) -> tuple[int, ...]:
    raw = _require(doc, field, list, where)
    out = []
    for k, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, int):
            raise CorpusFormatError(f"{where}.{field}[{k}]: expected an integer")
        if not (ELEMENT_MIN <= v <= ELEMENT_MAX):
            raise CorpusValidationError(
                f"{where}.{field}[{k}]: element {v} outside [{ELEMENT_MIN}, {ELEMENT_MAX}]")
        out.append(v)
    return tuple(out)


def _example_from_dict(doc: dict, where: str) -> Example:
    ex = Example(_int_list(doc, "input", where), _int_list(doc, "output", where))
    if not ex.input:
        raise CorpusValidationError(f"{where}.input: must be non-empty")
    return ex


def _instance_from_dict(doc: dict, task: TaskKind, where: str) -> Instance:
    variant = _require(doc, "variant", str, where)
    if variant not in VARIANTS[task]:
        raise CorpusValidationError(f"{where}.variant: {variant!r} not valid for {task.value!r}")
    raw_training = _require(doc, "training", list, where)
    if not raw_training:
        raise CorpusValidationError(f"{where}.training: must hold at least one example")
    training = tuple(_example_from_dict(ex, f"{where}.training[{k}]")
                     for k, ex in enumerate(raw_training))
    testing = _example_from_dict(_require(doc, "testing", dict, where), f"{where}.testing")
    for k, ex in enumerate((*training, testing)):
        label = f"{where}.testing" if k == len(training) else f"{where}.training[{k}]"
        if list(ex.output) != ground_truth(task, variant, ex.input):
            raise CorpusValidationError(f"{label}: output disagrees with the {task.value!r} "
                                        f"ground truth for variant {variant!r}")
    return Instance(training, testing, variant)


def load_corpus(path: str | Path) -> Corpus:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise CorpusFormatError(f"line {err.lineno}, column {err.colno}: {err.msg}") from err
    task_name = _require(doc, "task", str, "corpus")
    try:
        task = TaskKind(task_name)
    except ValueError:
        raise CorpusFormatError(f"corpus.task: unknown task {task_name!r}") from None
    seed = _require(doc, "seed", int, "corpus")
    train = tuple(_instance_from_dict(d, task, f"train_instances[{k}]")
                  for k, d in enumerate(_require(doc, "train_instances", list, "corpus")))
    test = tuple(_instance_from_dict(d, task, f"test_instances[{k}]")
                 for k, d in enumerate(_require(doc, "test_instances", list, "corpus")))
    return Corpus(task, train, test, seed)
