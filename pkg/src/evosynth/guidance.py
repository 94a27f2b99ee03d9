"""Language-model hooks: task descriptions, seed programs, elite mutations.

Everything travels as plain chat messages against a minimal client
interface, so tests and deterministic experiments run on a scripted mock
while live use speaks the common chat-completions JSON protocol. Model
output is untrusted text: candidate programs are extracted substring by
substring and must survive the kind-checking parser before anything
downstream sees them.

Prompts are rendered from the training split only. Keeping held-out
instances out of every prompt is a correctness property, not a style
choice, and the tests scan transcripts for it.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import requests

from .programs import (Node, PrimitiveSet, ProgramError, default_primitive_set,
                       parse_program)
from .tasks import Instance

API_KEY_ENV = "EVOSYNTH_LLM_KEY"
MOCK_DELIMITER = "---"


class GuidanceUnavailable(RuntimeError):
    """The model cannot be reached (or produced nothing usable at all)."""


class GuidedMutationFailed(RuntimeError):
    """No parseable program within the retry budget."""


Message = dict[str, str]


class ChatClient(Protocol):
    def send(self, messages: Sequence[Message]) -> str: ...


@dataclass
class GuidanceSettings:
    n_descriptions: int = 5
    min_seeds: int = 30
    mutation_retries: int = 3
    seed_call_cap: int = 20      # hard stop for the seed loop
    examples_shown: int = 3      # training-split instances rendered into prompts
    failing_shown: int = 3
    endpoint: str = ""
    model: str = ""

    def __post_init__(self):
        for name in ("n_descriptions", "min_seeds", "mutation_retries",
                     "seed_call_cap", "examples_shown", "failing_shown"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


class MockChatClient:
    """Replays a fixed list of responses in order; fully deterministic.

    Keeps a transcript of (messages, response) pairs so tests can audit
    exactly what was sent.
    """

    def __init__(self, responses: Sequence[str]):
        self._responses = list(responses)
        self._next = 0
        self.transcript: list[tuple[list[Message], str]] = []

    def send(self, messages: Sequence[Message]) -> str:
        if self._next >= len(self._responses):
            raise GuidanceUnavailable(
                f"mock script exhausted after {self._next} responses")
        response = self._responses[self._next]
        self._next += 1
        self.transcript.append((list(messages), response))
        return response

    @property
    def prompts(self) -> list[str]:
        return [m["content"] for msgs, _ in self.transcript for m in msgs]


def load_mock_script(path: str | Path) -> list[str]:
    """Plain text file of responses separated by lines holding '---'."""
    chunks: list[list[str]] = [[]]
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip() == MOCK_DELIMITER:
            chunks.append([])
        else:
            chunks[-1].append(line)
    return ["\n".join(chunk).strip() for chunk in chunks]


class HttpChatClient:
    """Chat-completions client with timeout, retries, and backoff.

    The credential comes from the environment only; there is no way to put
    it in a config file by design.
    """

    def __init__(self, endpoint: str, model: str, timeout: float = 60.0,
                 retries: int = 3, session: requests.Session | None = None,
                 sleep=time.sleep):
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self.retries = retries
        self.session = session or requests.Session()
        self._sleep = sleep

    def send(self, messages: Sequence[Message]) -> str:
        key = os.environ.get(API_KEY_ENV)
        if not key:
            raise GuidanceUnavailable(f"{API_KEY_ENV} is not set")
        payload = {"model": self.model, "messages": list(messages)}
        headers = {"Authorization": f"Bearer {key}"}
        last = "no attempt made"
        for attempt in range(self.retries):
            try:
                resp = self.session.post(self.endpoint, json=payload,
                                         headers=headers, timeout=self.timeout)
            except requests.RequestException as err:
                last = str(err)
            else:
                if resp.status_code < 400:
                    try:
                        return resp.json()["choices"][0]["message"]["content"]
                    except (KeyError, IndexError, TypeError, ValueError) as err:
                        raise GuidanceUnavailable(
                            f"malformed completion payload: {err}") from err
                if resp.status_code < 500:
                    raise GuidanceUnavailable(
                        f"endpoint rejected the request: HTTP {resp.status_code}")
                last = f"HTTP {resp.status_code}"
            if attempt + 1 < self.retries:
                self._sleep(2.0 ** attempt)
        raise GuidanceUnavailable(f"transport failed after {self.retries} tries: {last}")


# ---------------------------------------------------------------------------
# prompt rendering


def render_instance(instance: Instance) -> str:
    lines = ["Training"]
    for k, ex in enumerate(instance.training, start=1):
        lines += ["", f"Example {k}", "",
                  f"Input: {list(ex.input)}", f"Output: {list(ex.output)}"]
    lines += ["", "Testing", "",
              f"Input: {list(instance.testing.input)}",
              f"Output: {list(instance.testing.output)}"]
    return "\n".join(lines)


def render_instances(instances: Sequence[Instance]) -> str:
    return "\n\n".join(render_instance(inst) for inst in instances)


def render_primitive_docs(pset: PrimitiveSet) -> str:
    lines = []
    for sig in pset.by_opcode:
        args = ", ".join(k.value for k in sig.arg_kinds)
        lines.append(f"{sig.name}({args}) -> {sig.return_kind.value}: {sig.doc}")
    return "\n".join(lines)


@dataclass(frozen=True)
class PromptBundle:
    examples_text: str
    primitives_text: str
    elite_text: str | None = None
    elite_score: float | None = None


_SYSTEM = ("You are helping to synthesize programs for list-transformation "
           "puzzles written in a small domain-specific language.")


def _chat(content: str) -> list[Message]:
    return [{"role": "system", "content": _SYSTEM},
            {"role": "user", "content": content}]


def generate_description(client: ChatClient, task_examples: str) -> str:
    prompt = (
        "Below are solved instances of one puzzle family. Each instance shows "
        "training input/output list pairs followed by a held-out testing pair "
        "obeying the same rule.\n\n"
        f"{task_examples}\n\n"
        "Describe in a short paragraph the rule that turns each input list "
        "into its output list, including how the training pairs reveal which "
        "variant of the rule applies.")
    return client.send(_chat(prompt))


def describe_task(client: ChatClient, task_examples: str,
                  settings: GuidanceSettings | None = None) -> str:
    """Collect several candidate descriptions, then ask for one synthesis."""
    settings = settings or GuidanceSettings()
    candidates = [generate_description(client, task_examples)
                  for _ in range(settings.n_descriptions)]
    numbered = "\n".join(f"{i + 1}. {d}" for i, d in enumerate(candidates))
    prompt = (
        "Here are several candidate descriptions of the same puzzle family:\n\n"
        f"{numbered}\n\n"
        "And the instances they describe:\n\n"
        f"{task_examples}\n\n"
        "Write the single most accurate and complete description of the rule.")
    return client.send(_chat(prompt))


def extract_programs(text: str) -> list[str]:
    """Every maximal balanced call-expression substring, left to right."""
    out: list[str] = []
    n = len(text)
    i = 0
    while i < n:
        ch = text[i]
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            k = j
            while k < n and text[k].isspace():
                k += 1
            if k < n and text[k] == "(":
                depth = 0
                m = k
                closed = -1
                while m < n:
                    if text[m] == "(":
                        depth += 1
                    elif text[m] == ")":
                        depth -= 1
                        if depth == 0:
                            closed = m
                            break
                    m += 1
                if closed >= 0:
                    out.append(text[i:closed + 1])
                    i = closed + 1
                    continue
            i = j
        else:
            i += 1
    return out


def generate_seed_individuals(client: ChatClient, description: str,
                              pset: PrimitiveSet,
                              settings: GuidanceSettings | None = None,
                              task_examples: str = "") -> list[Node]:
    """Prompt until enough valid programs arrive or the call cap is hit."""
    settings = settings or GuidanceSettings()
    docs = render_primitive_docs(pset)
    prompt = (
        f"Task description:\n{description}\n\n"
        f"The language has these primitives:\n{docs}\n\n"
        + (f"Solved instances:\n\n{task_examples}\n\n" if task_examples else "")
        + "Write candidate programs that solve the task, in nested call "
          "syntax such as testing_output_write(testing_input_min()). "
          f"Propose up to {settings.min_seeds} diverse programs, one per line.")
    trees: list[Node] = []
    calls = 0
    while len(trees) < settings.min_seeds and calls < settings.seed_call_cap:
        try:
            reply = client.send(_chat(prompt))
        except GuidanceUnavailable:
            break
        calls += 1
        for candidate in extract_programs(reply):
            try:
                trees.append(parse_program(candidate, pset))
            except ProgramError:
                continue
    if not trees:
        raise GuidanceUnavailable(
            f"no valid programs after {calls} generation calls")
    return trees[:settings.min_seeds]


def guided_mutation(client: ChatClient, description: str, program_text: str,
                    score: float, failing_examples: str, pset: PrimitiveSet,
                    settings: GuidanceSettings | None = None) -> Node:
    """One improved program, or GuidedMutationFailed after the retry budget."""
    settings = settings or GuidanceSettings()
    prompt = (
        f"Task description:\n{description}\n\n"
        f"The current best program scores {score:.3f}:\n{program_text}\n\n"
        + (f"Instances it struggles with:\n\n{failing_examples}\n\n"
           if failing_examples else "")
        + "Reply with exactly one program in the same nested call syntax. "
          "Either improve on the performance of this program or reduce its "
          "length while keeping its performance.")
    for _ in range(settings.mutation_retries):
        reply = client.send(_chat(prompt))
        for candidate in extract_programs(reply):
            try:
                return parse_program(candidate, pset)
            except ProgramError:
                continue
    raise GuidedMutationFailed(
        f"no parseable program in {settings.mutation_retries} replies")


@dataclass
class GuidanceHandle:
    """Everything the engine needs to consult the model during a run."""

    client: ChatClient
    settings: GuidanceSettings
    pset: PrimitiveSet
    description: str
    instances: tuple[Instance, ...]
    examples_text: str
    available: bool = True

    @classmethod
    def build(cls, client: ChatClient, train_instances: Sequence[Instance],
              settings: GuidanceSettings | None = None,
              pset: PrimitiveSet | None = None) -> "GuidanceHandle":
        settings = settings or GuidanceSettings()
        pset = pset or default_primitive_set()
        shown = tuple(train_instances[:settings.examples_shown])
        examples_text = render_instances(shown)
        description = describe_task(client, examples_text, settings)
        return cls(client=client, settings=settings, pset=pset,
                   description=description, instances=tuple(train_instances),
                   examples_text=examples_text)

    def seed_trees(self) -> list[Node]:
        return generate_seed_individuals(self.client, self.description,
                                         self.pset, self.settings,
                                         self.examples_text)

    def mutate(self, program_text: str, score: float,
               failing_indices: Sequence[int]) -> Node:
        if not self.available:
            raise GuidanceUnavailable("guidance disabled for this run")
        shown = failing_indices[:self.settings.failing_shown]
        failing = render_instances([self.instances[i] for i in shown])
        try:
            return guided_mutation(self.client, self.description, program_text,
                                   score, failing, self.pset, self.settings)
        except GuidanceUnavailable:
            self.available = False
            raise
