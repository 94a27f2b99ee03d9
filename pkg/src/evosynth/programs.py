"""The typed DSL: primitive signatures, tree programs, and their operators.

Programs are immutable trees of primitives. Every edge is kind-checked:
a child may fill a slot when its return kind equals the declared kind or is
a subtype of it (WInteger and RInteger are both subtypes of Integer).
COperation exists in the kind vocabulary but no default primitive produces
or accepts it; Operation slots do not admit it.

The module also flattens trees to the contiguous-array form consumed by the
batch interpreter and parses/serializes the nested call-expression text that
programs travel as (between runs, in reports, and to/from a language model).
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

MAX_ARITY = 3
LEAF_PROBABILITY = 0.3  # chance of closing a branch once the height floor is met


class Kind(str, Enum):
    OPERATION = "Operation"
    COPERATION = "COperation"
    INTEGER = "Integer"
    WINTEGER = "WInteger"
    RINTEGER = "RInteger"
    BOOLEAN = "Boolean"


def is_subkind(sub: Kind, sup: Kind) -> bool:
    """True when a value of kind ``sub`` may fill a slot of kind ``sup``."""
    return sub is sup or (sup is Kind.INTEGER and sub in (Kind.WINTEGER, Kind.RINTEGER))


class ProgramError(ValueError):
    pass


class ProgramParseError(ProgramError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ProgramKindError(ProgramError):
    pass


@dataclass(frozen=True)
class PrimitiveSignature:
    name: str
    arg_kinds: tuple[Kind, ...]
    return_kind: Kind
    opcode: int
    doc: str = ""

    @property
    def arity(self) -> int:
        return len(self.arg_kinds)


# name, arg kinds, return kind, one-line semantics. Order defines opcodes.
_OP, _CO, _I, _W, _R, _B = Kind.OPERATION, Kind.COPERATION, Kind.INTEGER, \
    Kind.WINTEGER, Kind.RINTEGER, Kind.BOOLEAN

_TABLE: tuple[tuple[str, tuple[Kind, ...], Kind, str], ...] = (
    # control
    ("prog2", (_OP, _OP), _OP, "run both arguments in order"),
    ("prog3", (_OP, _OP, _OP), _OP, "run all three arguments in order"),
    ("comparison", (_B, _OP, _OP), _OP,
     "run the second argument if the condition holds, otherwise the third"),
    ("loop", (_R, _OP), _OP,
     "repeat the body; the count must be in [1,30] and loops nest at most twice"),
    ("no_op", (), _OP, "do nothing"),
    # testing-side reads
    ("testing_input_read", (), _R, "element under the testing input cursor"),
    ("testing_output_read", (), _R, "element under the testing output cursor"),
    ("testing_input_min", (), _R, "minimum of the testing input list"),
    ("testing_input_max", (), _R, "maximum of the testing input list"),
    ("get_testing_length_input_x", (), _R, "length of the testing input list"),
    ("get0", (), _R, "the constant 0"),
    # testing-side writes and cursor moves
    ("testing_output_write", (_R,), _OP,
     "write the argument at the testing output cursor"),
    ("testing_input_move_left", (), _OP, "move the testing input cursor one step left"),
    ("testing_input_move_right", (), _OP, "move the testing input cursor one step right"),
    ("testing_output_move_left", (), _OP, "move the testing output cursor one step left"),
    ("testing_output_move_right", (), _OP, "move the testing output cursor one step right"),
    ("testing_reset_input_position", (), _OP, "move the testing input cursor to 0"),
    ("testing_reset_output_position", (), _OP, "move the testing output cursor to 0"),
    ("swap_testing_output_next", (), _OP,
     "swap the testing output elements at the cursor and one past it"),
    # training-side reads and moves, all on the current training example
    ("input_read", (), _W, "element under the training input cursor"),
    ("output_read", (), _W, "element under the training output cursor"),
    ("input_max", (), _W, "maximum of the training input list"),
    ("input_min", (), _W, "minimum of the training input list"),
    ("output_max", (), _W, "maximum of the training output list"),
    ("output_min", (), _W, "minimum of the training output list"),
    ("input_move_left", (), _OP, "move the training input cursor one step left"),
    ("input_move_right", (), _OP, "move the training input cursor one step right"),
    ("output_move_left", (), _OP, "move the training output cursor one step left"),
    ("output_move_right", (), _OP, "move the training output cursor one step right"),
    ("training_next_example", (), _OP,
     "advance to the next training example (wrapping) and reset its cursors"),
    ("training_reset", (), _OP,
     "go back to the first training example and reset its cursors"),
    # booleans
    ("bigger_thanW", (_W, _W), _B, "first training-side value greater than the second"),
    ("bigger_thanR", (_R, _R), _B, "first testing-side value greater than the second"),
    ("equalR", (_R, _R), _B, "testing-side values are equal"),
    ("bigger_than_testing_output_next", (), _B,
     "testing output at the cursor greater than its right neighbour"),
    ("bigger_than_output_next", (), _B,
     "training output at the cursor greater than its right neighbour"),
    ("bigger_than_input_next", (), _B,
     "training input at the cursor greater than its right neighbour"),
)

OPCODES: dict[str, int] = {name: i for i, (name, _, _, _) in enumerate(_TABLE)}


class PrimitiveSet:
    """A fixed inventory of primitives with dense opcodes."""

    def __init__(self, signatures: Sequence[PrimitiveSignature],
                 root_kind: Kind = Kind.OPERATION):
        self.signatures = tuple(signatures)
        self.root_kind = root_kind
        names = [s.name for s in self.signatures]
        if len(set(names)) != len(names):
            raise ValueError("primitive names must be unique")
        if sorted(s.opcode for s in self.signatures) != list(range(len(self.signatures))):
            raise ValueError("opcodes must be dense in [0, n)")
        self.by_name = {s.name: s for s in self.signatures}
        self.by_opcode = sorted(self.signatures, key=lambda s: s.opcode)
        self._producers: dict[Kind, tuple[PrimitiveSignature, ...]] = {
            kind: tuple(s for s in self.signatures if is_subkind(s.return_kind, kind))
            for kind in Kind
        }
        self._min_height, self._max_height = self._height_bounds()
        for kind in {k for s in self.signatures for k in s.arg_kinds} | {root_kind}:
            if not any(p.arity == 0 or self._min_height[p] < len(self.signatures)
                       for p in self._producers[kind]):
                raise ValueError(f"kind {kind.value} has no terminating production")

    def producers_of(self, kind: Kind) -> tuple[PrimitiveSignature, ...]:
        return self._producers[kind]

    def _height_bounds(self):
        # fixpoint over tree heights reachable from each primitive; max heights
        # are capped at _UNBOUNDED once a cycle is detected
        big = _UNBOUNDED
        min_h = {s: 0 if s.arity == 0 else big for s in self.signatures}
        max_h = {s: 0 if s.arity == 0 else big for s in self.signatures}
        for _ in range(len(self.signatures) + 1):
            changed = False
            for s in self.signatures:
                if s.arity == 0:
                    continue
                lo = 1 + max(
                    min((min_h[p] for p in self._producers[k]), default=big)
                    for k in s.arg_kinds)
                if lo < min_h[s]:
                    min_h[s], changed = lo, True
        for _ in range(len(self.signatures) + 1):
            for s in self.signatures:
                if s.arity == 0:
                    continue
                max_h[s] = 1 + max(
                    max((max_h[p] for p in self._producers[k]), default=0)
                    for k in s.arg_kinds)
        for s in self.signatures:
            if s.arity and max_h[s] > len(self.signatures):
                max_h[s] = big
        return min_h, max_h

    def min_height(self, sig: PrimitiveSignature) -> int:
        return self._min_height[sig]

    def max_height(self, sig: PrimitiveSignature) -> int:
        return self._max_height[sig]


_UNBOUNDED = 10 ** 9

_DEFAULT_PSET = PrimitiveSet(tuple(
    PrimitiveSignature(name, args, ret, OPCODES[name], doc)
    for name, args, ret, doc in _TABLE))


def default_primitive_set() -> PrimitiveSet:
    return _DEFAULT_PSET


@dataclass(frozen=True)
class Node:
    prim: PrimitiveSignature
    children: tuple["Node", ...] = ()

    def __post_init__(self):
        if len(self.children) != self.prim.arity:
            raise ProgramKindError(
                f"{self.prim.name} expects {self.prim.arity} arguments, "
                f"got {len(self.children)}")


ProgramTree = Node


def iter_nodes(tree: Node) -> Iterator[Node]:
    """Preorder traversal."""
    stack = [tree]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))


def length(tree: Node) -> int:
    return sum(1 for _ in iter_nodes(tree))


def height(tree: Node) -> int:
    best = 0
    stack = [(tree, 0)]
    while stack:
        node, depth = stack.pop()
        best = max(best, depth)
        stack.extend((c, depth + 1) for c in node.children)
    return best


def check_kinds(tree: Node, pset: PrimitiveSet | None = None,
                slot: Kind | None = None) -> None:
    """Raise ProgramKindError on the first edge violating a signature."""
    pset = pset or default_primitive_set()
    slot = slot if slot is not None else pset.root_kind
    stack: list[tuple[Node, Kind, str]] = [(tree, slot, "root")]
    while stack:
        node, want, where = stack.pop()
        if node.prim.name not in pset.by_name or pset.by_name[node.prim.name] is not node.prim:
            raise ProgramKindError(f"{where}: {node.prim.name!r} is not in the primitive set")
        if not is_subkind(node.prim.return_kind, want):
            raise ProgramKindError(
                f"{where}: {node.prim.name} returns {node.prim.return_kind.value}, "
                f"slot wants {want.value}")
        for i, child in enumerate(node.children):
            stack.append((child, node.prim.arg_kinds[i], f"{where}.{node.prim.name}[{i}]"))


def is_kind_correct(tree: Node, pset: PrimitiveSet | None = None) -> bool:
    try:
        check_kinds(tree, pset)
    except ProgramKindError:
        return False
    return True


# ---------------------------------------------------------------------------
# random generation


def _grow(pset: PrimitiveSet, rng: random.Random, kind: Kind,
          need: int, cap: int) -> Node:
    # need = height still owed on this branch, cap = height still allowed
    options = [p for p in pset.producers_of(kind)
               if pset.min_height(p) <= cap and pset.max_height(p) >= need]
    if not options:
        raise ProgramKindError(f"no producer of {kind.value} fits heights [{need}, {cap}]")
    if need > 0:
        prim = rng.choice(options)
    else:
        leaves = [p for p in options if p.arity == 0]
        inner = [p for p in options if p.arity > 0]
        if leaves and (not inner or rng.random() < LEAF_PROBABILITY):
            prim = rng.choice(leaves)
        else:
            prim = rng.choice(inner)
    if prim.arity == 0:
        return Node(prim)
    carrier = -1
    if need > 1:
        deep_enough = [i for i, k in enumerate(prim.arg_kinds)
                       if max((pset.max_height(p) for p in pset.producers_of(k)), default=0)
                       >= need - 1]
        carrier = rng.choice(deep_enough)
    children = tuple(
        _grow(pset, rng, k, need - 1 if i == carrier else 0, cap - 1)
        for i, k in enumerate(prim.arg_kinds))
    return Node(prim, children)


def random_program(pset: PrimitiveSet, rng: random.Random,
                   min_height: int = 1, max_height: int = 4) -> Node:
    """Grow-style random tree with root kind Operation and height in range."""
    if not (0 <= min_height <= max_height):
        raise ValueError("need 0 <= min_height <= max_height")
    return _grow(pset, rng, pset.root_kind, min_height, max_height)


# ---------------------------------------------------------------------------
# genetic operators


def _slots(tree: Node, root_kind: Kind) -> list[tuple[tuple[int, ...], Kind, Node]]:
    """Preorder list of (path from root, declared slot kind, node)."""
    out: list[tuple[tuple[int, ...], Kind, Node]] = []
    stack: list[tuple[Node, tuple[int, ...], Kind]] = [(tree, (), root_kind)]
    while stack:
        node, path, slot = stack.pop()
        out.append((path, slot, node))
        for i in range(len(node.children) - 1, -1, -1):
            stack.append((node.children[i], path + (i,), node.prim.arg_kinds[i]))
    return out


def _replace(tree: Node, path: tuple[int, ...], subtree: Node) -> Node:
    if not path:
        return subtree
    i = path[0]
    children = tree.children[:i] + (_replace(tree.children[i], path[1:], subtree),) \
        + tree.children[i + 1:]
    return Node(tree.prim, children)


def mutate_subtree(tree: Node, pset: PrimitiveSet, rng: random.Random,
                   max_subtree_height: int = 4) -> Node:
    """Replace one uniformly chosen node with a fresh random subtree."""
    path, slot, _ = rng.choice(_slots(tree, pset.root_kind))
    return _replace(tree, path, _grow(pset, rng, slot, 0, max_subtree_height))


def crossover_subtrees(a: Node, b: Node, rng: random.Random) -> tuple[Node, Node]:
    """Swap one subtree of ``a`` with a kind-compatible subtree of ``b``.

    Compatibility is two-way: each donated subtree must fit the slot it
    lands in. When ``b`` offers no compatible node the parents come back
    unchanged.
    """
    pa, slot_a, node_a = rng.choice(_slots(a, Kind.OPERATION))
    compatible = [(pb, node_b) for pb, slot_b, node_b in _slots(b, Kind.OPERATION)
                  if is_subkind(node_b.prim.return_kind, slot_a)
                  and is_subkind(node_a.prim.return_kind, slot_b)]
    if not compatible:
        return a, b
    pb, node_b = rng.choice(compatible)
    return _replace(a, pa, node_b), _replace(b, pb, node_a)


# ---------------------------------------------------------------------------
# text form


def serialize_program(tree: Node) -> str:
    parts: list[str] = []

    def emit(node: Node) -> None:
        parts.append(node.prim.name)
        parts.append("(")
        for i, child in enumerate(node.children):
            if i:
                parts.append(", ")
            emit(child)
        parts.append(")")

    emit(tree)
    return "".join(parts)


def parse_program(text: str, pset: PrimitiveSet | None = None) -> Node:
    """Parse nested call-expression text into a kind-correct tree."""
    pset = pset or default_primitive_set()
    pos = 0
    n = len(text)

    def skip_ws() -> None:
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def fail(message: str, at: int) -> ProgramParseError:
        raise ProgramParseError(message, at)

    def expect(ch: str) -> None:
        nonlocal pos
        skip_ws()
        if pos >= n or text[pos] != ch:
            fail(f"expected {ch!r}", pos)
        pos += 1

    def parse_call(slot: Kind) -> Node:
        nonlocal pos
        skip_ws()
        start = pos
        while pos < n and (text[pos].isalnum() or text[pos] == "_"):
            pos += 1
        name = text[start:pos]
        if not name:
            fail("expected a primitive name", start)
        sig = pset.by_name.get(name)
        if sig is None:
            fail(f"unknown primitive {name!r}", start)
        if not is_subkind(sig.return_kind, slot):
            fail(f"{name} returns {sig.return_kind.value} where {slot.value} is expected",
                 start)
        expect("(")
        children: list[Node] = []
        skip_ws()
        if pos < n and text[pos] == ")":
            pos += 1
        else:
            while True:
                if len(children) == sig.arity:
                    fail(f"{name} takes {sig.arity} arguments", pos)
                children.append(parse_call(sig.arg_kinds[len(children)]))
                skip_ws()
                if pos < n and text[pos] == ",":
                    pos += 1
                    continue
                expect(")")
                break
        if len(children) != sig.arity:
            fail(f"{name} takes {sig.arity} arguments, got {len(children)}", start)
        return Node(sig, tuple(children))

    tree = parse_call(pset.root_kind)
    skip_ws()
    if pos != n:
        fail("trailing text after program", pos)
    return tree


# ---------------------------------------------------------------------------
# flat form


@dataclass(eq=False)
class FlatProgram:
    """Preorder array form: root at index 0, argument indices are local."""

    ops: np.ndarray        # (n,) int32 opcodes
    args: np.ndarray       # (n, MAX_ARITY) int32 child indices, -1 padded
    n_nodes: int


def flatten(tree: Node, pset: PrimitiveSet | None = None) -> FlatProgram:
    pset = pset or default_primitive_set()
    order: list[Node] = []
    stack = [tree]
    while stack:
        node = stack.pop()
        order.append(node)
        stack.extend(reversed(node.children))
    index = {id(node): i for i, node in enumerate(order)}
    n = len(order)
    ops = np.empty(n, dtype=np.int32)
    args = np.full((n, MAX_ARITY), -1, dtype=np.int32)
    for i, node in enumerate(order):
        ops[i] = pset.by_name[node.prim.name].opcode
        for j, child in enumerate(node.children):
            args[i, j] = index[id(child)]
    return FlatProgram(ops, args, n)


def reconstruct(flat: FlatProgram, pset: PrimitiveSet | None = None) -> Node:
    pset = pset or default_primitive_set()

    def build(i: int) -> Node:
        sig = pset.by_opcode[int(flat.ops[i])]
        children = tuple(build(int(flat.args[i, j])) for j in range(sig.arity))
        return Node(sig, children)

    return build(0)
