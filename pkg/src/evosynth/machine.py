"""Program execution: machine state, the fast flat route, and its oracle.

Two independent routes exist on purpose. ``run_program`` drives the
compiled stack machine in ``_kernel``; ``reference_run`` is a direct
recursive walk of the tree written for clarity, and the two must agree on
output and status for every program. Population-scale scoring goes through
``accuracy_matrix``/``evaluate_population``, which pack everything into
pooled arrays once and hand contiguous program ranges to worker threads
(the kernel releases the GIL).

Semantics shared by both routes:
  * the testing output buffer has the length of the expected output and
    starts as a copy of the testing input, truncated or zero-padded;
  * cursors clamp at list ends, they never wrap or fail;
  * loop counts outside [1, 30] or loop nesting deeper than the limit set
    the error status, which halts the run and scores 0 on that instance;
  * the root runs ``budget.iterations`` times, stopping early when a pass
    leaves the state exactly as it found it (every further pass would
    replay it, so the early stop is unobservable in the result);
  * the register file is pass-internal scratch: every read is preceded by
    a write in the same construct, so it is excluded from the fixpoint
    comparison.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernel
from ._kernel import STATUS_OK as _K_OK
from .programs import FlatProgram, Node
from .tasks import Example, Instance

STATUS_OK = "ok"
STATUS_ERROR = "error"


@dataclass
class RunBudget:
    iterations: int = 200

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class RunResult:
    output: list[int]
    status: str


@dataclass
class MachineState:
    testing_input: tuple[int, ...]
    ti_cursor: int
    testing_output: list[int]
    to_cursor: int
    training: tuple[Example, ...]
    example_index: int
    train_in_cursor: int
    train_out_cursor: int
    registers: list[int] = field(default_factory=lambda: [0, 0, 0])
    inner_loop: int = 0
    status: str = STATUS_OK


def init_state(instance: Instance) -> MachineState:
    """Fresh state for one instance: cursors at 0, output copy-initialized."""
    if not instance.training:
        raise ValueError("instance needs at least one training example")
    n_out = len(instance.testing.output)
    t_in = instance.testing.input
    buffer = [t_in[i] if i < len(t_in) else 0 for i in range(n_out)]
    return MachineState(
        testing_input=t_in,
        ti_cursor=0,
        testing_output=buffer,
        to_cursor=0,
        training=instance.training,
        example_index=0,
        train_in_cursor=0,
        train_out_cursor=0,
    )


# ---------------------------------------------------------------------------
# reference route: recursive tree walk


class _Halt(Exception):
    """Raised when the machine enters the error status."""


def _ref_eval(node: Node, st: MachineState) -> int:
    """Evaluate one node; integer and boolean nodes return their value."""
    name = node.prim.name
    c = node.children

    if name == "prog2":
        _ref_eval(c[0], st)
        _ref_eval(c[1], st)
    elif name == "prog3":
        _ref_eval(c[0], st)
        _ref_eval(c[1], st)
        _ref_eval(c[2], st)
    elif name == "comparison":
        branch = c[1] if _ref_eval(c[0], st) else c[2]
        _ref_eval(branch, st)
    elif name == "loop":
        st.inner_loop += 1
        count = _ref_eval(c[0], st)
        if st.inner_loop < _kernel.LOOP_NESTING_MAX and 0 < count <= _kernel.LOOP_COUNT_MAX:
            for _ in range(count):
                _ref_eval(c[1], st)
            st.inner_loop -= 1
        else:
            st.status = STATUS_ERROR
            raise _Halt
    elif name == "no_op":
        pass

    elif name == "testing_output_write":
        st.testing_output[st.to_cursor] = _ref_eval(c[0], st)
    elif name == "testing_input_move_left":
        st.ti_cursor = max(st.ti_cursor - 1, 0)
    elif name == "testing_input_move_right":
        st.ti_cursor = min(st.ti_cursor + 1, len(st.testing_input) - 1)
    elif name == "testing_output_move_left":
        st.to_cursor = max(st.to_cursor - 1, 0)
    elif name == "testing_output_move_right":
        st.to_cursor = min(st.to_cursor + 1, len(st.testing_output) - 1)
    elif name == "testing_reset_input_position":
        st.ti_cursor = 0
    elif name == "testing_reset_output_position":
        st.to_cursor = 0
    elif name == "swap_testing_output_next":
        out, i = st.testing_output, st.to_cursor
        if i + 1 < len(out):
            out[i], out[i + 1] = out[i + 1], out[i]

    elif name == "testing_input_read":
        return st.testing_input[st.ti_cursor]
    elif name == "testing_output_read":
        return st.testing_output[st.to_cursor]
    elif name == "testing_input_min":
        return min(st.testing_input)
    elif name == "testing_input_max":
        return max(st.testing_input)
    elif name == "get_testing_length_input_x":
        return len(st.testing_input)
    elif name == "get0":
        return 0

    elif name == "input_read":
        return st.training[st.example_index].input[st.train_in_cursor]
    elif name == "output_read":
        return st.training[st.example_index].output[st.train_out_cursor]
    elif name == "input_max":
        return max(st.training[st.example_index].input)
    elif name == "input_min":
        return min(st.training[st.example_index].input)
    elif name == "output_max":
        return max(st.training[st.example_index].output)
    elif name == "output_min":
        return min(st.training[st.example_index].output)
    elif name == "input_move_left":
        st.train_in_cursor = max(st.train_in_cursor - 1, 0)
    elif name == "input_move_right":
        st.train_in_cursor = min(
            st.train_in_cursor + 1, len(st.training[st.example_index].input) - 1)
    elif name == "output_move_left":
        st.train_out_cursor = max(st.train_out_cursor - 1, 0)
    elif name == "output_move_right":
        st.train_out_cursor = min(
            st.train_out_cursor + 1, len(st.training[st.example_index].output) - 1)
    elif name == "training_next_example":
        st.example_index = (st.example_index + 1) % len(st.training)
        st.train_in_cursor = 0
        st.train_out_cursor = 0
    elif name == "training_reset":
        st.example_index = 0
        st.train_in_cursor = 0
        st.train_out_cursor = 0

    elif name == "bigger_thanW" or name == "bigger_thanR":
        return 1 if _ref_eval(c[0], st) > _ref_eval(c[1], st) else 0
    elif name == "equalR":
        return 1 if _ref_eval(c[0], st) == _ref_eval(c[1], st) else 0
    elif name == "bigger_than_testing_output_next":
        out, i = st.testing_output, st.to_cursor
        return 1 if (i + 1 < len(out) and out[i] > out[i + 1]) else 0
    elif name == "bigger_than_output_next":
        out = st.training[st.example_index].output
        i = st.train_out_cursor
        return 1 if (i + 1 < len(out) and out[i] > out[i + 1]) else 0
    elif name == "bigger_than_input_next":
        inp = st.training[st.example_index].input
        i = st.train_in_cursor
        return 1 if (i + 1 < len(inp) and inp[i] > inp[i + 1]) else 0

    else:
        st.status = STATUS_ERROR
        raise _Halt
    return 0


def _ref_snapshot(st: MachineState) -> tuple:
    return (st.ti_cursor, st.to_cursor, st.example_index,
            st.train_in_cursor, st.train_out_cursor, tuple(st.testing_output))


def reference_run(tree: Node, state: MachineState, budget: RunBudget) -> RunResult:
    """Oracle for run_program: same semantics, plain recursive evaluation."""
    for _ in range(budget.iterations):
        before = _ref_snapshot(state)
        try:
            _ref_eval(tree, state)
        except _Halt:
            break
        if _ref_snapshot(state) == before:
            break
    return RunResult(list(state.testing_output), state.status)


def reference_fitness(tree: Node, instances: Sequence[Instance],
                      budget: RunBudget) -> float:
    if not instances:
        raise ValueError("need at least one instance")
    total = 0.0
    for inst in instances:
        result = reference_run(tree, init_state(inst), budget)
        total += accuracy(result, inst.testing.output)
    return total / len(instances)


# ---------------------------------------------------------------------------
# flat route: pooled arrays + compiled kernel


def _as_i32(values) -> np.ndarray:
    return np.asarray(list(values), dtype=np.int32)


@dataclass(eq=False)
class InstancePack:
    """Instances flattened into int32 pools for the kernel."""

    ti_pool: np.ndarray
    ti_off: np.ndarray
    ti_len: np.ndarray
    te_pool: np.ndarray
    te_off: np.ndarray
    te_len: np.ndarray
    tr_first: np.ndarray
    tr_count: np.ndarray
    tin_pool: np.ndarray
    tin_off: np.ndarray
    tin_len: np.ndarray
    tout_pool: np.ndarray
    tout_off: np.ndarray
    tout_len: np.ndarray
    n_instances: int
    max_out_len: int


def _pack_lists(lists: list[Sequence[int]]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lens = _as_i32(len(x) for x in lists)
    offs = np.zeros(len(lists), dtype=np.int32)
    if len(lists) > 1:
        offs[1:] = np.cumsum(lens)[:-1]
    pool = _as_i32(v for x in lists for v in x)
    return pool, offs, lens


def pack_instances(instances: Sequence[Instance]) -> InstancePack:
    if not instances:
        raise ValueError("need at least one instance")
    ti_pool, ti_off, ti_len = _pack_lists([i.testing.input for i in instances])
    te_pool, te_off, te_len = _pack_lists([i.testing.output for i in instances])
    tr_count = _as_i32(len(i.training) for i in instances)
    tr_first = np.zeros(len(instances), dtype=np.int32)
    if len(instances) > 1:
        tr_first[1:] = np.cumsum(tr_count)[:-1]
    all_train = [ex for i in instances for ex in i.training]
    tin_pool, tin_off, tin_len = _pack_lists([ex.input for ex in all_train])
    tout_pool, tout_off, tout_len = _pack_lists([ex.output for ex in all_train])
    return InstancePack(
        ti_pool, ti_off, ti_len, te_pool, te_off, te_len,
        tr_first, tr_count, tin_pool, tin_off, tin_len,
        tout_pool, tout_off, tout_len,
        n_instances=len(instances),
        max_out_len=int(te_len.max()),
    )


@dataclass(eq=False)
class ProgramPack:
    pops: np.ndarray
    pargs: np.ndarray
    p_off: np.ndarray
    p_len: np.ndarray


def pack_programs(flats: Sequence[FlatProgram]) -> ProgramPack:
    p_len = _as_i32(f.n_nodes for f in flats)
    p_off = np.zeros(len(flats), dtype=np.int32)
    if len(flats) > 1:
        p_off[1:] = np.cumsum(p_len)[:-1]
    total = int(p_len.sum())
    pops = np.empty(total, dtype=np.int32)
    pargs = np.empty((total, 3), dtype=np.int32)
    for f, off in zip(flats, p_off):
        pops[off:off + f.n_nodes] = f.ops
        pargs[off:off + f.n_nodes] = f.args
    return ProgramPack(pops, pargs, p_off, p_len)


def run_program(flat: FlatProgram, state: MachineState, budget: RunBudget) -> RunResult:
    """Execute one flat program on the stack machine, mutating ``state``."""
    if state.status != STATUS_OK or state.ti_cursor or state.to_cursor \
            or state.example_index or state.train_in_cursor or state.train_out_cursor:
        raise ValueError("run_program expects a freshly initialized state")
    tin_pool, tin_off, tin_len = _pack_lists([ex.input for ex in state.training])
    tout_pool, tout_off, tout_len = _pack_lists([ex.output for ex in state.training])
    n = flat.n_nodes
    out_n = len(state.testing_output)
    cap = 31 * (n + 2) + 64
    out_buf = np.empty(max(out_n, 1), dtype=np.int32)
    snap_buf = np.empty(max(out_n, 1), dtype=np.int32)
    state_out = np.empty(_kernel.STATE_LEN, dtype=np.int32)
    status = _kernel._exec(
        flat.ops, flat.args, 0, n,
        _as_i32(state.testing_input), 0, len(state.testing_input),
        tin_pool, tin_off, tin_len,
        tout_pool, tout_off, tout_len,
        0, len(state.training),
        out_n, budget.iterations,
        out_buf, snap_buf,
        np.empty(cap, dtype=np.int32), np.empty(cap, dtype=np.int32),
        state_out)
    state.testing_output[:] = out_buf[:out_n].tolist()
    state.ti_cursor = int(state_out[_kernel.STATE_TI])
    state.to_cursor = int(state_out[_kernel.STATE_TO])
    state.example_index = int(state_out[_kernel.STATE_EX])
    state.train_in_cursor = int(state_out[_kernel.STATE_WI])
    state.train_out_cursor = int(state_out[_kernel.STATE_WO])
    state.registers[0] = int(state_out[_kernel.STATE_REG])
    state.inner_loop = int(state_out[_kernel.STATE_INNER])
    state.status = STATUS_OK if status == _K_OK else STATUS_ERROR
    return RunResult(list(state.testing_output), state.status)


def accuracy(result: RunResult, expected: Sequence[int]) -> float:
    """Fraction of positions matched; an error run scores 0."""
    if result.status != STATUS_OK:
        return 0.0
    if len(result.output) != len(expected):
        raise ValueError("output and expected lengths differ")
    matched = sum(1 for a, b in zip(result.output, expected) if a == b)
    return matched / len(expected)


def _worker_ranges(n: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, n))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [(int(bounds[k]), int(bounds[k + 1]))
            for k in range(workers) if bounds[k] < bounds[k + 1]]


def accuracy_matrix(flats: Sequence[FlatProgram],
                    instances: Sequence[Instance] | InstancePack,
                    budget: RunBudget | None = None,
                    workers: int = 1) -> np.ndarray:
    """(n_programs, n_instances) accuracies, identical for any workers value."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    budget = budget or RunBudget()
    pack = instances if isinstance(instances, InstancePack) else pack_instances(instances)
    acc = np.zeros((len(flats), pack.n_instances), dtype=np.float64)
    if not flats:
        return acc
    pp = pack_programs(flats)

    def run_range(lo: int, hi: int) -> None:
        _kernel.eval_batch(pp.pops, pp.pargs, pp.p_off, pp.p_len,
                           pack.ti_pool, pack.ti_off, pack.ti_len,
                           pack.te_pool, pack.te_off, pack.te_len,
                           pack.tr_first, pack.tr_count,
                           pack.tin_pool, pack.tin_off, pack.tin_len,
                           pack.tout_pool, pack.tout_off, pack.tout_len,
                           pack.max_out_len, budget.iterations, lo, hi, acc)

    ranges = _worker_ranges(len(flats), workers)
    if len(ranges) == 1:
        run_range(*ranges[0])
    else:
        threads = [threading.Thread(target=run_range, args=r) for r in ranges]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    return acc


def evaluate_population(flats: Sequence[FlatProgram],
                        instances: Sequence[Instance] | InstancePack,
                        budget: RunBudget | None = None,
                        workers: int = 1) -> list[float]:
    """Mean testing accuracy of each program across the instances."""
    if not flats:
        return []
    return accuracy_matrix(flats, instances, budget, workers).mean(axis=1).tolist()


def fitness(flat: FlatProgram, instances: Sequence[Instance] | InstancePack,
            budget: RunBudget | None = None) -> float:
    return evaluate_population([flat], instances, budget)[0]


def instance_accuracies(flat: FlatProgram,
                        instances: Sequence[Instance] | InstancePack,
                        budget: RunBudget | None = None) -> np.ndarray:
    return accuracy_matrix([flat], instances, budget)[0]
