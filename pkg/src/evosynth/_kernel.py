"""Compiled batch executor for flat programs.

One work stack, one opcode switch. Each stack entry is a (node, case) pair;
a node is usually dispatched under its own opcode, but loops and
conditionals push follow-up entries under private case ids so that loop
admission, loop exit, and branch selection happen after the count/condition
value has landed in the register.

Programs and instances arrive as pooled int32 arrays so a whole population
can be evaluated without touching Python objects. Everything here is
serial and nogil: callers get parallelism by running disjoint program
ranges on plain threads.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .programs import OPCODES

N_OPCODES = len(OPCODES)

_PROG2 = OPCODES["prog2"]
_PROG3 = OPCODES["prog3"]
_COMPARISON = OPCODES["comparison"]
_LOOP = OPCODES["loop"]
_NO_OP = OPCODES["no_op"]
_T_IN_READ = OPCODES["testing_input_read"]
_T_OUT_READ = OPCODES["testing_output_read"]
_T_IN_MIN = OPCODES["testing_input_min"]
_T_IN_MAX = OPCODES["testing_input_max"]
_T_LEN = OPCODES["get_testing_length_input_x"]
_GET0 = OPCODES["get0"]
_T_OUT_WRITE = OPCODES["testing_output_write"]
_T_IN_LEFT = OPCODES["testing_input_move_left"]
_T_IN_RIGHT = OPCODES["testing_input_move_right"]
_T_OUT_LEFT = OPCODES["testing_output_move_left"]
_T_OUT_RIGHT = OPCODES["testing_output_move_right"]
_T_RESET_IN = OPCODES["testing_reset_input_position"]
_T_RESET_OUT = OPCODES["testing_reset_output_position"]
_T_SWAP_NEXT = OPCODES["swap_testing_output_next"]
_W_IN_READ = OPCODES["input_read"]
_W_OUT_READ = OPCODES["output_read"]
_W_IN_MAX = OPCODES["input_max"]
_W_IN_MIN = OPCODES["input_min"]
_W_OUT_MAX = OPCODES["output_max"]
_W_OUT_MIN = OPCODES["output_min"]
_W_IN_LEFT = OPCODES["input_move_left"]
_W_IN_RIGHT = OPCODES["input_move_right"]
_W_OUT_LEFT = OPCODES["output_move_left"]
_W_OUT_RIGHT = OPCODES["output_move_right"]
_W_NEXT = OPCODES["training_next_example"]
_W_RESET = OPCODES["training_reset"]
_BT_W = OPCODES["bigger_thanW"]
_BT_R = OPCODES["bigger_thanR"]
_EQ_R = OPCODES["equalR"]
_BT_T_OUT_NEXT = OPCODES["bigger_than_testing_output_next"]
_BT_OUT_NEXT = OPCODES["bigger_than_output_next"]
_BT_IN_NEXT = OPCODES["bigger_than_input_next"]

# follow-up cases used by loop and comparison
_CASE_LOOP_ADMIT = N_OPCODES
_CASE_LOOP_EXIT = N_OPCODES + 1
_CASE_BRANCH = N_OPCODES + 2

LOOP_COUNT_MAX = 30
LOOP_NESTING_MAX = 3

STATUS_OK = 0
STATUS_ERROR = -1

# layout of the state_out array filled by _exec
STATE_TI = 0
STATE_TO = 1
STATE_EX = 2
STATE_WI = 3
STATE_WO = 4
STATE_REG = 5
STATE_INNER = 6
STATE_PASSES = 7
STATE_LEN = 8


@njit(cache=True, nogil=True)
def _is_int_leaf(op):
    return (_T_IN_READ <= op <= _GET0) or (_W_IN_READ <= op <= _W_OUT_MIN)


@njit(cache=True, nogil=True)
def _leaf_value(op, ti_pool, ti_base, ti_n, ti,
                out_buf, out_n, to,
                tin_pool, tib, tin_n, wi,
                tout_pool, tob, ton, wo):
    if op == _T_IN_READ:
        return np.int64(ti_pool[ti_base + ti])
    if op == _T_OUT_READ:
        return np.int64(out_buf[to])
    if op == _T_IN_MIN or op == _T_IN_MAX:
        m = np.int64(ti_pool[ti_base])
        for k in range(1, ti_n):
            v = np.int64(ti_pool[ti_base + k])
            if (op == _T_IN_MIN and v < m) or (op == _T_IN_MAX and v > m):
                m = v
        return m
    if op == _T_LEN:
        return np.int64(ti_n)
    if op == _GET0:
        return np.int64(0)
    if op == _W_IN_READ:
        return np.int64(tin_pool[tib + wi])
    if op == _W_OUT_READ:
        return np.int64(tout_pool[tob + wo])
    if op == _W_IN_MAX or op == _W_IN_MIN:
        m = np.int64(tin_pool[tib])
        for k in range(1, tin_n):
            v = np.int64(tin_pool[tib + k])
            if (op == _W_IN_MIN and v < m) or (op == _W_IN_MAX and v > m):
                m = v
        return m
    # op is _W_OUT_MAX or _W_OUT_MIN; callers check _is_int_leaf first
    m = np.int64(tout_pool[tob])
    for k in range(1, ton):
        v = np.int64(tout_pool[tob + k])
        if (op == _W_OUT_MIN and v < m) or (op == _W_OUT_MAX and v > m):
            m = v
    return m


@njit(cache=True, nogil=True)
def _exec(pops, pargs, pbase, n,
          ti_pool, ti_base, ti_n,
          tin_pool, tin_off, tin_len,
          tout_pool, tout_off, tout_len,
          tr_base, tr_n,
          out_n, iterations,
          out_buf, snap_buf, stack_node, stack_case,
          state_out):
    """Run one flat program against one instance.

    The root is re-dispatched ``iterations`` times; a pass that leaves the
    whole machine state unchanged ends the run early, since every later
    pass would replay it exactly. Returns STATUS_OK or STATUS_ERROR and
    fills ``out_buf[:out_n]`` plus ``state_out``.
    """
    ti = 0
    to = 0
    ex = 0
    wi = 0
    wo = 0
    reg = np.int64(0)
    inner = 0
    status = STATUS_OK
    passes = 0

    j = tr_base
    tib = tin_off[j]
    tin_n = tin_len[j]
    tob = tout_off[j]
    ton = tout_len[j]

    for k in range(out_n):
        out_buf[k] = ti_pool[ti_base + k] if k < ti_n else 0

    cap = stack_node.shape[0]
    steps = np.int64(0)
    step_cap = np.int64(iterations) * np.int64(29791) * np.int64(n)
    root_op = pops[pbase]

    for _pass in range(iterations):
        passes += 1
        s_ti = ti
        s_to = to
        s_ex = ex
        s_wi = wi
        s_wo = wo
        for k in range(out_n):
            snap_buf[k] = out_buf[k]

        stack_node[0] = 0
        stack_case[0] = root_op
        sp = 1
        while sp > 0 and status == STATUS_OK:
            sp -= 1
            node = stack_node[sp]
            case = stack_case[sp]
            steps += 1
            # legal executions stay far inside both bounds; tripping one
            # means a malformed program, so fail rather than run away
            if steps > step_cap or sp + 32 > cap:
                status = STATUS_ERROR
                break

            if case == _T_OUT_RIGHT:
                if to + 1 < out_n:
                    to += 1
            elif case == _T_OUT_LEFT:
                if to > 0:
                    to -= 1
            elif case == _T_IN_RIGHT:
                if ti + 1 < ti_n:
                    ti += 1
            elif case == _T_IN_LEFT:
                if ti > 0:
                    ti -= 1
            elif case == _T_OUT_WRITE:
                a0 = pargs[pbase + node, 0]
                cop = pops[pbase + a0]
                if _is_int_leaf(cop):
                    reg = _leaf_value(cop, ti_pool, ti_base, ti_n, ti,
                                      out_buf, out_n, to,
                                      tin_pool, tib, tin_n, wi,
                                      tout_pool, tob, ton, wo)
                    out_buf[to] = reg
                else:
                    status = STATUS_ERROR
            elif case == _T_SWAP_NEXT:
                if to + 1 < out_n:
                    tmp = out_buf[to]
                    out_buf[to] = out_buf[to + 1]
                    out_buf[to + 1] = tmp
            elif case == _PROG2:
                stack_node[sp] = pargs[pbase + node, 1]
                stack_case[sp] = pops[pbase + stack_node[sp]]
                sp += 1
                stack_node[sp] = pargs[pbase + node, 0]
                stack_case[sp] = pops[pbase + stack_node[sp]]
                sp += 1
            elif case == _PROG3:
                for k in range(2, -1, -1):
                    stack_node[sp] = pargs[pbase + node, k]
                    stack_case[sp] = pops[pbase + stack_node[sp]]
                    sp += 1
            elif case == _COMPARISON:
                stack_node[sp] = node
                stack_case[sp] = _CASE_BRANCH
                sp += 1
                a0 = pargs[pbase + node, 0]
                stack_node[sp] = a0
                stack_case[sp] = pops[pbase + a0]
                sp += 1
            elif case == _CASE_BRANCH:
                pick = 1 if reg != 0 else 2
                chosen = pargs[pbase + node, pick]
                stack_node[sp] = chosen
                stack_case[sp] = pops[pbase + chosen]
                sp += 1
            elif case == _LOOP:
                inner += 1
                stack_node[sp] = pargs[pbase + node, 1]
                stack_case[sp] = _CASE_LOOP_ADMIT
                sp += 1
                a0 = pargs[pbase + node, 0]
                stack_node[sp] = a0
                stack_case[sp] = pops[pbase + a0]
                sp += 1
            elif case == _CASE_LOOP_ADMIT:
                if inner < LOOP_NESTING_MAX and reg > 0 and reg <= LOOP_COUNT_MAX:
                    stack_node[sp] = node
                    stack_case[sp] = _CASE_LOOP_EXIT
                    sp += 1
                    body_op = pops[pbase + node]
                    for _ in range(reg):
                        stack_node[sp] = node
                        stack_case[sp] = body_op
                        sp += 1
                else:
                    status = STATUS_ERROR
            elif case == _CASE_LOOP_EXIT:
                inner -= 1
            elif _is_int_leaf(case):
                reg = _leaf_value(case, ti_pool, ti_base, ti_n, ti,
                                  out_buf, out_n, to,
                                  tin_pool, tib, tin_n, wi,
                                  tout_pool, tob, ton, wo)
            elif case == _BT_W or case == _BT_R or case == _EQ_R:
                a0 = pargs[pbase + node, 0]
                a1 = pargs[pbase + node, 1]
                op0 = pops[pbase + a0]
                op1 = pops[pbase + a1]
                if _is_int_leaf(op0) and _is_int_leaf(op1):
                    va = _leaf_value(op0, ti_pool, ti_base, ti_n, ti,
                                     out_buf, out_n, to,
                                     tin_pool, tib, tin_n, wi,
                                     tout_pool, tob, ton, wo)
                    vb = _leaf_value(op1, ti_pool, ti_base, ti_n, ti,
                                     out_buf, out_n, to,
                                     tin_pool, tib, tin_n, wi,
                                     tout_pool, tob, ton, wo)
                    if case == _EQ_R:
                        reg = 1 if va == vb else 0
                    else:
                        reg = 1 if va > vb else 0
                else:
                    status = STATUS_ERROR
            elif case == _BT_T_OUT_NEXT:
                reg = 1 if (to + 1 < out_n and out_buf[to] > out_buf[to + 1]) else 0
            elif case == _BT_OUT_NEXT:
                reg = 1 if (wo + 1 < ton
                            and tout_pool[tob + wo] > tout_pool[tob + wo + 1]) else 0
            elif case == _BT_IN_NEXT:
                reg = 1 if (wi + 1 < tin_n
                            and tin_pool[tib + wi] > tin_pool[tib + wi + 1]) else 0
            elif case == _W_IN_RIGHT:
                if wi + 1 < tin_n:
                    wi += 1
            elif case == _W_IN_LEFT:
                if wi > 0:
                    wi -= 1
            elif case == _W_OUT_RIGHT:
                if wo + 1 < ton:
                    wo += 1
            elif case == _W_OUT_LEFT:
                if wo > 0:
                    wo -= 1
            elif case == _W_NEXT or case == _W_RESET:
                ex = (ex + 1) % tr_n if case == _W_NEXT else 0
                j = tr_base + ex
                tib = tin_off[j]
                tin_n = tin_len[j]
                tob = tout_off[j]
                ton = tout_len[j]
                wi = 0
                wo = 0
            elif case == _T_RESET_IN:
                ti = 0
            elif case == _T_RESET_OUT:
                to = 0
            elif case == _NO_OP:
                pass
            else:
                status = STATUS_ERROR

        if status != STATUS_OK:
            break
        same = (ti == s_ti and to == s_to and ex == s_ex
                and wi == s_wi and wo == s_wo)
        if same:
            for k in range(out_n):
                if out_buf[k] != snap_buf[k]:
                    same = False
                    break
        if same:
            break

    state_out[STATE_TI] = ti
    state_out[STATE_TO] = to
    state_out[STATE_EX] = ex
    state_out[STATE_WI] = wi
    state_out[STATE_WO] = wo
    state_out[STATE_REG] = reg
    state_out[STATE_INNER] = inner
    state_out[STATE_PASSES] = passes
    return status


@njit(cache=True, nogil=True)
def eval_batch(pops, pargs, p_off, p_len,
               ti_pool, ti_off, ti_len,
               te_pool, te_off, te_len,
               tr_first, tr_count,
               tin_pool, tin_off, tin_len,
               tout_pool, tout_off, tout_len,
               max_out, iterations, lo, hi, acc):
    """Fill acc[p, i] with the accuracy of program p on instance i.

    A run that ends with an error scores 0 on that instance. Rows are
    written independently, so disjoint [lo, hi) ranges may execute
    concurrently on the same acc array.
    """
    n_inst = ti_off.shape[0]
    state_out = np.empty(STATE_LEN, dtype=np.int32)
    for p in range(lo, hi):
        n = p_len[p]
        pbase = p_off[p]
        cap = 31 * (n + 2) + 64
        stack_node = np.empty(cap, dtype=np.int32)
        stack_case = np.empty(cap, dtype=np.int32)
        out_buf = np.empty(max_out, dtype=np.int32)
        snap_buf = np.empty(max_out, dtype=np.int32)
        for i in range(n_inst):
            out_n = te_len[i]
            status = _exec(pops, pargs, pbase, n,
                           ti_pool, ti_off[i], ti_len[i],
                           tin_pool, tin_off, tin_len,
                           tout_pool, tout_off, tout_len,
                           tr_first[i], tr_count[i],
                           out_n, iterations,
                           out_buf, snap_buf, stack_node, stack_case,
                           state_out)
            if status == STATUS_OK:
                m = 0
                eb = te_off[i]
                for k in range(out_n):
                    if out_buf[k] == te_pool[eb + k]:
                        m += 1
                acc[p, i] = m / out_n
            else:
                acc[p, i] = 0.0
