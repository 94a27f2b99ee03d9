"""Execution semantics, checked through both routes on every case.

Expected buffers are derived by hand in the comments; the compiled kernel
and the recursive walker must both produce them, which keeps the two
implementations pinned to each other as well as to the semantics.
"""
import random

import pytest

from evosynth import (Example, Instance, RunBudget, TaskKind, accuracy,
                      accuracy_matrix, default_primitive_set, flatten,
                      generate_corpus, init_state, instance_accuracies,
                      parse_program, random_program, reference_run,
                      run_program)
from evosynth.machine import STATUS_ERROR, STATUS_OK

pset = default_primitive_set()
BUDGET = RunBudget()


def make_instance(train_pairs, test_in, test_out):
    training = tuple(Example(tuple(i), tuple(o)) for i, o in train_pairs)
    return Instance(training, Example(tuple(test_in), tuple(test_out)), "none")


INST = make_instance([([2, 7], [7, 2]), ([5, 1, 9], [9, 1, 5])],
                     [3, 1, 4], [4, 1, 3])


def both(text, inst=INST, iterations=200):
    """Run text through kernel and walker, assert agreement, return result."""
    tree = parse_program(text)
    budget = RunBudget(iterations=iterations)
    fast = run_program(flatten(tree), init_state(inst), budget)
    slow = reference_run(tree, init_state(inst), budget)
    assert (fast.status, fast.output) == (slow.status, slow.output)
    return fast


# ---------------------------------------------------------------------------
# output buffer initialisation


def test_buffer_starts_as_copy_of_input():
    # no_op leaves the copy-initialised buffer untouched
    assert both("no_op()").output == [3, 1, 4]


def test_buffer_truncated_to_expected_length():
    inst = make_instance([([1, 2], [2])], [7, 8, 9], [9])
    assert both("no_op()", inst).output == [7]


def test_buffer_zero_padded_to_expected_length():
    inst = make_instance([([1], [1, 0, 0])], [5], [5, 0, 0])
    assert both("no_op()", inst).output == [5, 0, 0]


# ---------------------------------------------------------------------------
# writes, cursor moves, clamping


def test_write_at_cursor():
    # write 0 at position 0: [3,1,4] -> [0,1,4]
    assert both("testing_output_write(get0())").output == [0, 1, 4]


def test_cursor_clamps_at_left_edge():
    # move left from 0 stays at 0, so the read is input[0] = 3
    text = ("prog2(testing_input_move_left(), "
            "testing_output_write(testing_input_read()))")
    assert both(text).output == [3, 1, 4]


def test_cursor_clamps_at_right_edge():
    # three rights over length 3 clamp at 2; write input[2]=4 at output[0]
    text = ("prog2(prog3(testing_input_move_right(), testing_input_move_right(), "
            "testing_input_move_right()), "
            "testing_output_write(testing_input_read()))")
    assert both(text).output == [4, 1, 4]


def test_swap_exchanges_neighbours():
    # single pass: [3,1,4] -> [1,3,4]
    assert both("swap_testing_output_next()", iterations=1).output == [1, 3, 4]


def test_swap_at_last_position_is_noop():
    text = ("prog3(testing_output_move_right(), testing_output_move_right(), "
            "swap_testing_output_next())")
    assert both(text).output == [3, 1, 4]


def test_root_runs_exactly_iterations_times():
    # a bare swap never reaches a fixpoint; parity of the pass count shows
    assert both("swap_testing_output_next()", iterations=2).output == [3, 1, 4]
    assert both("swap_testing_output_next()", iterations=3).output == [1, 3, 4]
    assert both("swap_testing_output_next()", iterations=200).output == [3, 1, 4]


def test_fixpoint_stops_early():
    # pass 1 changes nothing, so the run must stop regardless of budget
    result = both("no_op()", iterations=200)
    assert result.status == STATUS_OK


# ---------------------------------------------------------------------------
# loops


def test_loop_repeats_body_count_times():
    # cursor moves right len(input)=3 times, clamped at 2; write 0 there
    text = ("prog2(loop(get_testing_length_input_x(), testing_output_move_right()), "
            "testing_output_write(get0()))")
    assert both(text).output == [3, 1, 0]


def test_loop_count_zero_is_an_error():
    result = both("loop(get0(), testing_output_move_right())")
    assert result.status == STATUS_ERROR


def test_two_nested_loops_allowed():
    text = ("loop(get_testing_length_input_x(), "
            "loop(get_testing_length_input_x(), testing_output_move_right()))")
    assert both(text).status == STATUS_OK


def test_third_nested_loop_is_an_error():
    text = ("loop(get_testing_length_input_x(), "
            "loop(get_testing_length_input_x(), "
            "loop(get_testing_length_input_x(), testing_output_move_right())))")
    assert both(text).status == STATUS_ERROR


def test_sequential_loops_do_not_count_as_nesting():
    text = ("prog2("
            "loop(get_testing_length_input_x(), "
            "loop(get_testing_length_input_x(), testing_input_move_right())), "
            "loop(get_testing_length_input_x(), "
            "loop(get_testing_length_input_x(), testing_output_move_right())))")
    assert both(text).status == STATUS_OK


# ---------------------------------------------------------------------------
# conditionals


def test_comparison_takes_true_branch():
    # max 4 > min 1: write max at position 0
    text = ("comparison(bigger_thanR(testing_input_max(), testing_input_min()), "
            "testing_output_write(testing_input_max()), "
            "testing_output_write(testing_input_min()))")
    assert both(text).output == [4, 1, 4]


def test_comparison_takes_false_branch():
    text = ("comparison(bigger_thanR(testing_input_min(), testing_input_max()), "
            "testing_output_write(testing_input_max()), "
            "testing_output_write(testing_input_min()))")
    assert both(text).output == [1, 1, 4]


def test_equalR():
    text = ("comparison(equalR(get0(), get0()), "
            "testing_output_write(testing_input_max()), no_op())")
    assert both(text).output == [4, 1, 4]


def test_neighbour_compare_at_last_position_is_false():
    # output cursor parked at the end: comparison must pick the else branch
    text = ("prog3(testing_output_move_right(), testing_output_move_right(), "
            "comparison(bigger_than_testing_output_next(), "
            "testing_output_write(get0()), no_op()))")
    assert both(text).output == [3, 1, 4]


# ---------------------------------------------------------------------------
# training side
#
# W-integers only feed bigger_thanW, so training reads are observed through
# which comparison branch runs. On INST: example 0 is [2,7]->[7,2], example 1
# is [5,1,9]->[9,1,5]. The probe condition input_read() > input_min() is
# False on a fresh example 0 (2 > 2) and True on a fresh example 1 (5 > 1).

PROBE = ("comparison(bigger_thanW(input_read(), input_min()), "
         "testing_output_write(get0()), no_op())")
UNTOUCHED = [3, 1, 4]
MARKED = [0, 1, 4]


def test_training_read_defaults_to_first_example():
    assert both(PROBE).output == UNTOUCHED


def test_training_cursor_moves():
    # example 0 after one right: read 7 > min 2
    assert both(f"prog2(input_move_right(), {PROBE})").output == MARKED


def test_training_next_example_switches_and_wraps():
    text = f"prog2(training_next_example(), {PROBE})"
    assert both(text).output == MARKED
    text = ("prog3(training_next_example(), training_next_example(), "
            f"{PROBE})")
    assert both(text).output == UNTOUCHED


def test_training_next_example_resets_cursors():
    # a surviving cursor would read example 1 position 1 (1 > 1, False)
    text = f"prog3(input_move_right(), training_next_example(), {PROBE})"
    assert both(text).output == MARKED


def test_training_reset_returns_to_first_example():
    text = f"prog3(training_next_example(), training_reset(), {PROBE})"
    assert both(text).output == UNTOUCHED


def test_training_reset_clears_cursors():
    text = f"prog3(input_move_right(), training_reset(), {PROBE})"
    assert both(text).output == UNTOUCHED


def test_training_aggregates():
    # example 0 output [7,2]: max 7 > min 2
    text = ("comparison(bigger_thanW(output_max(), output_min()), "
            "testing_output_write(testing_input_max()), no_op())")
    assert both(text).output == [4, 1, 4]
    text = ("comparison(bigger_thanW(output_min(), output_max()), "
            "no_op(), testing_output_write(testing_input_max()))")
    assert both(text).output == [4, 1, 4]


def test_training_neighbour_compare():
    # training output [7, 2]: 7 > 2 at cursor 0
    text = ("comparison(bigger_than_output_next(), "
            "testing_output_write(get0()), no_op())")
    assert both(text).output == [0, 1, 4]


# ---------------------------------------------------------------------------
# scoring


def test_accuracy_counts_matching_positions():
    from evosynth.machine import RunResult
    assert accuracy(RunResult([4, 1, 3], STATUS_OK), [4, 1, 3]) == 1.0
    assert accuracy(RunResult([4, 0, 3], STATUS_OK), [4, 1, 3]) == pytest.approx(2 / 3)


def test_accuracy_is_zero_on_error_status():
    from evosynth.machine import RunResult
    assert accuracy(RunResult([4, 1, 3], STATUS_ERROR), [4, 1, 3]) == 0.0


def test_accuracy_rejects_length_mismatch():
    from evosynth.machine import RunResult
    with pytest.raises(ValueError):
        accuracy(RunResult([1, 2], STATUS_OK), [1, 2, 3])


def test_run_program_requires_fresh_state():
    tree = parse_program("testing_input_move_right()")
    state = init_state(INST)
    run_program(flatten(tree), state, BUDGET)
    with pytest.raises(ValueError):
        run_program(flatten(tree), state, BUDGET)


# ---------------------------------------------------------------------------
# batch evaluation


@pytest.fixture(scope="module")
def mixed_instances():
    out = []
    for task in TaskKind:
        out += list(generate_corpus(task, 5, 0, seed=17).train_instances)
    return out


def test_accuracy_matrix_worker_invariance(mixed_instances):
    rng = random.Random(23)
    flats = [flatten(random_program(pset, rng)) for _ in range(60)]
    base = accuracy_matrix(flats, mixed_instances, BUDGET, workers=1)
    for workers in (2, 3, 7):
        alt = accuracy_matrix(flats, mixed_instances, BUDGET, workers=workers)
        assert (alt == base).all()


def test_instance_accuracies_matches_single_runs(mixed_instances):
    tree = parse_program("testing_output_write(get_testing_length_input_x())")
    flat = flatten(tree)
    per = instance_accuracies(flat, mixed_instances, BUDGET)
    for inst, got in zip(mixed_instances, per):
        result = run_program(flat, init_state(inst), BUDGET)
        assert got == accuracy(result, inst.testing.output)


# ---------------------------------------------------------------------------
# dual-route agreement on random programs (the acceptance gate runs 10k+)


def test_differential_sample(mixed_instances):
    rng = random.Random(5)
    mismatches = 0
    for _ in range(150):
        tree = random_program(pset, rng, max_height=5)
        flat = flatten(tree)
        for inst in rng.sample(mixed_instances, 4):
            fast = run_program(flat, init_state(inst), BUDGET)
            slow = reference_run(tree, init_state(inst), BUDGET)
            mismatches += (fast.status, fast.output) != (slow.status, slow.output)
    assert mismatches == 0
