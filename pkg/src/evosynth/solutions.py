"""Hand-written reference programs, one per task.

These are known-good solutions used as oracles in tests and demos. Each
one solves every instance of its corpus, with two caveats baked into the
corpus generator's defaults:

  * the max_min and sorted programs key off the first training example, so
    that example must contain at least two distinct values (the generator
    guarantees it);
  * the inverse program reverses unconditionally and never looks at the
    training pairs, so it is only a full solution on corpora restricted to
    the inverted variant.
"""
from __future__ import annotations

from .tasks import TaskKind

COUNT_SOLUTION = "testing_output_write(get_testing_length_input_x())"

# first training example's output[0] tells max from min: for the min
# variant the input maximum is strictly bigger than it
MAX_MIN_SOLUTION = """\
comparison(
    bigger_thanW(input_max(), output_read()),
    testing_output_write(testing_input_min()),
    testing_output_write(testing_input_max())
)"""

# walk the input cursor to the end, then copy backwards; cursor clamping
# makes repeated passes converge instead of scrambling the buffer
INVERSE_SOLUTION = """\
prog2(
    loop(
        get_testing_length_input_x(),
        testing_input_move_right()
    ),
    loop(
        get_testing_length_input_x(),
        prog2(
            testing_output_write(testing_input_read()),
            prog2(
                testing_input_move_left(),
                testing_output_move_right()
            )
        )
    )
)"""

# one bubble pass per iteration; the second comparison reads the first
# training example's output and, once its cursor parks on a strict
# descent, re-swaps every pair, turning the ascending pass into a
# descending one
SORTED_SOLUTION = """\
prog2(
    testing_reset_output_position(),
    loop(
        get_testing_length_input_x(),
        prog2(
            prog2(
                comparison(
                    bigger_than_testing_output_next(),
                    swap_testing_output_next(),
                    testing_input_move_right()
                ),
                comparison(
                    bigger_than_output_next(),
                    swap_testing_output_next(),
                    output_move_right()
                )
            ),
            testing_output_move_right()
        )
    )
)"""

SOLUTIONS: dict[TaskKind, str] = {
    TaskKind.COUNT: COUNT_SOLUTION,
    TaskKind.MAX_MIN: MAX_MIN_SOLUTION,
    TaskKind.INVERSE: INVERSE_SOLUTION,
    TaskKind.SORTED: SORTED_SOLUTION,
}

# variant restrictions under which each solution is exact
SOLUTION_VARIANTS: dict[TaskKind, tuple[str, ...] | None] = {
    TaskKind.COUNT: None,
    TaskKind.MAX_MIN: None,
    TaskKind.INVERSE: ("inverted",),
    TaskKind.SORTED: None,
}
