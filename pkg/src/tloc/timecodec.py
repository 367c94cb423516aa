"""Relative time tokens.

A video of ``length`` seconds is covered by ``steps`` evenly spaced tokens
``1..steps``; token 1 sits at 0 s and token ``steps`` at the final instant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import IndexOutOfRange, InvalidGrid, NonFiniteTimestamp

DEFAULT_STEPS = 100


def round_half_away(x: float) -> int:
    """Round to the nearest integer, ties away from zero (27.5 -> 28, -0.5 -> -1).

    Python's ``round`` is banker's rounding, which would make 27.5 -> 28 but
    26.5 -> 26.
    """
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class TimeGrid:
    length: float
    steps: int = DEFAULT_STEPS

    def __post_init__(self) -> None:
        if isinstance(self.steps, bool) or not isinstance(self.steps, int) or self.steps < 2:
            raise InvalidGrid(f"steps must be an integer >= 2, got {self.steps!r}")
        if not (isinstance(self.length, (int, float)) and math.isfinite(self.length) and self.length > 0):
            raise InvalidGrid(f"length must be finite and > 0, got {self.length!r}")

    @property
    def step_seconds(self) -> float:
        return self.length / (self.steps - 1)


def encode_time(tau: float, grid: TimeGrid) -> int:
    """Map a timestamp in seconds to its nearest time-token index.

    ``tau`` is clamped into ``[0, grid.length]`` first, so the result is
    always in ``[1, grid.steps]``.
    """
    if not math.isfinite(tau):
        raise NonFiniteTimestamp(f"timestamp must be finite, got {tau!r}")
    tau = min(max(float(tau), 0.0), grid.length)
    return round_half_away(tau * (grid.steps - 1) / grid.length) + 1


def decode_time(t: int, grid: TimeGrid) -> float:
    if not 1 <= t <= grid.steps:
        raise IndexOutOfRange(f"time token {t} outside [1, {grid.steps}]")
    return grid.length * (t - 1) / (grid.steps - 1)


def max_discretization_error(grid: TimeGrid) -> float:
    """Worst-case ``|decode(encode(tau)) - tau|`` over ``tau`` in ``[0, length]``."""
    return grid.length / (2 * (grid.steps - 1))
