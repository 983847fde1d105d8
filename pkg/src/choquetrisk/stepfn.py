"""Right-continuous step functions, distribution and quantile functions."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from .capacity import Capacity
from .errors import InvalidValue, SpaceMismatch
from .space import Position
from .types import FloatArray


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant non-decreasing function.

    ``values[0]`` holds below ``breakpoints[0]`` and ``values[j]`` holds between
    ``breakpoints[j-1]`` and ``breakpoints[j]``. With ``right_continuous`` the
    pieces are ``[t_j, t_{j+1})``; otherwise ``(t_j, t_{j+1}]``.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    right_continuous: bool = True

    def __post_init__(self) -> None:
        bps = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)
        if len(vals) != len(bps) + 1:
            raise InvalidValue("a step function needs one more value than breakpoints")
        if any(not a < b for a, b in zip(bps, bps[1:])):
            raise InvalidValue("breakpoints must be strictly increasing")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise InvalidValue("plateau values must be non-decreasing")

    def _piece(self, x: float) -> int:
        if self.right_continuous:
            return bisect_right(self.breakpoints, x)
        return bisect_left(self.breakpoints, x)

    def __call__(self, x: float) -> float:
        return self.values[self._piece(x)]

    def left_limit(self, x: float) -> float:
        return self.values[bisect_left(self.breakpoints, x)]

    def right_limit(self, x: float) -> float:
        return self.values[bisect_right(self.breakpoints, x)]

    def evaluate_many(self, xs: FloatArray) -> FloatArray:
        side = "right" if self.right_continuous else "left"
        idx = np.searchsorted(np.asarray(self.breakpoints), xs, side=side)
        return np.asarray(self.values)[idx]

    @property
    def lower_limit(self) -> float:
        return self.values[0]

    @property
    def upper_limit(self) -> float:
        return self.values[-1]

    def plateaus(self) -> list[tuple[float, float, float]]:
        """``(left, right, value)`` triples, with infinite outer ends."""
        edges = [-np.inf, *self.breakpoints, np.inf]
        return [(edges[j], edges[j + 1], v) for j, v in enumerate(self.values)]


def _check(position: Position, capacity: Capacity) -> None:
    if position.space != capacity.space:
        raise SpaceMismatch("position and capacity use different sample spaces")


def survival_levels(position: Position, capacity: Capacity) -> tuple[FloatArray, FloatArray]:
    """Ascending distinct values ``u_1 < ... < u_m`` and ``c(X > u_j)`` for each."""
    _check(position, capacity)
    distinct = position.distinct_values()
    events = [position.level_event(float(u)) for u in distinct]
    return distinct, capacity.values_of(events)


def distribution_function(position: Position, capacity: Capacity) -> StepFunction:
    """``G_X(x) = 1 - c(X > x)``; breakpoints are the distinct values of X."""
    distinct, survival = survival_levels(position, capacity)
    values = [0.0, *(1.0 - s for s in survival.tolist())]
    values[-1] = 1.0
    return StepFunction(tuple(distinct.tolist()), tuple(values))


@dataclass(frozen=True)
class QuantilePair:
    """Lower and upper quantile functions on (0, 1) with their endpoint values.

    Both share breakpoints (the plateau levels of ``G_X`` inside (0, 1)) and
    values; ``lower`` is left-continuous, ``upper`` right-continuous.
    """

    lower: StepFunction
    upper: StepFunction

    @property
    def at_zero(self) -> float:
        """``r(0) = inf_{t>0} r^+(t)``."""
        return self.upper.lower_limit

    @property
    def at_one(self) -> float:
        """``r(1) = sup_{t<1} r^-(t)``."""
        return self.lower.upper_limit

    def r_minus(self, t: float) -> float:
        return self._endpoint(t) if t in (0.0, 1.0) else self.lower(t)

    def r_plus(self, t: float) -> float:
        return self._endpoint(t) if t in (0.0, 1.0) else self.upper(t)

    def _endpoint(self, t: float) -> float:
        return self.at_zero if t == 0.0 else self.at_one

    def upper_integral(self, a: float, b: float) -> float:
        """Exact ``∫_a^b r^+(t) dt`` for ``0 <= a <= b <= 1``."""
        total = 0.0
        for left, right, value in self.upper.plateaus():
            lo, hi = max(a, left), min(b, right)
            if hi > lo:
                total += value * (hi - lo)
        return total


def quantiles(position: Position, capacity: Capacity) -> QuantilePair:
    """``r^-(t) = inf{x : G_X(x) >= t}`` and ``r^+(t) = inf{x : G_X(x) > t}``."""
    g = distribution_function(position, capacity)
    xs = g.breakpoints
    levels = g.values[1:]  # G_X on [x_j, x_{j+1})
    inner = sorted({v for v in levels if 0.0 < v < 1.0})
    values = []
    for t in [0.0, *inner]:
        # first breakpoint whose plateau exceeds t
        j = next(j for j, v in enumerate(levels) if v > t)
        values.append(xs[j])
    return QuantilePair(
        StepFunction(tuple(inner), tuple(values), right_continuous=False),
        StepFunction(tuple(inner), tuple(values), right_continuous=True),
    )
