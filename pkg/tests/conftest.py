"""Shared fixtures: the four-atom space and its standard capacities."""

import pytest

from choquetrisk import (
    DistortedProbability,
    DistortionCurve,
    Position,
    SampleSpace,
    capacity_from_generator,
    uniform_capacity,
    validate_capacity,
)


def square_curve() -> DistortionCurve:
    """``t²`` interpolated at the quarter knots (exact there)."""
    return DistortionCurve.from_knots(
        (0.0, 0.25, 0.5, 0.75, 1.0),
        (0.0, 0.0625, 0.25, 0.5625),
        (0.0, 0.0625, 0.25, 0.5625, 1.0),
    )


def indicator_capacity(space: SampleSpace, event: int, gamma: float):
    """``c(B) = γ`` when ``event ⊆ B ≠ Ω``, 1 on Ω, 0 elsewhere: ``c(event) = γ``."""
    table = [0.0] * (space.full + 1)
    for b in range(space.full + 1):
        if b == space.full:
            table[b] = 1.0
        elif b & event == event:
            table[b] = gamma
    return validate_capacity(space, table)


@pytest.fixture
def abcd():
    return SampleSpace.of("abcd")


@pytest.fixture
def uniform4(abcd):
    return uniform_capacity(abcd)


@pytest.fixture
def squared4(abcd):
    return capacity_from_generator(abcd, DistortedProbability((0.25,) * 4, square_curve()))


@pytest.fixture
def x3110(abcd):
    return Position.of(abcd, [3, 1, 1, 0])
