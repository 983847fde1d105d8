"""Seeded random instances for property checks and the axiom sampler.

Every helper takes a ``numpy.random.Generator`` so callers control the stream.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .capacity import (
    Capacity,
    DistortedProbability,
    SupOfProbabilities,
    capacity_from_generator,
    monotone_closure,
    validate_capacity,
)
from .distortion import (
    DistortionCurve,
    RandomDistortion,
    avar_curve,
    identity_curve,
    var_curve,
)
from .errors import InvalidRanking
from .space import BlockPartition, Position, SampleSpace
from .types import FloatArray

MAX_KNOTS = 5


def random_space(rng: np.random.Generator, low: int = 2, high: int = 8) -> SampleSpace:
    n = int(rng.integers(low, high + 1))
    return SampleSpace.of(f"w{i}" for i in range(n))


def random_probability(rng: np.random.Generator, n: int) -> FloatArray:
    """Dirichlet weights; about one draw in four has a zero-weight atom."""
    p = rng.dirichlet(np.ones(n))
    if n > 1 and rng.random() < 0.25:
        p[rng.integers(n)] = 0.0
    return p / p.sum()


def _monotone_table(rng: np.random.Generator, n: int) -> FloatArray:
    table = rng.random(1 << n)
    table[0] = 0.0
    monotone_closure(table, n)
    full = table[-1]
    if full <= 0.0:
        table[-1] = 1.0
        return table
    table = table / full
    table[-1] = 1.0
    return table


def random_capacity(rng: np.random.Generator, space: SampleSpace) -> Capacity:
    """A valid capacity: an arbitrary monotone table, a distorted probability
    or an upper envelope of probabilities."""
    kind = int(rng.integers(3))
    if kind == 0:
        return validate_capacity(space, _monotone_table(rng, space.n))
    if kind == 1:
        gen = DistortedProbability(
            tuple(random_probability(rng, space.n).tolist()), random_curve(rng)
        )
        return capacity_from_generator(space, gen)
    count = int(rng.integers(1, 4))
    probs = tuple(tuple(random_probability(rng, space.n).tolist()) for _ in range(count))
    return capacity_from_generator(space, SupOfProbabilities(probs))


def random_partition(rng: np.random.Generator, space: SampleSpace) -> BlockPartition:
    k = int(rng.integers(1, min(space.n, 4) + 1))
    owner = np.concatenate([np.arange(k), rng.integers(k, size=space.n - k)])
    rng.shuffle(owner)
    blocks = tuple(
        sum(1 << i for i in range(space.n) if owner[i] == b) for b in range(k)
    )
    return BlockPartition(space, blocks, tuple(f"G{b}" for b in range(k)))


def random_position(
    rng: np.random.Generator, space: SampleSpace, scale: float = 5.0
) -> Position:
    """Half the draws come from a coarse integer grid so ties are common."""
    if rng.random() < 0.5:
        values = rng.integers(-3, 4, size=space.n) * rng.uniform(0.25, scale / 2)
    else:
        values = rng.normal(0.0, scale, size=space.n)
    return Position(space, values)


def random_comonotonic_pair(
    rng: np.random.Generator, space: SampleSpace
) -> tuple[Position, Position]:
    """Two non-negative positions sorted along one shared ranking."""
    ranking = rng.permutation(space.n)
    xs = np.sort(rng.integers(0, 6, size=space.n) * rng.uniform(0.5, 2.0))
    ys = np.sort(rng.integers(0, 6, size=space.n) * rng.uniform(0.5, 2.0))
    x = np.empty(space.n)
    y = np.empty(space.n)
    x[ranking] = xs
    y[ranking] = ys
    return Position(space, x), Position(space, y)


def chain_adapted_position(
    rng: np.random.Generator, space: SampleSpace, ranking: Sequence[str]
) -> Position:
    """Values non-increasing along ``ranking``: measurable w.r.t. its top-k chain."""
    if sorted(ranking) != sorted(space.atoms):
        raise InvalidRanking(f"{list(ranking)} is not a permutation of the atoms")
    values = np.sort(rng.integers(-3, 6, size=space.n) * rng.uniform(0.25, 2.0))[::-1]
    out = np.empty(space.n)
    for label, v in zip(ranking, values):
        out[space.index(label)] = v
    return Position(space, out)


def random_curve(rng: np.random.Generator) -> DistortionCurve:
    """Any normalised non-decreasing curve with at most ``MAX_KNOTS`` segments,
    jumps allowed; the built-in families turn up now and then."""
    pick = rng.random()
    if pick < 0.1:
        return var_curve(float(rng.uniform(0.05, 0.95)))
    if pick < 0.2:
        return avar_curve(float(rng.uniform(0.05, 0.95)))
    if pick < 0.25:
        return identity_curve()
    k = int(rng.integers(1, MAX_KNOTS + 1))
    inner = np.sort(rng.uniform(0.0, 1.0, size=k - 1))
    knots = np.unique(np.concatenate([[0.0], inner, [1.0]]))
    k = knots.size - 1
    levels = np.sort(rng.random(2 * k))
    if rng.random() < 0.5:
        levels[1:-1:2] = levels[2::2]  # no jumps inside (0, 1]
    starts = levels[0::2]
    ends = levels[1::2].copy()
    ends[-1] = 1.0
    return DistortionCurve(tuple(knots.tolist()), tuple(starts.tolist()), tuple(ends.tolist()))


def random_concave_curve(rng: np.random.Generator) -> DistortionCurve:
    """Continuous on (0, 1] with decreasing slopes; half the draws jump at 0."""
    jump = float(rng.uniform(0.0, 0.6)) if rng.random() < 0.5 else 0.0
    k = int(rng.integers(1, MAX_KNOTS + 1))
    inner = np.sort(rng.uniform(0.0, 1.0, size=k - 1))
    knots = np.unique(np.concatenate([[0.0], inner, [1.0]]))
    widths = np.diff(knots)
    slopes = np.sort(rng.exponential(size=widths.size))[::-1]
    slopes *= (1.0 - jump) / float(np.dot(slopes, widths))
    ends = jump + np.cumsum(slopes * widths)
    ends[-1] = 1.0
    starts = np.concatenate([[jump], ends[:-1]])
    return DistortionCurve(tuple(knots.tolist()), tuple(starts.tolist()), tuple(ends.tolist()))


def random_distortion(
    rng: np.random.Generator, partition: BlockPartition, concave: bool = False
) -> RandomDistortion:
    draw = random_concave_curve if concave else random_curve
    return RandomDistortion(partition, tuple(draw(rng) for _ in range(partition.size)))
