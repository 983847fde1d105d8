"""Capacities on a finite sample space: validation and generators.

On a finite space every capacity is continuous from below, so that property
is not stored or checked.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .config import get_config
from .distortion import DistortionCurve, identity_curve
from .errors import (
    InvalidProbability,
    InvalidValue,
    MissingEvent,
    NotGrounded,
    NotMonotone,
    NotNormalized,
    SpaceMismatch,
    SpaceTooLarge,
)
from .logger import log_debug
from .space import SampleSpace
from .types import Event, FloatArray

MAX_TABLE_ATOMS = 16
PROBABILITY_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class ExplicitTable:
    """Full event table."""

    values: Mapping[Event, float]


@dataclass(frozen=True, eq=False)
class DistortedProbability:
    """``c(A) = ψ(P(A))``."""

    probability: tuple[float, ...]
    distortion: DistortionCurve = field(default_factory=identity_curve)


@dataclass(frozen=True, eq=False)
class SupOfProbabilities:
    """``c(A) = max_j P_j(A)``."""

    probabilities: tuple[tuple[float, ...], ...]


CapacityGenerator = ExplicitTable | DistortedProbability | SupOfProbabilities


@dataclass(frozen=True, eq=False)
class Capacity:
    """Validated grounded, normalised, monotone set function.

    ``table`` is indexed by event bitmask. Generator-backed capacities above
    ``MAX_TABLE_ATOMS`` atoms evaluate lazily through ``_lazy`` instead.
    """

    space: SampleSpace
    table: FloatArray | None
    generator: CapacityGenerator | None = None
    _lazy: object = field(default=None, repr=False)

    def __call__(self, event: Event) -> float:
        if self.table is not None:
            return float(self.table[event])
        return float(self._lazy(event))  # type: ignore[operator]

    def values_of(self, events: Sequence[Event]) -> FloatArray:
        if self.table is not None:
            return self.table[np.asarray(events, dtype=np.int64)]
        return np.array([self(e) for e in events], dtype=np.float64)

    def check_space(self, space: SampleSpace) -> None:
        if space != self.space:
            raise SpaceMismatch("capacity and operand use different sample spaces")

    def as_mapping(self) -> dict[Event, float]:
        if self.table is None:
            raise SpaceTooLarge("lazy capacities have no explicit table")
        return {e: float(v) for e, v in enumerate(self.table)}


def _monotonicity_witness(table: FloatArray, n: int, tol: float) -> tuple[int, int] | None:
    """First covering pair (S, S ∪ {i}) with c(S) > c(S ∪ {i})."""
    index = np.arange(table.shape[0], dtype=np.int64)
    for i in range(n):
        bit = 1 << i
        lower = index[(index & bit) == 0]
        bad = np.nonzero(table[lower] > table[lower | bit] + tol)[0]
        if bad.size:
            a = int(lower[bad[0]])
            return a, a | bit
    return None


def monotone_closure(table: FloatArray, n: int) -> FloatArray:
    """In place: raise each entry to the max over its subsets (one pass per atom)."""
    index = np.arange(table.shape[0], dtype=np.int64)
    for i in range(n):
        bit = 1 << i
        upper = index[(index & bit) != 0]
        table[upper] = np.maximum(table[upper], table[upper ^ bit])
    return table


def _check_table(space: SampleSpace, table: FloatArray) -> FloatArray:
    tol = get_config().tolerance
    if not np.all(np.isfinite(table)):
        bad = int(np.nonzero(~np.isfinite(table))[0][0])
        raise InvalidValue(f"capacity of {space.event_key(bad)!r} is not finite")
    if abs(table[0]) > tol:
        raise NotGrounded(float(table[0]))
    if abs(table[space.full] - 1.0) > tol:
        raise NotNormalized(f"c(Ω) must be 1, got {table[space.full]!r}", float(table[space.full]))
    table = table.copy()
    table[0] = 0.0
    table[space.full] = 1.0
    witness = _monotonicity_witness(table, space.n, tol)
    if witness is not None:
        a, b = witness
        raise NotMonotone(
            f"c({space.event_key(a)!r}) = {table[a]!r} > c({space.event_key(b)!r}) = {table[b]!r}",
            (space.labels_of(a), space.labels_of(b)),
        )
    # dips within tolerance are lifted to exact monotonicity
    table = np.minimum(monotone_closure(table, space.n), 1.0)
    table.flags.writeable = False
    return table


def validate_capacity(
    space: SampleSpace,
    raw: Mapping[Event, float] | FloatArray,
    generator: CapacityGenerator | None = None,
) -> Capacity:
    """Check groundedness, normalisation and monotonicity of a full table."""
    if space.n > MAX_TABLE_ATOMS:
        raise SpaceTooLarge(
            f"explicit tables are limited to {MAX_TABLE_ATOMS} atoms, got {space.n}"
        )
    size = 1 << space.n
    if isinstance(raw, Mapping):
        table = np.empty(size, dtype=np.float64)
        for event in range(size):
            if event not in raw:
                raise MissingEvent(space.event_key(event))
            table[event] = float(raw[event])
    else:
        table = np.asarray(raw, dtype=np.float64)
        if table.shape != (size,):
            raise MissingEvent(f"<table of {table.shape[0]} entries, need {size}>")
    table = _check_table(space, table)
    log_debug("Validated capacity table over %d atoms", space.n)
    return Capacity(space, table, generator or ExplicitTable({e: float(v) for e, v in enumerate(table)}))


def check_probability(space: SampleSpace, weights: Sequence[float]) -> tuple[float, ...]:
    p = tuple(float(w) for w in weights)
    if len(p) != space.n:
        raise InvalidProbability(f"need {space.n} weights, got {len(p)}")
    if any(not math.isfinite(w) or w < 0.0 for w in p):
        raise InvalidProbability(f"weights must be finite and non-negative: {list(p)}")
    if abs(math.fsum(p) - 1.0) > PROBABILITY_TOLERANCE:
        raise InvalidProbability(f"weights sum to {math.fsum(p)!r}, not 1")
    return p


def subset_sums(space: SampleSpace, weights: Sequence[float]) -> FloatArray:
    """``P(A)`` for every event, adding atoms in index order; exact 0 and 1 at ∅ and Ω."""
    sums = np.zeros(1 << space.n, dtype=np.float64)
    for i, w in enumerate(weights):
        half = 1 << i
        sums[half : 2 * half] = sums[:half] + w
    sums[space.full] = 1.0
    return np.clip(sums, 0.0, 1.0)


def _event_sum(weights: tuple[float, ...], event: Event, full: Event) -> float:
    if event == full:
        return 1.0
    total = 0.0
    for i, w in enumerate(weights):
        if event >> i & 1:
            total += w
    return min(max(total, 0.0), 1.0)


def capacity_from_generator(space: SampleSpace, gen: CapacityGenerator) -> Capacity:
    """Expand a generator and validate the result."""
    if isinstance(gen, ExplicitTable):
        return validate_capacity(space, gen.values, gen)

    if isinstance(gen, DistortedProbability):
        p = check_probability(space, gen.probability)
        psi = gen.distortion
        gen = DistortedProbability(p, psi)
        if space.n <= MAX_TABLE_ATOMS:
            return validate_capacity(space, psi.evaluate_many(subset_sums(space, p)), gen)
        full = space.full

        @lru_cache(maxsize=4096)
        def lazy_distorted(event: Event) -> float:
            return psi(_event_sum(p, event, full))

        return _lazy_capacity(space, gen, lazy_distorted)

    if isinstance(gen, SupOfProbabilities):
        if not gen.probabilities:
            raise InvalidProbability("need at least one probability vector")
        ps = tuple(check_probability(space, q) for q in gen.probabilities)
        gen = SupOfProbabilities(ps)
        if space.n <= MAX_TABLE_ATOMS:
            table = np.max(np.stack([subset_sums(space, q) for q in ps]), axis=0)
            return validate_capacity(space, table, gen)
        full = space.full

        @lru_cache(maxsize=4096)
        def lazy_sup(event: Event) -> float:
            return max(_event_sum(q, event, full) for q in ps)

        return _lazy_capacity(space, gen, lazy_sup)

    raise InvalidValue(f"unknown capacity generator {gen!r}")


def _lazy_capacity(space: SampleSpace, gen: CapacityGenerator, fn: object) -> Capacity:
    # Monotone by construction: non-decreasing ψ of an additive measure, or a max of them.
    cap = Capacity(space, None, gen, fn)
    if cap(0) != 0.0:
        raise NotGrounded(cap(0))
    if cap(space.full) != 1.0:
        raise NotNormalized(f"c(Ω) must be 1, got {cap(space.full)!r}", cap(space.full))
    log_debug("Lazy capacity over %d atoms", space.n)
    return cap


def uniform_capacity(space: SampleSpace) -> Capacity:
    """The uniform probability ``|A| / n``."""
    return capacity_from_generator(
        space, DistortedProbability(tuple([1.0 / space.n] * space.n))
    )


def probability_capacity(space: SampleSpace, weights: Sequence[float]) -> Capacity:
    return capacity_from_generator(space, DistortedProbability(tuple(weights)))
