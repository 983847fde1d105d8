"""Finite sample spaces, events, block partitions and positions.

Events are bitmasks over atom indices: bit ``i`` is set when atom ``i`` belongs
to the event. The empty event is ``0`` and the whole space is ``space.full``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidValue, PartitionMismatch, SpaceMismatch, SpaceTooLarge
from .types import Event, FloatArray

MAX_ATOMS = 24
EVENT_SEPARATOR = "|"


@dataclass(frozen=True)
class SampleSpace:
    """Ordered, finite set of labelled atoms."""

    atoms: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        atoms = tuple(self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not 1 <= len(atoms) <= MAX_ATOMS:
            raise SpaceTooLarge(
                f"sample space needs 1..{MAX_ATOMS} atoms, got {len(atoms)}"
            )
        for label in atoms:
            if not isinstance(label, str) or not label:
                raise InvalidValue(f"atom labels must be non-empty strings: {label!r}")
            if EVENT_SEPARATOR in label:
                raise InvalidValue(
                    f"atom label {label!r} may not contain {EVENT_SEPARATOR!r}"
                )
        if len(set(atoms)) != len(atoms):
            raise InvalidValue(f"atom labels must be unique: {list(atoms)}")
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(atoms)})

    @classmethod
    def of(cls, labels: Iterable[str]) -> SampleSpace:
        return cls(tuple(labels))

    @property
    def n(self) -> int:
        return len(self.atoms)

    @property
    def full(self) -> Event:
        return (1 << self.n) - 1

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise InvalidValue(f"unknown atom {label!r}") from None

    def event(self, labels: Iterable[str]) -> Event:
        mask = 0
        for label in labels:
            mask |= 1 << self.index(label)
        return mask

    def members(self, event: Event) -> list[int]:
        return [i for i in range(self.n) if event >> i & 1]

    def labels_of(self, event: Event) -> tuple[str, ...]:
        """Labels of an event, sorted (the serialised form)."""
        return tuple(sorted(self.atoms[i] for i in self.members(event)))

    def event_key(self, event: Event) -> str:
        return EVENT_SEPARATOR.join(self.labels_of(event))

    def parse_event_key(self, key: str) -> Event:
        if key == "":
            return 0
        return self.event(key.split(EVENT_SEPARATOR))

    def complement(self, event: Event) -> Event:
        return self.full & ~event

    def contains(self, event: Event) -> bool:
        return 0 <= event <= self.full


@dataclass(frozen=True)
class BlockPartition:
    """The conditioning information: disjoint, non-empty blocks covering the space."""

    space: SampleSpace
    blocks: tuple[Event, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        blocks = tuple(self.blocks)
        labels = tuple(self.labels) or tuple(f"B{i}" for i in range(len(blocks)))
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "labels", labels)
        if not blocks:
            raise InvalidValue("partition needs at least one block")
        if len(labels) != len(blocks):
            raise InvalidValue("partition needs exactly one label per block")
        if len(set(labels)) != len(labels):
            raise InvalidValue(f"block labels must be unique: {list(labels)}")
        seen = 0
        for label, block in zip(labels, blocks):
            if block == 0:
                raise InvalidValue(f"block {label!r} is empty")
            if not self.space.contains(block):
                raise InvalidValue(f"block {label!r} is not an event of the space")
            if seen & block:
                raise InvalidValue(f"block {label!r} overlaps an earlier block")
            seen |= block
        if seen != self.space.full:
            missing = self.space.labels_of(self.space.complement(seen))
            raise InvalidValue(f"blocks do not cover atoms {list(missing)}")

    @classmethod
    def trivial(cls, space: SampleSpace, label: str = "Omega") -> BlockPartition:
        return cls(space, (space.full,), (label,))

    @classmethod
    def from_labels(
        cls, space: SampleSpace, blocks: Mapping[str, Iterable[str]]
    ) -> BlockPartition:
        names = list(blocks)
        return cls(space, tuple(space.event(blocks[b]) for b in names), tuple(names))

    @property
    def size(self) -> int:
        return len(self.blocks)

    def block_of(self, atom: int) -> int:
        for j, block in enumerate(self.blocks):
            if block >> atom & 1:
                return j
        raise InvalidValue(f"atom index {atom} outside the space")

    def check_space(self, space: SampleSpace) -> None:
        if space != self.space:
            raise SpaceMismatch("partition and operand use different sample spaces")

    def check_same(self, other: BlockPartition) -> None:
        if other != self:
            raise PartitionMismatch(
                f"partitions differ: {list(self.labels)} vs {list(other.labels)}"
            )


@dataclass(frozen=True, eq=False)
class Position:
    """A bounded loss: one finite real value per atom."""

    space: SampleSpace
    values: FloatArray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if values.shape != (self.space.n,):
            raise InvalidValue(
                f"position needs {self.space.n} values, got {values.shape[0]}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidValue("position values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def of(cls, space: SampleSpace, values: Sequence[float] | FloatArray) -> Position:
        return cls(space, np.asarray(values, dtype=np.float64))

    @classmethod
    def constant(cls, space: SampleSpace, value: float) -> Position:
        return cls(space, np.full(space.n, float(value)))

    @classmethod
    def indicator(cls, space: SampleSpace, event: Event, value: float = 1.0) -> Position:
        values = np.zeros(space.n)
        values[space.members(event)] = value
        return cls(space, values)

    @property
    def norm(self) -> float:
        """Supremum norm."""
        return float(np.max(np.abs(self.values)))

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())

    def distinct_values(self) -> FloatArray:
        """Distinct values, ascending (exact float equality)."""
        return np.unique(self.values)

    def level_event(self, x: float) -> Event:
        """The event {X > x}."""
        mask = 0
        for i, v in enumerate(self.values):
            if v > x:
                mask |= 1 << i
        return mask

    def map(self, fn: Callable[[FloatArray], FloatArray]) -> Position:
        return Position(self.space, fn(self.values))

    def _check(self, other: Position) -> None:
        if other.space != self.space:
            raise SpaceMismatch("positions live on different sample spaces")

    def __add__(self, other: Position | float) -> Position:
        if isinstance(other, Position):
            self._check(other)
            return Position(self.space, self.values + other.values)
        return Position(self.space, self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other: Position | float) -> Position:
        if isinstance(other, Position):
            self._check(other)
            return Position(self.space, self.values - other.values)
        return Position(self.space, self.values - float(other))

    def __mul__(self, scalar: float) -> Position:
        return Position(self.space, self.values * float(scalar))

    __rmul__ = __mul__

    def equals(self, other: Position) -> bool:
        return other.space == self.space and bool(np.array_equal(self.values, other.values))

    def __repr__(self) -> str:
        return f"Position({dict(zip(self.space.atoms, self.values.tolist()))!r})"


def is_block_measurable(position: Position, partition: BlockPartition) -> bool:
    """True iff the position is constant on every block."""
    partition.check_space(position.space)
    for block in partition.blocks:
        members = position.values[position.space.members(block)]
        if np.any(members != members[0]):
            return False
    return True


def check_finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise InvalidValue(f"{what} must be finite, got {value!r}")
    return float(value)
