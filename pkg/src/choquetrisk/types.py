"""Type definitions for choquet-risk."""

from typing import TYPE_CHECKING, Protocol

import numpy as np
import numpy.typing as npt

if TYPE_CHECKING:
    from .choquet import ConditionalValue
    from .space import BlockPartition, Position, SampleSpace

FloatArray = npt.NDArray[np.float64]

# Bitmask over atom indices.
Event = int


class RiskMeasure(Protocol):
    """A G-conditional risk measure on a fixed space and partition.

    ``pure`` declares that evaluations may be issued concurrently.
    """

    @property
    def space(self) -> "SampleSpace": ...

    @property
    def partition(self) -> "BlockPartition": ...

    @property
    def pure(self) -> bool: ...

    def evaluate(self, position: "Position") -> "ConditionalValue": ...
