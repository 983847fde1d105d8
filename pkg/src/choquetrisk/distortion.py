"""Random distortion functions: one piecewise-affine curve per block.

A curve lives on knots ``0 = t_0 < t_1 < ... < t_k = 1``. Segment ``s`` covers
the left-open, right-closed interval ``(t_s, t_{s+1}]`` and is affine between its
right limit at ``t_s`` (``starts[s]``) and its value at ``t_{s+1}`` (``ends[s]``).
The value at ``t_0`` is pinned separately (``origin``), so jumps sit exactly
where the half-open intervals put them: ``1_{(a,1]}`` is ``(0,a] -> 0``,
``(a,1] -> 1``.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .config import get_config
from .errors import (
    BlockCountMismatch,
    GapOrOverlap,
    InvalidLevel,
    InvalidValue,
    InvalidWeight,
    NotMonotone,
    NotNormalized,
    OutOfDomain,
)
from .space import BlockPartition
from .types import FloatArray

Segment = tuple[float, float, float, float]


@dataclass(frozen=True, eq=False)
class PiecewiseAffine:
    """Non-decreasing piecewise-affine function on ``[knots[0], knots[-1]]``."""

    knots: tuple[float, ...]
    starts: tuple[float, ...]
    ends: tuple[float, ...]
    origin: float = 0.0

    def __post_init__(self) -> None:
        knots = tuple(float(t) for t in self.knots)
        starts = tuple(float(v) for v in self.starts)
        ends = tuple(float(v) for v in self.ends)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "ends", ends)
        object.__setattr__(self, "origin", float(self.origin))
        if len(knots) < 2:
            raise GapOrOverlap("a curve needs at least two knots")
        if len(starts) != len(knots) - 1 or len(ends) != len(knots) - 1:
            raise GapOrOverlap("need one right limit and one knot value per segment")
        for t in knots:
            if not math.isfinite(t):
                raise GapOrOverlap(f"knots must be finite, got {t!r}")
        for left, right in zip(knots, knots[1:]):
            if not left < right:
                raise GapOrOverlap(f"segments ({left}, {right}] overlap or are empty")
        for v in (self.origin, *starts, *ends):
            if not math.isfinite(v):
                raise InvalidValue(f"curve values must be finite, got {v!r}")

    @property
    def segments(self) -> int:
        return len(self.knots) - 1

    def slope(self, s: int) -> float:
        """Right-hand slope on segment ``s`` (constant per segment)."""
        return (self.ends[s] - self.starts[s]) / (self.knots[s + 1] - self.knots[s])

    def segment_of(self, t: float) -> int:
        """Index of the segment ``(t_s, t_{s+1}]`` containing ``t > t_0``."""
        return min(max(bisect_left(self.knots, t) - 1, 0), self.segments - 1)

    def _affine(self, s: int, t: float) -> float:
        left, right = self.knots[s], self.knots[s + 1]
        if t == right:
            return self.ends[s]
        if t == left:
            return self.starts[s]
        return self.starts[s] + (self.ends[s] - self.starts[s]) * (t - left) / (
            right - left
        )

    def __call__(self, t: float) -> float:
        if t == self.knots[0]:
            return self.origin
        return self._affine(self.segment_of(t), t)

    def right_limit(self, t: float) -> float:
        """Limit from the right at ``t`` (``t < knots[-1]``)."""
        idx = bisect_left(self.knots, t)
        if idx < self.segments and self.knots[idx] == t:
            return self.starts[idx]
        return self._affine(self.segment_of(t), t)

    def evaluate_many(self, ts: FloatArray) -> FloatArray:
        ts = np.asarray(ts, dtype=np.float64)
        knots = np.asarray(self.knots)
        starts = np.asarray(self.starts)
        ends = np.asarray(self.ends)
        seg = np.clip(np.searchsorted(knots, ts, side="left") - 1, 0, self.segments - 1)
        left, right = knots[seg], knots[seg + 1]
        out = starts[seg] + (ends[seg] - starts[seg]) * (ts - left) / (right - left)
        out = np.where(ts == right, ends[seg], out)
        return np.where(ts == knots[0], self.origin, out)

    def integral(self, a: float, b: float) -> float:
        """Exact integral over ``[a, b]`` (trapezoids per segment)."""
        if b <= a:
            return 0.0
        total = 0.0
        for s in range(self.segments):
            lo = max(a, self.knots[s])
            hi = min(b, self.knots[s + 1])
            if hi <= lo:
                continue
            v_lo = self.starts[s] if lo == self.knots[s] else self._affine(s, lo)
            total += 0.5 * (v_lo + self._affine(s, hi)) * (hi - lo)
        return total

    def monotonicity_witness(self, tol: float) -> tuple[float, float] | None:
        """First t-pair where the function decreases, or None."""
        if self.starts[0] < self.origin - tol:
            return (self.knots[0], self.knots[0])
        for s in range(self.segments):
            if self.ends[s] < self.starts[s] - tol:
                return (self.knots[s], self.knots[s + 1])
            if s + 1 < self.segments and self.starts[s + 1] < self.ends[s] - tol:
                return (self.knots[s + 1], self.knots[s + 1])
        return None


@dataclass(frozen=True, eq=False)
class DistortionCurve(PiecewiseAffine):
    """Non-decreasing, normalised map ``[0, 1] -> [0, 1]``.

    ``kind`` and ``alpha`` only remember how the curve was specified, so it
    can be written back in the same form.
    """

    kind: str = "segments"
    alpha: float | None = None

    def __post_init__(self) -> None:
        super().__post_init__()
        tol = get_config().tolerance
        if self.knots[0] != 0.0 or self.knots[-1] != 1.0:
            raise GapOrOverlap(
                f"segments must tile (0, 1], got ({self.knots[0]}, {self.knots[-1]}]"
            )
        if self.origin != 0.0:
            raise NotNormalized(f"φ(0) must be 0, got {self.origin!r}", self.origin)
        witness = self.monotonicity_witness(tol)
        if witness is not None:
            raise NotMonotone(f"curve decreases between t={witness[0]} and {witness[1]}+", witness)
        if abs(self.ends[-1] - 1.0) > tol:
            raise NotNormalized(f"φ(1) must be 1, got {self.ends[-1]!r}", self.ends[-1])
        # Snap so eval(1) == 1 exactly.
        object.__setattr__(self, "ends", (*self.ends[:-1], 1.0))

    @classmethod
    def from_knots(
        cls,
        knots: Sequence[float],
        right_limits: Sequence[float],
        at_knots: Sequence[float],
    ) -> DistortionCurve:
        """Build from knot values: ``at_knots[j] = φ(t_j)``, ``right_limits[j] = φ(t_j+)``."""
        if len(at_knots) != len(knots) or len(right_limits) != len(knots) - 1:
            raise GapOrOverlap(
                "need len(at_knots) == len(knots) and len(right_limits) == len(knots) - 1"
            )
        return cls(
            tuple(knots),
            tuple(right_limits),
            tuple(at_knots[1:]),
            origin=at_knots[0],
        )

    @classmethod
    def from_segments(cls, segments: Sequence[Segment]) -> DistortionCurve:
        """Build from ``(left, right, a, b)`` pieces meaning ``t -> a + b t`` on ``(left, right]``."""
        if not segments:
            raise GapOrOverlap("no segments given")
        knots = [float(segments[0][0])]
        starts: list[float] = []
        ends: list[float] = []
        for left, right, a, b in segments:
            if left != knots[-1]:
                raise GapOrOverlap(f"segment ({left}, {right}] does not start at {knots[-1]}")
            knots.append(float(right))
            starts.append(a + b * left)
            ends.append(a + b * right)
        return cls(tuple(knots), tuple(starts), tuple(ends))

    @property
    def jump_at_zero(self) -> float:
        """φ(0+)."""
        return self.starts[0]

    def is_concave(self) -> bool:
        """Continuous on (0, 1] with non-increasing slopes; a jump at 0 is allowed."""
        tol = get_config().tolerance
        for s in range(1, self.segments):
            if abs(self.starts[s] - self.ends[s - 1]) > tol:
                return False
        slopes = [self.slope(s) for s in range(self.segments)]
        return all(b <= a + 1e-9 * max(1.0, abs(a)) for a, b in zip(slopes, slopes[1:]))

    def knot_lists(self) -> tuple[list[float], list[float], list[float]]:
        return list(self.knots), list(self.starts), [self.origin, *self.ends]


def _check_level(alpha: float) -> float:
    if not (isinstance(alpha, (int, float)) and 0.0 < alpha < 1.0):
        raise InvalidLevel(alpha)
    return float(alpha)


def var_curve(alpha: float) -> DistortionCurve:
    """``1_{(1-α, 1]}``."""
    alpha = _check_level(alpha)
    return DistortionCurve((0.0, 1.0 - alpha, 1.0), (0.0, 1.0), (0.0, 1.0), kind="var", alpha=alpha)


def avar_curve(alpha: float) -> DistortionCurve:
    """``min{t, 1-α} / (1-α)``."""
    alpha = _check_level(alpha)
    return DistortionCurve((0.0, 1.0 - alpha, 1.0), (0.0, 1.0), (1.0, 1.0), kind="avar", alpha=alpha)


def identity_curve() -> DistortionCurve:
    return DistortionCurve((0.0, 1.0), (0.0,), (1.0,), kind="identity")


@dataclass(frozen=True)
class VaR:
    alpha: float

    def curve(self) -> DistortionCurve:
        return var_curve(self.alpha)


@dataclass(frozen=True)
class AVaR:
    alpha: float

    def curve(self) -> DistortionCurve:
        return avar_curve(self.alpha)


@dataclass(frozen=True)
class Identity:
    def curve(self) -> DistortionCurve:
        return identity_curve()


BuiltinKind = VaR | AVaR | Identity


@dataclass(frozen=True, eq=False)
class RandomDistortion:
    """One distortion curve per block of the partition."""

    partition: BlockPartition
    curves: tuple[DistortionCurve, ...]

    def __post_init__(self) -> None:
        curves = tuple(self.curves)
        object.__setattr__(self, "curves", curves)
        if len(curves) != self.partition.size:
            raise BlockCountMismatch(
                f"{self.partition.size} blocks but {len(curves)} curves"
            )

    def block_index(self, block: int | str) -> int:
        if isinstance(block, str):
            try:
                return self.partition.labels.index(block)
            except ValueError:
                raise InvalidValue(f"unknown block {block!r}") from None
        if not 0 <= block < self.partition.size:
            raise InvalidValue(f"block index {block} out of range")
        return block

    def curve(self, block: int | str) -> DistortionCurve:
        return self.curves[self.block_index(block)]


def build_distortion(
    partition: BlockPartition,
    curves: Sequence[DistortionCurve | Sequence[Segment]],
) -> RandomDistortion:
    """Validate one curve (or raw segment list) per block."""
    if len(curves) != partition.size:
        raise BlockCountMismatch(f"{partition.size} blocks but {len(curves)} curves")
    built = tuple(
        c if isinstance(c, DistortionCurve) else DistortionCurve.from_segments(c)
        for c in curves
    )
    return RandomDistortion(partition, built)


def builtin_distortion(
    partition: BlockPartition, kinds: Sequence[BuiltinKind]
) -> RandomDistortion:
    """VaR / AVaR / identity curves per block."""
    if len(kinds) != partition.size:
        raise BlockCountMismatch(f"{partition.size} blocks but {len(kinds)} kinds")
    return RandomDistortion(partition, tuple(k.curve() for k in kinds))


def eval_distortion(d: RandomDistortion, block: int | str, t: float) -> float:
    if not (isinstance(t, (int, float)) and 0.0 <= t <= 1.0):
        raise OutOfDomain(f"distortions are defined on [0, 1], got {t!r}")
    return d.curve(block)(float(t))


@dataclass(frozen=True)
class Concavity:
    concave: bool
    jump_at_zero: float


def is_concave(d: RandomDistortion) -> list[Concavity]:
    """Per block: concavity verdict and φ(0+)."""
    return [Concavity(c.is_concave(), c.jump_at_zero) for c in d.curves]


@dataclass(frozen=True, eq=False)
class WeightCurve(PiecewiseAffine):
    """Non-negative, non-decreasing weight on [0, 1]."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.knots[0] != 0.0 or self.knots[-1] != 1.0:
            raise InvalidWeight("weight curves must be defined on [0, 1]")
        if min(self.origin, *self.starts, *self.ends) < 0.0:
            raise InvalidWeight("weight curve takes negative values")
        if self.monotonicity_witness(get_config().tolerance) is not None:
            raise InvalidWeight("weight curve is decreasing somewhere")

    @classmethod
    def constant(cls, value: float) -> WeightCurve:
        return cls((0.0, 1.0), (value,), (value,), origin=value)

    @classmethod
    def from_knots(
        cls,
        knots: Sequence[float],
        right_limits: Sequence[float],
        at_knots: Sequence[float],
    ) -> WeightCurve:
        if len(at_knots) != len(knots) or len(right_limits) != len(knots) - 1:
            raise InvalidWeight("malformed weight curve knot lists")
        return cls(tuple(knots), tuple(right_limits), tuple(at_knots[1:]), origin=at_knots[0])
