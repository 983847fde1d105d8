"""First-order and stop-loss dominance with respect to a capacity.

``dominates_st`` compares distribution functions at their breakpoints. Only
necessity is classical; sufficiency on a finite space follows from writing a
non-decreasing utility as a sum of layers ``1_{u(X) > y}``, each of which is an
event ``{X > a}`` or ``{X >= a}`` whose capacity ``G_X`` already determines.
``dominates_sl`` compares integrated survival functions and cross-checks the
verdict against tail integrals of the upper quantile.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from .capacity import Capacity
from .choquet import choquet
from .distortion import WeightCurve
from .errors import CharacterizationMismatch, InvalidValue, InvalidWeight, SpaceMismatch
from .executor import map_ordered
from .logger import log_debug, log_warning
from .space import Position
from .stepfn import distribution_function, quantiles, survival_levels
from .types import FloatArray

ICX_TOLERANCE = 1e-9
# Disagreements between the two stop-loss characterisations below this
# multiple of the comparison tolerance are treated as rounding ties.
MISMATCH_SLACK = 1e3

UtilityKind = Literal["indicator", "call", "convex"]


@dataclass(frozen=True)
class Witness:
    """Point where the defining inequality fails: ``lhs`` should not exceed ``rhs``."""

    x: float
    lhs: float
    rhs: float

    def as_dict(self) -> dict[str, float]:
        return {"x": self.x, "lhs": self.lhs, "rhs": self.rhs}


@dataclass(frozen=True)
class DominanceVerdict:
    order: str
    holds: bool
    witness: Witness | None = None

    def __post_init__(self) -> None:
        if self.holds != (self.witness is None):
            raise InvalidValue("a verdict carries a witness exactly when it fails")

    def __bool__(self) -> bool:
        return self.holds

    def as_dict(self) -> dict[str, Any]:
        return {
            "order": self.order,
            "holds": self.holds,
            "witness": None if self.witness is None else self.witness.as_dict(),
        }


@dataclass(frozen=True)
class TestUtility:
    """Non-decreasing test utility ``u``.

    ``indicator``: ``1_{z > threshold}``; ``call``: ``(z - strike)^+``;
    ``convex``: ``Σ_k (s_k - s_{k-1}) (z - b_k)^+`` with ascending ``knots`` b
    and non-decreasing, non-negative ``slopes`` s.
    """

    __test__ = False

    kind: UtilityKind
    level: float = 0.0
    knots: tuple[float, ...] = field(default=())
    slopes: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.kind == "convex":
            if len(self.knots) != len(self.slopes) or not self.knots:
                raise InvalidValue("convex utilities need one slope per knot")
            if any(b < a for a, b in zip(self.knots, self.knots[1:])):
                raise InvalidValue("utility knots must be ascending")
            if self.slopes[0] < 0.0 or any(b < a for a, b in zip(self.slopes, self.slopes[1:])):
                raise InvalidValue("convex utility slopes must be non-negative and non-decreasing")

    @classmethod
    def indicator(cls, threshold: float) -> TestUtility:
        return cls("indicator", float(threshold))

    @classmethod
    def call(cls, strike: float) -> TestUtility:
        return cls("call", float(strike))

    @classmethod
    def convex(cls, knots: tuple[float, ...], slopes: tuple[float, ...]) -> TestUtility:
        return cls("convex", knots=tuple(map(float, knots)), slopes=tuple(map(float, slopes)))

    def __call__(self, z: FloatArray) -> FloatArray:
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "indicator":
            return (z > self.level).astype(np.float64)
        if self.kind == "call":
            return np.maximum(z - self.level, 0.0)
        increments = np.diff(np.asarray(self.slopes), prepend=0.0)
        kinks = np.maximum(z[..., None] - np.asarray(self.knots), 0.0)
        return kinks @ increments

    def apply(self, position: Position) -> Position:
        return position.map(self)

    def as_dict(self) -> dict[str, Any]:
        if self.kind == "convex":
            return {"kind": "convex", "knots": list(self.knots), "slopes": list(self.slopes)}
        key = "threshold" if self.kind == "indicator" else "strike"
        return {"kind": self.kind, key: self.level}


def _check(x: Position, y: Position, capacity: Capacity) -> None:
    if x.space != y.space or x.space != capacity.space:
        raise SpaceMismatch("positions and capacity must share one sample space")


def _tolerance(x: Position, y: Position) -> float:
    return 1e-9 * (1.0 + x.norm + y.norm)


def dominates_st(x: Position, y: Position, capacity: Capacity) -> DominanceVerdict:
    """``X ⪯_st Y`` iff ``G_X >= G_Y`` at every breakpoint of either function."""
    _check(x, y, capacity)
    gx = distribution_function(x, capacity)
    gy = distribution_function(y, capacity)
    for point in sorted({*gx.breakpoints, *gy.breakpoints}):
        lhs, rhs = gx(point), gy(point)
        if lhs < rhs - 1e-12:
            log_debug("st dominance fails at x=%r", point)
            return DominanceVerdict("st", False, Witness(point, lhs, rhs))
    return DominanceVerdict("st", True)


def _integrated_survival(position: Position, capacity: Capacity, points: FloatArray) -> FloatArray:
    u, s = survival_levels(position, capacity)
    # c(X > z) = s[j-1] on [u_{j-1}, u_j)
    lower, upper, weight = u[:-1], u[1:], s[:-1]
    cut = np.maximum(points[:, None], lower[None, :])
    above = np.sum(np.maximum(upper[None, :] - cut, 0.0) * weight[None, :], axis=1)
    return above + np.maximum(u[0] - points, 0.0)


def integrated_survival(position: Position, capacity: Capacity, x: float) -> float:
    """``S_X(x) = ∫_x^∞ c(X > z) dz``, which equals ``E_c((X - x)^+)``."""
    if position.space != capacity.space:
        raise SpaceMismatch("position and capacity use different sample spaces")
    return float(_integrated_survival(position, capacity, np.array([float(x)]))[0])


def tail_quantile_integral(position: Position, capacity: Capacity, alpha: float) -> float:
    """``∫_α^1 r_X^+(u) du``."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidValue(f"level must lie in [0, 1], got {alpha!r}")
    return quantiles(position, capacity).upper_integral(float(alpha), 1.0)


def _first_excess(lhs: FloatArray, rhs: FloatArray, tol: float) -> int | None:
    bad = np.nonzero(lhs > rhs + tol)[0]
    return int(bad[0]) if bad.size else None


def dominates_sl(x: Position, y: Position, capacity: Capacity) -> DominanceVerdict:
    """``X ⪯_sl Y`` iff ``S_X <= S_Y`` at every breakpoint of either function.

    Both integrated survival functions are piecewise affine with kinks at the
    distinct values, and their difference is constant below the smallest one,
    so the breakpoints decide. The equivalent tail-quantile test
    ``∫_α^1 r_X^+ <= ∫_α^1 r_Y^+`` is evaluated too; a disagreement beyond
    rounding raises ``CharacterizationMismatch``.
    """
    _check(x, y, capacity)
    tol = _tolerance(x, y)
    points = np.union1d(x.distinct_values(), y.distinct_values())
    sx = _integrated_survival(x, capacity, points)
    sy = _integrated_survival(y, capacity, points)
    by_survival = _first_excess(sx, sy, tol)

    qx, qy = quantiles(x, capacity), quantiles(y, capacity)
    levels = sorted({0.0, *qx.upper.breakpoints, *qy.upper.breakpoints})
    tx = np.array([qx.upper_integral(a, 1.0) for a in levels])
    ty = np.array([qy.upper_integral(a, 1.0) for a in levels])
    by_quantile = _first_excess(tx, ty, tol)

    if (by_survival is None) != (by_quantile is None):
        margin = max(float(np.max(sx - sy)), float(np.max(tx - ty))) - tol
        if margin > MISMATCH_SLACK * tol:
            raise CharacterizationMismatch(
                f"stop-loss characterisations disagree by {margin!r} for {x!r} vs {y!r}"
            )
        log_warning("Stop-loss verdicts differ by a rounding tie (%.3g); using survival test", margin)

    if by_survival is None:
        return DominanceVerdict("sl", True)
    k = by_survival
    log_debug("sl dominance fails at x=%r", float(points[k]))
    return DominanceVerdict("sl", False, Witness(float(points[k]), float(sx[k]), float(sy[k])))


def weighted_quantile_integral(
    position: Position, capacity: Capacity, g: WeightCurve | float
) -> float:
    """Exact ``∫_0^1 g(t) r_X^+(t) dt`` over the refinement of knots and plateaus."""
    if position.space != capacity.space:
        raise SpaceMismatch("position and capacity use different sample spaces")
    if not isinstance(g, WeightCurve):
        if not isinstance(g, (int, float)):
            raise InvalidWeight(f"expected a weight curve or constant, got {type(g).__name__}")
        g = WeightCurve.constant(float(g))
    q = quantiles(position, capacity)
    grid = sorted({0.0, 1.0, *q.upper.breakpoints, *g.knots})
    total = 0.0
    for lo, hi in zip(grid, grid[1:]):
        total += q.upper(0.5 * (lo + hi)) * g.integral(lo, hi)
    return total


def _utility_gap(u: TestUtility, x: Position, y: Position, capacity: Capacity) -> float:
    return choquet(u.apply(x), capacity) - choquet(u.apply(y), capacity)


def is_icx_witness(u: TestUtility, x: Position, y: Position, capacity: Capacity) -> bool:
    """True iff ``E_c(u(X)) > E_c(u(Y)) + 1e-9``."""
    _check(x, y, capacity)
    return _utility_gap(u, x, y, capacity) > ICX_TOLERANCE


def _random_convex(seq: np.random.SeedSequence, lo: float, hi: float) -> TestUtility:
    rng = np.random.default_rng(seq)
    k = int(rng.integers(1, 4))
    knots = np.sort(rng.uniform(lo, hi, size=k))
    slopes = np.cumsum(rng.exponential(size=k))
    return TestUtility.convex(tuple(knots.tolist()), tuple(slopes.tolist()))


def falsify_icx(
    x: Position, y: Position, capacity: Capacity, trials: int = 200, seed: int = 0
) -> TestUtility | None:
    """Search for a convex non-decreasing ``u`` with ``E_c(u(X)) > E_c(u(Y))``.

    Calls struck at every breakpoint are tried first, then ``trials`` random
    convex utilities, one per spawned seed. ``None`` is not a proof of the
    increasing convex order.
    """
    _check(x, y, capacity)
    if trials < 1:
        raise InvalidValue(f"trials must be at least 1, got {trials}")
    points = np.union1d(x.distinct_values(), y.distinct_values())
    for strike in points.tolist():
        u = TestUtility.call(strike)
        if is_icx_witness(u, x, y, capacity):
            return u

    lo, hi = float(points[0]), float(points[-1])
    children = np.random.SeedSequence(seed).spawn(trials)

    def trial(seq: np.random.SeedSequence) -> tuple[TestUtility, float]:
        u = _random_convex(seq, lo, hi)
        return u, _utility_gap(u, x, y, capacity)

    for u, gap in map_ordered(trial, children):
        if gap > ICX_TOLERANCE:
            log_debug("icx falsified by %r (gap %.3g)", u, gap)
            return u
    return None
