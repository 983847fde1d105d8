"""Classical and randomly distorted Choquet integrals, comonotonicity."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capacity import Capacity
from .distortion import RandomDistortion
from .errors import (
    InvalidValue,
    NegativeInput,
    NotComonotonic,
    NotConcave,
    SpaceMismatch,
)
from .logger import log_debug
from .space import BlockPartition, Position, SampleSpace
from .stepfn import quantiles
from .types import Event, FloatArray


@dataclass(frozen=True)
class ConditionalValue:
    """One real value per block: an element of χ(G)."""

    partition: BlockPartition
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) != self.partition.size:
            raise InvalidValue(
                f"{self.partition.size} blocks but {len(values)} values"
            )

    def __getitem__(self, block: int | str) -> float:
        if isinstance(block, str):
            return self.values[self.partition.labels.index(block)]
        return self.values[block]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.partition.labels, self.values))

    def to_position(self) -> Position:
        space = self.partition.space
        values = np.empty(space.n)
        for block, v in zip(self.partition.blocks, self.values):
            values[space.members(block)] = v
        return Position(space, values)

    def max_abs_diff(self, other: ConditionalValue) -> float:
        self.partition.check_same(other.partition)
        return max(abs(a - b) for a, b in zip(self.values, other.values))


def _check(position: Position, capacity: Capacity, d: RandomDistortion | None = None) -> None:
    if position.space != capacity.space:
        raise SpaceMismatch("position and capacity use different sample spaces")
    if d is not None:
        d.partition.check_space(position.space)


def descending_levels(position: Position) -> tuple[list[float], list[Event]]:
    """Distinct values ``x_1 > ... > x_m`` and the nested events ``{X >= x_i}``."""
    values = position.values
    order = np.argsort(-values, kind="stable")
    xs: list[float] = []
    events: list[Event] = []
    mask = 0
    for i in order.tolist():
        v = float(values[i])
        if xs and v != xs[-1]:
            events.append(mask)
        if not xs or v != xs[-1]:
            xs.append(v)
        mask |= 1 << i
    events.append(mask)
    return xs, events


def _step_sum(xs: list[float], caps: FloatArray, curve_values: FloatArray) -> float:
    """``x_m + Σ_{i<m} (x_i - x_{i+1}) φ(c(U_i))``."""
    total = 0.0
    for i in range(len(xs) - 1):
        total += (xs[i] - xs[i + 1]) * float(curve_values[i])
    return xs[-1] + total


def rd_choquet(
    position: Position,
    capacity: Capacity,
    d: RandomDistortion,
    partition: BlockPartition | None = None,
) -> ConditionalValue:
    """Exact G-randomly distorted Choquet integral by the step formula.

    Negative positions are shifted by their minimum and the minimum is added
    back (translation invariance), so the step formula is the only kernel.
    """
    _check(position, capacity, d)
    if partition is not None:
        partition.check_same(d.partition)
    xs, events = descending_levels(position)
    caps = capacity.values_of(events)
    values = tuple(_step_sum(xs, caps, curve.evaluate_many(caps)) for curve in d.curves)
    return ConditionalValue(d.partition, values)


def choquet(position: Position, capacity: Capacity) -> float:
    """Classical Choquet integral ``E_c(X)``."""
    _check(position, capacity)
    xs, events = descending_levels(position)
    caps = capacity.values_of(events)
    return _step_sum(xs, caps, caps)


def rd_choquet_oracle(
    position: Position, capacity: Capacity, d: RandomDistortion, h: float
) -> ConditionalValue:
    """Midpoint-rule evaluation of the defining integrals.

    Cells are anchored at 0 and cover ``[min(X) - 1, max(X) + 1]`` together
    with 0 itself; the integrands vanish outside that window.
    """
    _check(position, capacity, d)
    if not (h > 0.0 and math.isfinite(h)):
        raise InvalidValue(f"grid step must be positive, got {h!r}")
    distinct = position.distinct_values()
    # c(X > x): 1 below u_1, then c(X > u_j) on [u_j, u_{j+1})
    survival = np.concatenate(
        ([1.0], capacity.values_of([position.level_event(float(u)) for u in distinct]))
    )
    hi = max(position.max + 1.0, 0.0)
    lo = min(position.min - 1.0, 0.0)
    pos_mid = (np.arange(math.ceil(hi / h)) + 0.5) * h
    neg_mid = -(np.arange(math.ceil(-lo / h)) + 0.5) * h

    def surv(x: FloatArray) -> FloatArray:
        return survival[np.searchsorted(distinct, x, side="right")]

    s_pos, s_neg = surv(pos_mid), surv(neg_mid)
    values = []
    for curve in d.curves:
        upper = float(np.sum(curve.evaluate_many(s_pos))) * h
        lower = float(np.sum(curve.evaluate_many(s_neg) - 1.0)) * h
        values.append(upper + lower)
    log_debug("Oracle on %d + %d cells", pos_mid.size, neg_mid.size)
    return ConditionalValue(d.partition, tuple(values))


def rd_choquet_concave_dual(
    position: Position, capacity: Capacity, d: RandomDistortion
) -> ConditionalValue:
    """``φ(0+) r^+(1) + ∫_0^1 φ'(1-t) r^+(t) dt`` for concave blocks.

    The integral is summed exactly over the common refinement of the
    quantile plateaus and the reflected curve knots.
    """
    _check(position, capacity, d)
    bad = [label for label, c in zip(d.partition.labels, d.curves) if not c.is_concave()]
    if bad:
        raise NotConcave(bad)
    q = quantiles(position, capacity)
    values = []
    for curve in d.curves:
        cuts = {0.0, 1.0, *q.upper.breakpoints, *(1.0 - t for t in curve.knots)}
        grid = sorted(t for t in cuts if 0.0 <= t <= 1.0)
        total = 0.0
        for u, v in zip(grid, grid[1:]):
            if v <= u:
                continue
            mid = 0.5 * (u + v)
            slope = curve.slope(curve.segment_of(1.0 - mid))
            total += slope * q.upper(mid) * (v - u)
        values.append(curve.jump_at_zero * q.at_one + total)
    return ConditionalValue(d.partition, tuple(values))


def generalized_var(position: Position, capacity: Capacity, alpha: float) -> float:
    """GVaR: ``r_X^-(α)``."""
    if not 0.0 < alpha < 1.0:
        raise InvalidValue(f"level must lie in (0, 1), got {alpha!r}")
    return quantiles(position, capacity).r_minus(alpha)


def generalized_avar(position: Position, capacity: Capacity, alpha: float) -> float:
    """GAVaR: ``1/(1-α) ∫_α^1 r_X^+(t) dt``."""
    if not 0.0 < alpha < 1.0:
        raise InvalidValue(f"level must lie in (0, 1), got {alpha!r}")
    return quantiles(position, capacity).upper_integral(alpha, 1.0) / (1.0 - alpha)


@dataclass(frozen=True)
class Comonotonicity:
    holds: bool
    witness: tuple[str, str] | None = None

    def __bool__(self) -> bool:
        return self.holds


def are_comonotonic(x: Position, y: Position) -> Comonotonicity:
    """Pairwise check ``(X(ω)-X(ϖ))(Y(ω)-Y(ϖ)) >= 0``."""
    if x.space != y.space:
        raise SpaceMismatch("positions live on different sample spaces")
    sx = np.sign(x.values[:, None] - x.values[None, :])
    sy = np.sign(y.values[:, None] - y.values[None, :])
    bad = np.argwhere(np.triu(sx * sy < 0))
    if bad.size:
        i, j = (int(k) for k in bad[0])
        return Comonotonicity(False, (x.space.atoms[i], x.space.atoms[j]))
    return Comonotonicity(True)


@dataclass(frozen=True)
class ComonotonicForm:
    """Common ordered step representation ``Σ x_i 1_{A_i}``, ``Σ y_i 1_{A_i}``."""

    space: SampleSpace
    events: tuple[Event, ...]
    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def reconstruct(self) -> tuple[Position, Position]:
        x = np.zeros(self.space.n)
        y = np.zeros(self.space.n)
        for event, xv, yv in zip(self.events, self.xs, self.ys):
            members = self.space.members(event)
            x[members] = xv
            y[members] = yv
        return Position(self.space, x), Position(self.space, y)


def comonotonic_decomposition(x: Position, y: Position) -> ComonotonicForm:
    """Sort atoms by (X, Y) descending and merge equal value pairs."""
    check = are_comonotonic(x, y)
    if not check.holds:
        assert check.witness is not None
        raise NotComonotonic(check.witness)
    if x.min < 0.0 or y.min < 0.0:
        raise NegativeInput("comonotonic decomposition needs non-negative positions")
    pairs = sorted(
        range(x.space.n), key=lambda i: (x.values[i], y.values[i]), reverse=True
    )
    events: list[Event] = []
    xs: list[float] = []
    ys: list[float] = []
    for i in pairs:
        xv, yv = float(x.values[i]), float(y.values[i])
        if xs and xs[-1] == xv and ys[-1] == yv:
            events[-1] |= 1 << i
        else:
            events.append(1 << i)
            xs.append(xv)
            ys.append(yv)
    return ComonotonicForm(x.space, tuple(events), tuple(xs), tuple(ys))


def choquet_of_form(
    form: ComonotonicForm, capacity: Capacity, d: RandomDistortion
) -> tuple[ConditionalValue, ConditionalValue]:
    """Step formula for both functions on the form's common chain."""
    if form.space != capacity.space:
        raise SpaceMismatch("form and capacity use different sample spaces")
    d.partition.check_space(form.space)
    unions: list[Event] = []
    mask = 0
    for event in form.events:
        mask |= event
        unions.append(mask)
    caps = capacity.values_of(unions)

    def integral(vals: tuple[float, ...]) -> ConditionalValue:
        padded = [*vals, 0.0]
        out = []
        for curve in d.curves:
            phi = curve.evaluate_many(caps)
            out.append(
                sum((padded[i] - padded[i + 1]) * float(phi[i]) for i in range(len(vals)))
            )
        return ConditionalValue(d.partition, tuple(out))

    return integral(form.xs), integral(form.ys)
