"""Inducing a random distortion from a black-box conditional risk measure.

A risk measure ``rho`` is probed on indicator positions of a nested chain
``∅ = B_0 ⊂ B_1 ⊂ ... ⊂ B_n = Ω`` (top-k atoms of a ranking). The capacities
``c(B_k)`` form the achievable grid and ``rho(1_{B_k})`` the curve values on it.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from .capacity import Capacity, check_probability
from .choquet import ConditionalValue, rd_choquet
from .config import get_config
from .distortion import DistortionCurve, RandomDistortion
from .dominance import dominates_sl, dominates_st
from .errors import (
    ExtractionMissing,
    InvalidRanking,
    InvalidValue,
    NotNormalized,
    PluginError,
    SpaceMismatch,
    ValidationError,
    WellDefinednessViolation,
)
from .executor import map_ordered
from .logger import log_debug, log_info, log_warning
from .sampling import chain_adapted_position, random_comonotonic_pair, random_position
from .space import BlockPartition, Position, SampleSpace
from .types import Event, FloatArray, RiskMeasure

Lift = Literal["linear", "step"]

EXTRACTION_TOLERANCE = 1e-9
PROBE_LIMIT = 12


# Risk measures


@dataclass(frozen=True, eq=False)
class BuiltFromDistortion:
    """``rho(X) = E_{φ^G ∘ c}(X)``."""

    capacity: Capacity
    distortion: RandomDistortion
    pure: bool = True

    @property
    def space(self) -> SampleSpace:
        return self.capacity.space

    @property
    def partition(self) -> BlockPartition:
        return self.distortion.partition

    def evaluate(self, position: Position) -> ConditionalValue:
        return rd_choquet(position, self.capacity, self.distortion)


@dataclass(frozen=True, eq=False)
class ConditionalExpectation:
    """Block-wise conditional mean under a probability; zero-mass blocks use the plain mean."""

    space: SampleSpace
    partition: BlockPartition
    probability: tuple[float, ...]
    pure: bool = True

    def __post_init__(self) -> None:
        self.partition.check_space(self.space)
        object.__setattr__(self, "probability", check_probability(self.space, self.probability))

    def evaluate(self, position: Position) -> ConditionalValue:
        p = np.asarray(self.probability)
        values = []
        for block in self.partition.blocks:
            members = self.space.members(block)
            mass = float(p[members].sum())
            if mass > 0.0:
                values.append(float(np.dot(p[members], position.values[members])) / mass)
            else:
                values.append(float(position.values[members].mean()))
        return ConditionalValue(self.partition, tuple(values))


@dataclass(frozen=True, eq=False)
class CallableRiskMeasure:
    """In-process plugin: ``fn(values) -> per-block values``."""

    space: SampleSpace
    partition: BlockPartition
    fn: Callable[[FloatArray], Sequence[float]]
    pure: bool = False

    def evaluate(self, position: Position) -> ConditionalValue:
        if position.space != self.space:
            raise SpaceMismatch("position and risk measure use different sample spaces")
        return ConditionalValue(self.partition, tuple(self.fn(position.values)))


def _pump_lines(proc: subprocess.Popen[str], replies: queue.Queue[str]) -> None:
    """Forward plugin stdout lines; an empty string marks end of stream."""
    assert proc.stdout is not None
    try:
        for line in iter(proc.stdout.readline, ""):
            replies.put(line)
    except (OSError, ValueError):
        pass
    replies.put("")


class PluginRiskMeasure:
    """External risk measure behind a persistent subprocess.

    One JSON request per line on stdin::

        {"atoms": [...], "partition": {"A": [...], ...}, "values": [...]}

    and one JSON line back: a list with one number per block, or an object
    with such a list under ``"values"``.
    A reply slower than ``timeout`` seconds (default
    ``ChoquetConfig.plugin_timeout``) raises PluginError and stops the plugin.
    """

    def __init__(
        self,
        command: str | Sequence[str],
        space: SampleSpace,
        partition: BlockPartition,
        pure: bool = False,
        timeout: float | None = None,
    ) -> None:
        partition.check_space(space)
        self.timeout = get_config().plugin_timeout if timeout is None else timeout
        if not self.timeout > 0:
            raise ValueError("plugin timeout must be positive")
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.space = space
        self.partition = partition
        self.pure = pure
        self._lock = threading.Lock()
        self._blocks = {
            label: list(space.labels_of(block))
            for label, block in zip(partition.labels, partition.blocks)
        }
        try:
            self._proc: subprocess.Popen[str] | None = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as e:
            raise PluginError(f"cannot start plugin {self.command!r}: {e}") from e
        self._replies: queue.Queue[str] = queue.Queue()
        threading.Thread(
            target=_pump_lines,
            args=(self._proc, self._replies),
            name="choquet-plugin-reader",
            daemon=True,
        ).start()
        log_debug("Plugin started: %s", self.command)

    def evaluate(self, position: Position) -> ConditionalValue:
        if position.space != self.space:
            raise SpaceMismatch("position and plugin use different sample spaces")
        request = {
            "atoms": list(self.space.atoms),
            "partition": self._blocks,
            "values": position.values.tolist(),
        }
        with self._lock:
            proc = self._proc
            if proc is None or proc.stdin is None or proc.stdout is None:
                raise PluginError("plugin has been cleaned up")
            try:
                proc.stdin.write(json.dumps(request) + "\n")
                proc.stdin.flush()
            except (OSError, ValueError) as e:
                raise PluginError(f"plugin I/O failed: {e}") from e
            try:
                line = self._replies.get(timeout=self.timeout)
            except queue.Empty:
                line = None
        if line is None:
            log_warning("Plugin gave no reply within %.3g s; stopping %s", self.timeout, self.command)
            self.cleanup(wait=0.0)
            raise PluginError(f"plugin did not reply within {self.timeout:g} s")
        if not line:
            raise PluginError(f"plugin exited with code {proc.poll()!r}")
        try:
            reply: Any = json.loads(line)
        except json.JSONDecodeError as e:
            raise PluginError(f"plugin replied with invalid JSON: {line.strip()!r}") from e
        if isinstance(reply, dict):
            reply = reply.get("values")
        if not isinstance(reply, list) or len(reply) != self.partition.size:
            raise PluginError(f"plugin must return {self.partition.size} values, got {reply!r}")
        try:
            return ConditionalValue(self.partition, tuple(float(v) for v in reply))
        except (TypeError, ValueError) as e:
            raise PluginError(f"plugin returned non-numeric values: {reply!r}") from e

    def cleanup(self, wait: float = 5.0) -> None:
        """Close the pipes and wait up to ``wait`` seconds before killing the process."""
        with self._lock:
            proc, self._proc = self._proc, None
        if proc is None:
            return
        log_debug("Plugin cleanup: %s", self.command)
        try:
            if proc.stdin is not None:
                try:
                    proc.stdin.close()
                except BrokenPipeError:
                    log_debug("Plugin stdin already closed by %s", self.command)
            proc.wait(timeout=wait)
        except subprocess.TimeoutExpired:
            log_warning("Plugin did not exit; killing %s", self.command)
            proc.kill()
            proc.wait()
        finally:
            if proc.stdout is not None:
                proc.stdout.close()

    def __enter__(self) -> PluginRiskMeasure:
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        self.cleanup()


def evaluate_many(rho: RiskMeasure, positions: Sequence[Position]) -> list[ConditionalValue]:
    """Evaluate in input order; fans out only for pure risk measures."""
    if rho.pure:
        return map_ordered(rho.evaluate, positions)
    return [rho.evaluate(x) for x in positions]


# Chains and grids


@dataclass(frozen=True)
class NestedChain:
    space: SampleSpace
    ranking: tuple[str, ...]
    events: tuple[Event, ...]
    grid: tuple[float, ...]

    def levels(self) -> tuple[float, ...]:
        """Distinct grid values, ascending."""
        return tuple(sorted(set(self.grid)))


def build_nested_chain(capacity: Capacity, ranking: Sequence[str]) -> NestedChain:
    """``B_k`` = the first ``k`` atoms of ``ranking``, with ``t_k = c(B_k)``."""
    space = capacity.space
    ranking = tuple(ranking)
    if len(ranking) != space.n or sorted(ranking) != sorted(space.atoms):
        raise InvalidRanking(f"{list(ranking)} is not a permutation of {list(space.atoms)}")
    events = [0]
    for label in ranking:
        events.append(events[-1] | 1 << space.index(label))
    grid = tuple(capacity.values_of(events).tolist())
    return NestedChain(space, ranking, tuple(events), grid)


@dataclass(frozen=True)
class GridDistortion:
    """Per block, curve values on the distinct grid points ``0 = t_0 < ... < t_J = 1``."""

    partition: BlockPartition
    grid: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]

    def block_values(self, block: int | str) -> tuple[float, ...]:
        if isinstance(block, str):
            block = self.partition.labels.index(block)
        return self.values[block]

    def lift(self, kind: Lift = "linear") -> RandomDistortion:
        """Extend to [0, 1]: linear interpolation, or ``v_j`` on ``(t_{j-1}, t_j]``."""
        if kind not in ("linear", "step"):
            raise InvalidValue(f"unknown lift {kind!r}")
        curves = []
        for vs in self.values:
            if kind == "linear":
                starts, ends = vs[:-1], vs[1:]
            else:
                starts = ends = vs[1:]
            curves.append(DistortionCurve(self.grid, starts, ends, origin=vs[0]))
        return RandomDistortion(self.partition, tuple(curves))

    def concave_consistent(self, tol: float = 1e-12) -> bool:
        """Midpoint test ``v(s)/2 + v(t)/2 <= v((s+t)/2)`` on grid triples."""
        grid = np.asarray(self.grid)
        for i in range(grid.size):
            for j in range(i + 2, grid.size):
                mid = 0.5 * (grid[i] + grid[j])
                k = int(np.searchsorted(grid, mid))
                if k >= grid.size or abs(grid[k] - mid) > tol:
                    continue
                for vs in self.values:
                    if 0.5 * (vs[i] + vs[j]) > vs[k] + tol:
                        return False
        return True

    def as_dict(self) -> dict[str, Any]:
        return {
            "grid": list(self.grid),
            "values": {label: list(vs) for label, vs in zip(self.partition.labels, self.values)},
        }


def _violation(
    space: SampleSpace,
    partition: BlockPartition,
    first: tuple[Event, ConditionalValue],
    second: tuple[Event, ConditionalValue],
) -> WellDefinednessViolation | None:
    (a, va), (b, vb) = first, second
    for label, x, y in zip(partition.labels, va.values, vb.values):
        if abs(x - y) > EXTRACTION_TOLERANCE:
            keys = (space.event_key(a), space.event_key(b))
            return WellDefinednessViolation(
                f"events {keys[0]!r} and {keys[1]!r} have equal capacity but "
                f"rho gives {x!r} vs {y!r} on block {label!r}",
                keys,
                label,
            )
    return None


def extract_distortion(
    rho: RiskMeasure,
    chain: NestedChain,
    partition: BlockPartition,
    probe_events: bool = False,
    capacity: Capacity | None = None,
) -> GridDistortion:
    """``v_k(b) = rho(1_{B_k})(b)`` on the chain's grid.

    Chain events sharing a grid value must get the same values. With
    ``probe_events`` (needs ``capacity``, at most ``PROBE_LIMIT`` atoms) every
    other event whose capacity lies on the grid is checked as well.
    """
    partition.check_same(rho.partition)
    if rho.space != chain.space:
        raise SpaceMismatch("risk measure and chain use different sample spaces")
    space = chain.space
    results = evaluate_many(rho, [Position.indicator(space, e) for e in chain.events])

    for label, bottom, top in zip(partition.labels, results[0].values, results[-1].values):
        if abs(bottom) > EXTRACTION_TOLERANCE or abs(top - 1.0) > EXTRACTION_TOLERANCE:
            raise NotNormalized(
                f"rho(0) = {bottom!r} and rho(1) = {top!r} on block {label!r}; need 0 and 1",
                top,
            )

    first: dict[float, tuple[Event, ConditionalValue]] = {}
    for t, event, value in zip(chain.grid, chain.events, results):
        if t in first:
            err = _violation(space, partition, first[t], (event, value))
            if err is not None:
                raise err
        else:
            first[t] = (event, value)

    if probe_events:
        if capacity is None:
            raise InvalidValue("probing events needs the capacity")
        if space.n > PROBE_LIMIT:
            log_warning("Skipping event probe: %d atoms exceeds %d", space.n, PROBE_LIMIT)
        else:
            chain_events = set(chain.events)
            grid = np.asarray(sorted(first))
            probes: list[tuple[Event, float]] = []
            for event in range(1, space.full):
                if event in chain_events:
                    continue
                t = capacity(event)
                k = int(np.argmin(np.abs(grid - t)))
                if abs(grid[k] - t) <= 1e-12:
                    probes.append((event, float(grid[k])))
            probed = evaluate_many(rho, [Position.indicator(space, e) for e, _ in probes])
            for (event, t), value in zip(probes, probed):
                err = _violation(space, partition, first[t], (event, value))
                if err is not None:
                    raise err
            log_debug("Probed %d grid-valued events", len(probes))

    grid_points = tuple(sorted(first))
    values = tuple(
        tuple(first[t][1].values[b] for t in grid_points) for b in range(partition.size)
    )
    # Pin the ends exactly; normalisation was checked above.
    values = tuple((0.0, *vs[1:-1], 1.0) for vs in values)
    return GridDistortion(partition, grid_points, values)


# Axioms


@dataclass(frozen=True)
class AxiomResult:
    passed: bool
    trials: int
    counterexample: dict[str, Any] | None = None
    max_violation: float = 0.0
    required: bool = True


class AxiomReport(dict[str, AxiomResult]):
    """Axiom name to sampled result. Passing is evidence only."""

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.values() if r.required)

    def as_dict(self) -> dict[str, Any]:
        return {
            name: {
                "passed": r.passed,
                "required": r.required,
                "trials": r.trials,
                "max_violation": r.max_violation,
                "counterexample": r.counterexample,
            }
            for name, r in self.items()
        }


class _Tally:
    def __init__(self, required: bool = True) -> None:
        self.required = required
        self.trials = 0
        self.worst = 0.0
        self.example: dict[str, Any] | None = None

    def record(self, excess: float, tol: float, example: Callable[[], dict[str, Any]]) -> None:
        self.trials += 1
        if excess > tol and excess - tol > self.worst:
            self.worst = excess - tol
            self.example = example()

    def result(self) -> AxiomResult:
        return AxiomResult(self.example is None, self.trials, self.example, self.worst, self.required)


def _tol(*scales: float) -> float:
    return 1e-9 * (1.0 + sum(abs(s) for s in scales))


def _diff(a: ConditionalValue, b: ConditionalValue, shift: float = 0.0) -> FloatArray:
    return np.asarray(a.values) - np.asarray(b.values) - shift


def check_axioms(
    rho: RiskMeasure, capacity: Capacity, trials: int = 100, seed: int = 0
) -> AxiomReport:
    """Sample the axioms a Choquet-representable risk measure satisfies.

    Stop-loss consistency is reported but not required: only concave
    distortions have it.
    """
    if trials < 1:
        raise InvalidValue(f"trials must be at least 1, got {trials}")
    space = capacity.space
    if rho.space != space:
        raise SpaceMismatch("risk measure and capacity use different sample spaces")
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(5)]
    report = AxiomReport()

    zero, one = Position.constant(space, 0.0), Position.constant(space, 1.0)
    at_zero, at_one = evaluate_many(rho, [zero, one])
    norm = _Tally()
    norm.record(
        float(np.max(np.abs(at_zero.values))), 1e-9, lambda: {"rho(0)": list(at_zero.values)}
    )
    norm.record(
        float(np.max(np.abs(np.asarray(at_one.values) - 1.0))),
        1e-9,
        lambda: {"rho(1)": list(at_one.values)},
    )
    report["normalization"] = norm.result()

    def pairwise(
        name: str,
        rng: np.random.Generator,
        draw: Callable[[np.random.Generator], tuple[Position, Position, float]],
        check: Callable[[ConditionalValue, ConditionalValue, float], float],
        tol: Callable[[Position, Position, float], float],
    ) -> None:
        tally = _Tally()
        cases = [draw(rng) for _ in range(trials)]
        flat = [p for x, y, _ in cases for p in (x, y)]
        values = evaluate_many(rho, flat)
        for k, (x, y, a) in enumerate(cases):
            rx, ry = values[2 * k], values[2 * k + 1]
            tally.record(
                check(rx, ry, a),
                tol(x, y, a),
                lambda x=x, y=y, a=a, rx=rx, ry=ry: {
                    "x": x.values.tolist(),
                    "y": y.values.tolist(),
                    "a": a,
                    "rho_x": list(rx.values),
                    "rho_y": list(ry.values),
                },
            )
        report[name] = tally.result()

    def translated(rng: np.random.Generator) -> tuple[Position, Position, float]:
        x = random_position(rng, space)
        a = float(rng.uniform(-5.0, 5.0))
        return x, x + a, a

    pairwise(
        "translation_invariance",
        rngs[0],
        translated,
        lambda rx, ry, a: float(np.max(np.abs(_diff(ry, rx, a)))),
        lambda x, y, a: _tol(x.norm, a),
    )

    def scaled(rng: np.random.Generator) -> tuple[Position, Position, float]:
        x = random_position(rng, space)
        a = float(rng.uniform(0.0, 5.0))
        return x, x * a, a

    pairwise(
        "positive_homogeneity",
        rngs[1],
        scaled,
        lambda rx, ry, a: float(np.max(np.abs(np.asarray(ry.values) - a * np.asarray(rx.values)))),
        lambda x, y, a: _tol(a * x.norm),
    )

    # comonotonic additivity needs three evaluations per case
    tally = _Tally()
    pairs = [random_comonotonic_pair(rngs[2], space) for _ in range(trials)]
    values = evaluate_many(rho, [p for x, y in pairs for p in (x, y, x + y)])
    for k, (x, y) in enumerate(pairs):
        rx, ry, rs = values[3 * k : 3 * k + 3]
        excess = float(np.max(np.abs(np.asarray(rs.values) - rx.values - np.asarray(ry.values))))
        tally.record(
            excess,
            _tol(x.norm, y.norm),
            lambda x=x, y=y: {"x": x.values.tolist(), "y": y.values.tolist()},
        )
    report["comonotonic_additivity"] = tally.result()

    report["st_consistency"] = _order_consistency(rho, capacity, rngs[3], trials, dominates_st)
    report["sl_consistency"] = _order_consistency(
        rho, capacity, rngs[4], trials, dominates_sl, required=False
    )
    log_info(
        "Axiom check: %s",
        ", ".join(f"{k}={'ok' if v.passed else 'FAIL'}" for k, v in report.items()),
    )
    return report


def _candidates(rng: np.random.Generator, x: Position) -> list[Position]:
    """Pointwise-larger, permuted and spread-out companions of ``x``."""
    bump = np.abs(rng.normal(0.0, 1.0, size=x.space.n)) * (rng.random(x.space.n) < 0.5)
    perm = x.values[rng.permutation(x.space.n)]
    mean = float(x.values.mean())
    spread = mean + (x.values - mean) * rng.uniform(1.0, 2.0)
    return [x + Position(x.space, bump), Position(x.space, perm), Position(x.space, spread)]


def _order_consistency(
    rho: RiskMeasure,
    capacity: Capacity,
    rng: np.random.Generator,
    trials: int,
    order: Callable[[Position, Position, Capacity], Any],
    required: bool = True,
) -> AxiomResult:
    certified: list[tuple[Position, Position]] = []
    for _ in range(trials):
        x = random_position(rng, capacity.space)
        for y in _candidates(rng, x):
            if order(x, y, capacity):
                certified.append((x, y))
            if order(y, x, capacity):
                certified.append((y, x))
    tally = _Tally(required)
    values = evaluate_many(rho, [p for pair in certified for p in pair])
    for k, (x, y) in enumerate(certified):
        rx, ry = values[2 * k], values[2 * k + 1]
        tally.record(
            float(np.max(_diff(rx, ry))),
            _tol(x.norm, y.norm),
            lambda x=x, y=y, rx=rx, ry=ry: {
                "x": x.values.tolist(),
                "y": y.values.tolist(),
                "rho_x": list(rx.values),
                "rho_y": list(ry.values),
            },
        )
    return tally.result()


# Verification


@dataclass(frozen=True)
class RepresentationReport:
    lift: Lift
    grid: GridDistortion
    adapted_error: float
    arbitrary_error: float
    concave_consistent: bool | None
    trials: int = field(default=0)

    def as_dict(self) -> dict[str, Any]:
        return {
            "lift": self.lift,
            "grid": self.grid.as_dict(),
            "adapted_error": self.adapted_error,
            "arbitrary_error": self.arbitrary_error,
            "concave_consistent": self.concave_consistent,
            "trials": self.trials,
        }


def _max_error(
    rho: RiskMeasure, capacity: Capacity, d: RandomDistortion, positions: list[Position]
) -> float:
    observed = evaluate_many(rho, positions)
    worst = 0.0
    for x, value in zip(positions, observed):
        worst = max(worst, value.max_abs_diff(rd_choquet(x, capacity, d)))
    return worst


def _concavity_if_sl_consistent(
    grid: GridDistortion, axioms: AxiomReport | None
) -> bool | None:
    if axioms is None:
        return None
    sl = axioms.get("sl_consistency")
    if sl is None or sl.trials == 0 or not sl.passed:
        return None
    return grid.concave_consistent()


def verify_representation(
    rho: RiskMeasure,
    capacity: Capacity,
    chain: NestedChain,
    partition: BlockPartition,
    trials: int = 100,
    seed: int = 0,
    *,
    grid: GridDistortion | None = None,
    lift: Lift = "linear",
    axioms: AxiomReport | None = None,
) -> RepresentationReport:
    """Compare ``rho`` with the Choquet integral of the lifted extracted curve.

    ``adapted_error`` covers positions that are non-increasing along the
    chain's ranking (their survival values all lie on the grid);
    ``arbitrary_error`` covers random positions and, up to ``PROBE_LIMIT``
    atoms, every indicator.

    ``concave_consistent`` is the grid midpoint test, reported only when
    ``axioms`` shows passed stop-loss consistency sampling; otherwise None.
    """
    if chain.space != capacity.space:
        raise SpaceMismatch("chain and capacity use different sample spaces")
    if grid is None:
        try:
            grid = extract_distortion(rho, chain, partition)
        except ValidationError as e:
            raise ExtractionMissing(f"extraction failed: {e}") from e
    elif grid.grid != chain.levels() or grid.partition != partition:
        raise ExtractionMissing("extracted grid does not belong to this chain and partition")
    try:
        lifted = grid.lift(lift)
    except ValidationError as e:
        raise ExtractionMissing(f"extracted values do not form a distortion: {e}") from e

    rng = np.random.default_rng(seed)
    space = chain.space
    adapted = [chain_adapted_position(rng, space, chain.ranking) for _ in range(trials)]
    adapted += [Position.indicator(space, e) for e in chain.events]
    arbitrary = [random_position(rng, space) for _ in range(trials)]
    if space.n <= PROBE_LIMIT:
        arbitrary += [Position.indicator(space, e) for e in range(1, space.full)]

    report = RepresentationReport(
        lift,
        grid,
        _max_error(rho, capacity, lifted, adapted),
        _max_error(rho, capacity, lifted, arbitrary),
        _concavity_if_sl_consistent(grid, axioms),
        trials,
    )
    log_debug(
        "Representation: adapted %.3g, arbitrary %.3g", report.adapted_error, report.arbitrary_error
    )
    return report
