"""Scenario files and result serialisation.

A scenario is a UTF-8 JSON object::

    {
      "schema": "choquet-risk/1",
      "atoms": ["a", "b", "c"],
      "capacity": {"kind": "table", "values": {"": 0, "a": 0.2, "a|b": 0.5, ...}},
      "partition": {"A": ["a"], "Ac": ["b", "c"]},
      "positions": {"X": [1, 0, 2], "Y": {"a": 0, "b": 1, "c": 1}},
      "distortions": {"D": [{"kind": "var", "alpha": 0.3}, {"kind": "identity"}]},
      "seed": 7
    }

Capacities are also accepted as ``{"kind": "distorted-probability",
"probability": [...], "distortion": <curve>}`` or ``{"kind":
"sup-of-probabilities", "probabilities": [[...], ...]}``. Curves are ``var`` /
``avar`` with ``alpha``, ``identity``, or ``segments`` with ``knots``,
``values-right-limit`` and ``values-at-knot``. Event keys are sorted atom
labels joined by ``|``.
"""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Iterable, Sequence, Set
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Protocol

from .capacity import (
    Capacity,
    CapacityGenerator,
    DistortedProbability,
    ExplicitTable,
    SupOfProbabilities,
    capacity_from_generator,
)
from .choquet import ConditionalValue
from .distortion import (
    DistortionCurve,
    RandomDistortion,
    avar_curve,
    identity_curve,
    var_curve,
)
from .dominance import DominanceVerdict, TestUtility
from .errors import (
    BlockCountMismatch,
    ScenarioSyntaxError,
    ScenarioValidationError,
    SchemaError,
    ValidationError,
)
from .logger import log_debug
from .representation import GridDistortion, RepresentationReport
from .space import BlockPartition, Position, SampleSpace

SCHEMA_VERSION = "choquet-risk/1"
DEFAULT_CSV_HEADER = ("position", "block", "value")

ResultFormat = Literal["json", "csv"]

_TOP_LEVEL = {"schema", "atoms", "capacity", "partition", "positions", "distortions", "seed"}


@dataclass(frozen=True, eq=False)
class Scenario:
    space: SampleSpace
    capacity: Capacity
    partition: BlockPartition
    positions: dict[str, Position] = field(default_factory=dict)
    distortions: dict[str, RandomDistortion] = field(default_factory=dict)
    seed: int | None = None

    def position(self, name: str) -> Position:
        try:
            return self.positions[name]
        except KeyError:
            raise SchemaError("$.positions", f"no position named {name!r}") from None

    def distortion(self, name: str) -> RandomDistortion:
        try:
            return self.distortions[name]
        except KeyError:
            raise SchemaError("$.distortions", f"no distortion named {name!r}") from None


# Parsing


class _DuplicateKey(Exception):
    def __init__(self, key: str) -> None:
        self.key = key


def _no_duplicates(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in pairs:
        if key in out:
            raise _DuplicateKey(key)
        out[key] = value
    return out


def _object(
    value: Any, path: str, required: set[str], optional: Set[str] = frozenset()
) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected an object, got {type(value).__name__}")
    missing = sorted(required - value.keys())
    if missing:
        raise SchemaError(path, f"missing field {missing[0]!r}")
    extra = sorted(value.keys() - required - optional)
    if extra:
        raise SchemaError(path, f"unexpected field {extra[0]!r}")
    return value


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {json.dumps(value)}")
    return float(value)


def _numbers(value: Any, path: str) -> list[float]:
    if not isinstance(value, list):
        raise SchemaError(path, "expected an array of numbers")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _strings(value: Any, path: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(path, "expected an array of strings")
    return value


def _validated(element: str, build: Any, *args: Any) -> Any:
    try:
        return build(*args)
    except ValidationError as e:
        raise ScenarioValidationError(element, e) from e


def _parse_curve(spec: Any, path: str, element: str) -> DistortionCurve:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SchemaError(path, "expected a curve object with a 'kind'")
    kind = spec["kind"]
    if kind in ("var", "avar"):
        _object(spec, path, {"kind", "alpha"})
        alpha = _number(spec["alpha"], f"{path}.alpha")
        return _validated(element, var_curve if kind == "var" else avar_curve, alpha)
    if kind == "identity":
        _object(spec, path, {"kind"})
        return identity_curve()
    if kind == "segments":
        _object(spec, path, {"kind", "knots", "values-right-limit", "values-at-knot"})
        return _validated(
            element,
            DistortionCurve.from_knots,
            _numbers(spec["knots"], f"{path}.knots"),
            _numbers(spec["values-right-limit"], f"{path}.values-right-limit"),
            _numbers(spec["values-at-knot"], f"{path}.values-at-knot"),
        )
    raise SchemaError(f"{path}.kind", f"unknown curve kind {kind!r}")


def _parse_capacity(raw: Any, space: SampleSpace) -> Capacity:
    path = "$.capacity"
    if not isinstance(raw, dict) or "kind" not in raw:
        raise SchemaError(path, "expected an object with a 'kind'")
    kind = raw["kind"]
    gen: CapacityGenerator
    if kind == "table":
        _object(raw, path, {"kind", "values"})
        values = raw["values"]
        if not isinstance(values, dict):
            raise SchemaError(f"{path}.values", "expected an object keyed by event")
        table: dict[int, float] = {}
        for key, value in values.items():
            event = _validated("capacity", space.parse_event_key, key)
            if event in table:
                raise SchemaError(f"{path}.values", f"event {key!r} listed twice")
            table[event] = _number(value, f"{path}.values[{key!r}]")
        for event in range(space.full + 1):
            if event not in table:
                raise SchemaError(
                    f"{path}.values", f"missing event {space.event_key(event)!r}"
                )
        gen = ExplicitTable(table)
    elif kind == "distorted-probability":
        _object(raw, path, {"kind", "probability"}, {"distortion"})
        psi = (
            _parse_curve(raw["distortion"], f"{path}.distortion", "capacity")
            if "distortion" in raw
            else identity_curve()
        )
        gen = DistortedProbability(tuple(_numbers(raw["probability"], f"{path}.probability")), psi)
    elif kind == "sup-of-probabilities":
        _object(raw, path, {"kind", "probabilities"})
        probs = raw["probabilities"]
        if not isinstance(probs, list):
            raise SchemaError(f"{path}.probabilities", "expected an array of arrays")
        gen = SupOfProbabilities(
            tuple(tuple(_numbers(p, f"{path}.probabilities[{i}]")) for i, p in enumerate(probs))
        )
    else:
        raise SchemaError(f"{path}.kind", f"unknown capacity kind {kind!r}")
    return _validated("capacity", capacity_from_generator, space, gen)


def _parse_position(raw: Any, name: str, space: SampleSpace) -> Position:
    path = f"$.positions.{name}"
    if isinstance(raw, dict):
        for label in raw:
            if label not in space.atoms:
                raise SchemaError(path, f"unknown atom {label!r}")
        missing = [a for a in space.atoms if a not in raw]
        if missing:
            raise SchemaError(path, f"missing value for atom {missing[0]!r}")
        values = [_number(raw[a], f"{path}.{a}") for a in space.atoms]
    else:
        values = _numbers(raw, path)
    return _validated(f"positions.{name}", Position.of, space, values)


def _parse_distortion(raw: Any, name: str, partition: BlockPartition) -> RandomDistortion:
    path = f"$.distortions.{name}"
    element = f"distortions.{name}"
    if isinstance(raw, dict):
        for label in raw:
            if label not in partition.labels:
                raise SchemaError(path, f"unknown block {label!r}")
        missing = [b for b in partition.labels if b not in raw]
        if missing:
            raise SchemaError(path, f"missing curve for block {missing[0]!r}")
        specs = [raw[b] for b in partition.labels]
    elif isinstance(raw, list):
        if len(raw) != partition.size:
            err = BlockCountMismatch(f"{partition.size} blocks but {len(raw)} curves")
            raise ScenarioValidationError(element, err) from err
        specs = raw
    else:
        raise SchemaError(path, "expected an array or an object of curves")
    curves = tuple(
        _parse_curve(spec, f"{path}.{label}", f"{element}.{label}")
        for label, spec in zip(partition.labels, specs)
    )
    return RandomDistortion(partition, curves)


def parse_scenario(data: bytes | str) -> Scenario:
    """Parse and fully validate a scenario file."""
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ScenarioSyntaxError(f"invalid UTF-8: {e.reason}", 1, e.start + 1) from e
    else:
        text = data
    try:
        raw = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as e:
        raise ScenarioSyntaxError(e.msg, e.lineno, e.colno) from e
    except _DuplicateKey as e:
        raise SchemaError("$", f"duplicate key {e.key!r}") from None

    doc = _object(raw, "$", {"schema", "atoms", "capacity"}, _TOP_LEVEL)
    if doc["schema"] != SCHEMA_VERSION:
        raise SchemaError(
            "$.schema", f"unsupported schema {doc['schema']!r}, expected {SCHEMA_VERSION!r}"
        )
    space = _validated("atoms", SampleSpace.of, _strings(doc["atoms"], "$.atoms"))
    capacity = _parse_capacity(doc["capacity"], space)

    if "partition" in doc:
        blocks = doc["partition"]
        if not isinstance(blocks, dict):
            raise SchemaError("$.partition", "expected an object of block -> atoms")
        labels = {b: _strings(v, f"$.partition.{b}") for b, v in blocks.items()}
        partition = _validated("partition", BlockPartition.from_labels, space, labels)
    else:
        partition = BlockPartition.trivial(space)

    positions_raw = doc.get("positions", {})
    if not isinstance(positions_raw, dict):
        raise SchemaError("$.positions", "expected an object of named positions")
    positions = {n: _parse_position(v, n, space) for n, v in positions_raw.items()}

    distortions_raw = doc.get("distortions", {})
    if not isinstance(distortions_raw, dict):
        raise SchemaError("$.distortions", "expected an object of named distortions")
    distortions = {n: _parse_distortion(v, n, partition) for n, v in distortions_raw.items()}

    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise SchemaError("$.seed", "expected a non-negative integer")

    log_debug(
        "Parsed scenario: %d atoms, %d blocks, %d positions, %d distortions",
        space.n,
        partition.size,
        len(positions),
        len(distortions),
    )
    return Scenario(space, capacity, partition, positions, distortions, seed)


def load_scenario(path: str | Path) -> Scenario:
    with open(path, "rb") as f:
        return parse_scenario(f.read())


# Writing


def curve_spec(curve: DistortionCurve) -> dict[str, Any]:
    if curve.kind in ("var", "avar"):
        return {"alpha": curve.alpha, "kind": curve.kind}
    if curve.kind == "identity":
        return {"kind": "identity"}
    knots, right, at = curve.knot_lists()
    return {"kind": "segments", "knots": knots, "values-at-knot": at, "values-right-limit": right}


def _capacity_spec(capacity: Capacity) -> dict[str, Any]:
    gen = capacity.generator
    space = capacity.space
    if isinstance(gen, DistortedProbability):
        return {
            "distortion": curve_spec(gen.distortion),
            "kind": "distorted-probability",
            "probability": list(gen.probability),
        }
    if isinstance(gen, SupOfProbabilities):
        return {"kind": "sup-of-probabilities", "probabilities": [list(p) for p in gen.probabilities]}
    table = capacity.as_mapping()
    return {"kind": "table", "values": {space.event_key(e): table[e] for e in sorted(table)}}


def serialize_scenario(scenario: Scenario) -> bytes:
    """Canonical scenario file: fixed key order, shortest round-trip floats."""
    s = scenario
    doc: dict[str, Any] = {
        "atoms": list(s.space.atoms),
        "capacity": _capacity_spec(s.capacity),
        "distortions": {
            name: {
                label: curve_spec(curve) for label, curve in zip(d.partition.labels, d.curves)
            }
            for name, d in sorted(s.distortions.items())
        },
        # block order is significant, so this object keeps partition order
        "partition": {
            label: list(s.space.labels_of(block))
            for label, block in zip(s.partition.labels, s.partition.blocks)
        },
        "positions": {name: x.values.tolist() for name, x in sorted(s.positions.items())},
        "schema": SCHEMA_VERSION,
    }
    if s.seed is not None:
        doc["seed"] = s.seed
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


# Results


class ResultRecord(Protocol):
    def as_dict(self) -> dict[str, Any]: ...

    def rows(self) -> list[dict[str, Any]]: ...


def _blocks(value: ConditionalValue) -> list[dict[str, Any]]:
    return [{"block": b, "value": v} for b, v in zip(value.partition.labels, value.values)]


@dataclass(frozen=True)
class EvaluationRecord:
    position: str
    value: ConditionalValue
    distortion: str | None = None
    oracle: ConditionalValue | None = None

    def as_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": "evaluation", "position": self.position}
        out["values"] = _blocks(self.value)
        if self.distortion is not None:
            out["distortion"] = self.distortion
        if self.oracle is not None:
            out["oracle"] = _blocks(self.oracle)
        return out

    def rows(self) -> list[dict[str, Any]]:
        rows = []
        for j, (block, v) in enumerate(zip(self.value.partition.labels, self.value.values)):
            row: dict[str, Any] = {"position": self.position}
            if self.distortion is not None:
                row["distortion"] = self.distortion
            row["block"] = block
            row["value"] = v
            if self.oracle is not None:
                row["oracle"] = self.oracle.values[j]
            rows.append(row)
        return rows


@dataclass(frozen=True)
class DominanceRecord:
    x: str
    y: str
    verdict: DominanceVerdict

    def as_dict(self) -> dict[str, Any]:
        return {"kind": "dominance", "x": self.x, "y": self.y, **self.verdict.as_dict()}

    def rows(self) -> list[dict[str, Any]]:
        w = self.verdict.witness
        return [
            {
                "x": self.x,
                "y": self.y,
                "order": self.verdict.order,
                "holds": self.verdict.holds,
                "witness_x": "" if w is None else w.x,
                "witness_lhs": "" if w is None else w.lhs,
                "witness_rhs": "" if w is None else w.rhs,
            }
        ]


@dataclass(frozen=True)
class FalsificationRecord:
    """Outcome of the increasing-convex falsifier; ``holds`` means no witness was found."""

    x: str
    y: str
    utility: TestUtility | None
    trials: int

    def as_dict(self) -> dict[str, Any]:
        return {
            "kind": "dominance",
            "order": "icx-falsify",
            "x": self.x,
            "y": self.y,
            "holds": self.utility is None,
            "trials": self.trials,
            "witness": None if self.utility is None else self.utility.as_dict(),
        }

    def rows(self) -> list[dict[str, Any]]:
        return [
            {
                "x": self.x,
                "y": self.y,
                "order": "icx-falsify",
                "holds": self.utility is None,
                "witness": "" if self.utility is None else json.dumps(self.utility.as_dict(), sort_keys=True),
            }
        ]


@dataclass(frozen=True)
class ExtractionRecord:
    rho: str
    ranking: tuple[str, ...]
    grid: GridDistortion

    def as_dict(self) -> dict[str, Any]:
        return {"kind": "extraction", "rho": self.rho, "ranking": list(self.ranking), **self.grid.as_dict()}

    def rows(self) -> list[dict[str, Any]]:
        return [
            {"block": label, "t": t, "value": v}
            for label, vs in zip(self.grid.partition.labels, self.grid.values)
            for t, v in zip(self.grid.grid, vs)
        ]


@dataclass(frozen=True)
class VerificationRecord:
    rho: str
    report: RepresentationReport

    def as_dict(self) -> dict[str, Any]:
        return {"kind": "verification", "rho": self.rho, **self.report.as_dict()}

    def rows(self) -> list[dict[str, Any]]:
        r = self.report
        return [
            {
                "rho": self.rho,
                "lift": r.lift,
                "adapted_error": r.adapted_error,
                "arbitrary_error": r.arbitrary_error,
                "concave_consistent": r.concave_consistent,
            }
        ]


@dataclass(frozen=True)
class TableRecord:
    """Plot-ready rows, e.g. survival or quantile tables."""

    kind: str
    table: tuple[dict[str, Any], ...]

    def as_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "rows": list(self.table)}

    def rows(self) -> list[dict[str, Any]]:
        return list(self.table)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_results(
    records: Iterable[ResultRecord],
    fmt: ResultFormat = "json",
    header: Sequence[str] = DEFAULT_CSV_HEADER,
) -> bytes:
    """Deterministic JSON (sorted keys) or CSV (one row per block or item)."""
    records = list(records)
    if fmt == "json":
        text = json.dumps([r.as_dict() for r in records], sort_keys=True, indent=2)
        return (text + "\n").encode("utf-8")
    if fmt != "csv":
        raise ValueError(f"unknown result format {fmt!r}")
    rows = [row for r in records for row in r.rows()]
    columns: list[str] = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns or list(header))
    for row in rows:
        writer.writerow(_cell(row[c]) if c in row else "" for c in columns)
    return buf.getvalue().encode("utf-8")
