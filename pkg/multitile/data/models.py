from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import mpmath

from .exact import FreqValue, LogLinearValue, format_rational, parse_rational

Vector = Tuple[Fraction, ...]
Scalar = Fraction | float


def utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Prototile:
    id: int
    label: str
    dimension: int
    vertices: Tuple[Vector, ...]
    volume: Fraction


@dataclass(frozen=True)
class RuleChild:
    child_type: int
    scale: Fraction
    offset: Vector


@dataclass(frozen=True)
class Scheme:
    name: str
    dimension: int
    prototiles: Tuple[Prototile, ...]
    rules: Tuple[Tuple[RuleChild, ...], ...]

    @property
    def type_ids(self) -> Tuple[int, ...]:
        return tuple(p.id for p in self.prototiles)

    def prototile(self, type_id: int) -> Prototile:
        if not 1 <= type_id <= len(self.prototiles):
            raise ValueError(f"unknown prototile id {type_id}")
        return self.prototiles[type_id - 1]

    def rule(self, type_id: int) -> Tuple[RuleChild, ...]:
        self.prototile(type_id)
        return self.rules[type_id - 1]

    def type_of(self, label_or_id: str | int) -> int:
        if isinstance(label_or_id, int):
            return self.prototile(label_or_id).id
        text = label_or_id.strip()
        if text.isdigit():
            return self.prototile(int(text)).id
        for prototile in self.prototiles:
            if prototile.label == text:
                return prototile.id
        raise ValueError(f"unknown prototile {label_or_id!r}")

    @property
    def is_normalized(self) -> bool:
        return all(p.volume == 1 for p in self.prototiles)


@dataclass(frozen=True)
class Check:
    name: str
    parent: int
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    scheme_name: str
    volume_sums: Tuple[Tuple[int, Fraction], ...]
    checks: Tuple[Check, ...]
    normalized: bool

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def deficit(self, parent: int) -> Fraction:
        return 1 - dict(self.volume_sums)[parent]

    def lines(self) -> List[str]:
        volume = [c for c in self.checks if c.name == "volume identity"]
        out = [f"scheme: {self.scheme_name}"]
        if all(c.passed for c in volume):
            out.append("volume identity: exact pass")
        else:
            for check in volume:
                if not check.passed:
                    out.append(f"volume identity: FAIL for prototile {check.parent} ({check.detail})")
        for name in ("disjointness", "containment", "simple polygon"):
            group = [c for c in self.checks if c.name == name]
            if not group:
                continue
            bad = [c for c in group if not c.passed]
            if not bad:
                out.append(f"{name}: exact pass")
            for check in bad:
                out.append(f"{name}: FAIL for prototile {check.parent} ({check.detail})")
        out.append(f"normalized: {'yes' if self.normalized else 'no'}")
        return out


_TIME_RE = re.compile(r"^\s*(?:(\d+)\s*\*?\s*)?ln\s*(?:\(\s*([^)]+?)\s*\)|(\d+))\s*$")


@dataclass(frozen=True)
class TimePoint:
    """A semi-flow time: exactly ``ln(u)`` for rational ``u`` or a float."""

    u: Optional[Fraction] = None
    approx: Optional[float] = None

    def __post_init__(self) -> None:
        if (self.u is None) == (self.approx is None):
            raise ValueError("TimePoint needs exactly one of u or approx")
        if self.u is not None and self.u < 1:
            raise ValueError(f"time must be non-negative, got ln({self.u})")
        if self.approx is not None and self.approx < 0:
            raise ValueError(f"time must be non-negative, got {self.approx}")

    @classmethod
    def exact(cls, u: Fraction | int | str) -> "TimePoint":
        if isinstance(u, str):
            u = parse_rational(u)
        return cls(u=Fraction(u))

    @classmethod
    def from_float(cls, t: float) -> "TimePoint":
        return cls(approx=float(t))

    @classmethod
    def from_log(cls, value: LogLinearValue) -> "TimePoint":
        return cls(u=value.exp_rational())

    @classmethod
    def parse(cls, text: str) -> "TimePoint":
        """``"0"``, ``"ln5"``, ``"ln(5/3)"``, ``"2ln(3/2)"`` are exact; decimals are float mode."""
        text = text.strip()
        if text == "0":
            return cls.exact(1)
        match = _TIME_RE.match(text)
        if match:
            power = int(match.group(1) or 1)
            u = parse_rational(match.group(2) or match.group(3))
            return cls.exact(u**power)
        try:
            return cls.from_float(float(text))
        except ValueError as exc:
            raise ValueError(f"cannot parse time {text!r}; use ln(p/q) or a decimal") from exc

    @property
    def is_exact(self) -> bool:
        return self.u is not None

    @property
    def value(self) -> LogLinearValue:
        if self.u is None:
            raise ValueError("float-mode time has no exact value")
        return LogLinearValue.log(self.u)

    @property
    def inflation(self) -> Scalar:
        if self.u is not None:
            return self.u
        return float(mpmath.exp(self.approx))

    def times(self, k: int) -> "TimePoint":
        if self.u is not None:
            return TimePoint(u=self.u**k)
        return TimePoint(approx=self.approx * k)

    def __float__(self) -> float:
        if self.u is not None:
            return float(mpmath.log(mpmath.mpf(self.u.numerator) / self.u.denominator))
        return float(self.approx)

    def __str__(self) -> str:
        if self.u is None:
            return repr(self.approx)
        return str(self.value)


@dataclass(frozen=True)
class PlacedTile:
    type: int
    scale: Scalar
    offset: Vector
    path: Tuple[int, ...] = ()

    @property
    def depth(self) -> int:
        return len(self.path)

    def key(self) -> Tuple[int, Scalar, Vector]:
        """Identity of the placed tile without its ancestry."""
        return (self.type, self.scale, self.offset)

    def shifted(self, by: Sequence[Fraction]) -> "PlacedTile":
        return PlacedTile(self.type, self.scale, tuple(o + b for o, b in zip(self.offset, by)), self.path)


@dataclass(frozen=True)
class PatchMeta:
    scheme_name: str
    scheme_hash: str
    dimension: int
    root: int
    time: TimePoint
    frame_offset: Vector


@dataclass(frozen=True)
class Patch:
    tiles: Tuple[PlacedTile, ...]
    meta: PatchMeta

    def __len__(self) -> int:
        return len(self.tiles)

    @property
    def dimension(self) -> int:
        return self.meta.dimension

    @property
    def is_exact(self) -> bool:
        return self.meta.time.is_exact

    @property
    def volume(self) -> Scalar:
        """``u^d`` for a prototile of unit volume."""
        return self.meta.time.inflation**self.dimension

    def tile_set(self) -> frozenset:
        return frozenset(t.key() for t in self.tiles)


@dataclass(frozen=True)
class StationaryAnchor:
    root_type: int
    period: TimePoint
    control_point: Vector
    child_path: Tuple[int, ...]
    ratio: Fraction
    offset_chain: Vector

    @property
    def chain(self) -> Vector:
        return self.offset_chain

    def __str__(self) -> str:
        point = ", ".join(format_rational(c) for c in self.control_point)
        path = ".".join(str(i) for i in self.child_path)
        return f"type {self.root_type} period {self.period} path {path} control point ({point})"


@dataclass(frozen=True)
class SupertileGroup:
    prefix: Tuple[int, ...]
    type: int
    scale: Fraction
    offset: Vector
    tiles: Tuple[PlacedTile, ...]


@dataclass(frozen=True)
class ScaleInterval:
    a: Fraction
    b: Fraction
    closed_low: bool = True
    closed_high: bool = True

    def __post_init__(self) -> None:
        if not 0 <= self.a < self.b <= 1:
            raise ValueError(f"scale interval needs 0 <= a < b <= 1, got [{self.a}, {self.b}]")

    @classmethod
    def parse(cls, a: str, b: str) -> "ScaleInterval":
        return cls(parse_rational(a), parse_rational(b))

    @classmethod
    def half_open(cls, a: Fraction, b: Fraction) -> "ScaleInterval":
        return cls(Fraction(a), Fraction(b), closed_low=False, closed_high=True)

    def contains(self, x: Scalar) -> bool:
        low_ok = x >= self.a if self.closed_low else x > self.a
        high_ok = x <= self.b if self.closed_high else x < self.b
        return low_ok and high_ok

    def __str__(self) -> str:
        left = "[" if self.closed_low else "("
        right = "]" if self.closed_high else ")"
        return f"{left}{format_rational(self.a)}, {format_rational(self.b)}{right}"


@dataclass(frozen=True)
class DilationInterval:
    low: Fraction
    high: Fraction

    def __post_init__(self) -> None:
        if not 0 < self.low <= self.high:
            raise ValueError(f"dilation interval needs 0 < low <= high, got [{self.low}, {self.high}]")

    def contains(self, x: Fraction) -> bool:
        return self.low <= x <= self.high


@dataclass(frozen=True)
class Box:
    low: Vector
    high: Vector

    def __post_init__(self) -> None:
        if len(self.low) != len(self.high) or any(a >= b for a, b in zip(self.low, self.high)):
            raise ValueError("box needs low < high in every coordinate")

    @property
    def volume(self) -> Fraction:
        v = Fraction(1)
        for a, b in zip(self.low, self.high):
            v *= b - a
        return v


@dataclass(frozen=True)
class CensusCell:
    type: int
    interval: ScaleInterval
    count: int
    rate: float


@dataclass(frozen=True)
class TileCensus:
    cells: Tuple[CensusCell, ...]
    type_totals: Tuple[Tuple[int, int], ...]
    total: int
    volume: Scalar

    def count(self, type_id: int, interval: ScaleInterval) -> int:
        for cell in self.cells:
            if cell.type == type_id and cell.interval == interval:
                return cell.count
        raise KeyError(f"no census cell for type {type_id} on {interval}")

    def type_total(self, type_id: int) -> int:
        return dict(self.type_totals)[type_id]


@dataclass(frozen=True)
class ComplexityProfile:
    counts: Tuple[int, ...]
    scales: Tuple[Tuple[Tuple[int, Fraction], ...], ...]

    def c(self, k: int) -> int:
        return self.counts[k]

    @property
    def k_max(self) -> int:
        return len(self.counts) - 1


@dataclass(frozen=True)
class DiscrepancyPoint:
    time: TimePoint
    count: int
    expected: float
    discrepancy: float
    relative: float
    distinct: int
    ceiling: int


@dataclass(frozen=True)
class EmpiricalRate:
    horizon: float
    times: Tuple[TimePoint, ...]
    rates: Tuple[float, ...]
    mean: float
    median: float


@dataclass(frozen=True)
class OccurrenceCount:
    L: int
    N: int


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    length: LogLinearValue | float
    scale: Optional[Fraction]
    child_index: int

    @property
    def is_exact(self) -> bool:
        return isinstance(self.length, LogLinearValue)


@dataclass(frozen=True)
class SubstGraph:
    vertex_count: int
    edges: Tuple[Edge, ...]
    _out: Mapping[int, Tuple[Edge, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        out: Dict[int, List[Edge]] = {v: [] for v in self.vertices}
        for edge in self.edges:
            out[edge.source].append(edge)
        object.__setattr__(self, "_out", {v: tuple(es) for v, es in out.items()})

    @property
    def vertices(self) -> range:
        return range(1, self.vertex_count + 1)

    @property
    def is_exact(self) -> bool:
        return all(e.is_exact for e in self.edges)

    def out_edges(self, vertex: int) -> Tuple[Edge, ...]:
        return self._out[vertex]


@dataclass(frozen=True)
class CycleClass:
    """Simple vertex cycle together with one length and its edge-sequence count."""

    vertices: Tuple[int, ...]
    length: LogLinearValue | float
    multiplicity: int


INCOMMENSURABLE = "incommensurable"
COMMENSURABLE = "commensurable"
HEURISTIC_INCOMMENSURABLE = "heuristic-incommensurable"
HEURISTIC_COMMENSURABLE = "heuristic-commensurable"


@dataclass(frozen=True)
class CommensurabilityVerdict:
    kind: str
    witness: Tuple[CycleClass, ...] = ()
    generator: Optional[LogLinearValue] = None
    note: str = ""
    cycles: Tuple[CycleClass, ...] = ()

    @property
    def is_exact(self) -> bool:
        return self.kind in (INCOMMENSURABLE, COMMENSURABLE)

    @property
    def is_incommensurable(self) -> bool:
        return self.kind in (INCOMMENSURABLE, HEURISTIC_INCOMMENSURABLE)

    def __str__(self) -> str:
        if self.kind == INCOMMENSURABLE:
            ordered = sorted(self.witness, key=lambda c: c.length, reverse=True)
            return f"incommensurable (witness: {', '.join(str(c.length) for c in ordered)})"
        if self.kind == COMMENSURABLE:
            return f"commensurable (generator: {self.generator})"
        label = "incommensurable" if self.kind == HEURISTIC_INCOMMENSURABLE else "commensurable"
        return f"heuristically {label} ({self.note})"


@dataclass(frozen=True)
class GraphMatrixEval:
    s: int
    values: Tuple[Tuple[Fraction, ...], ...]
    derivative: Tuple[Tuple[LogLinearValue, ...], ...]

    def row_sums(self) -> Tuple[Fraction, ...]:
        return tuple(sum(row, Fraction(0)) for row in self.values)


@dataclass(frozen=True)
class QMatrix:
    numerator: Tuple[Tuple[Fraction, ...], ...]
    denominator: LogLinearValue

    def q(self, h: int) -> FreqValue:
        """Path-count rate for terminal vertex ``h`` (prototile id)."""
        return FreqValue(self.numerator[0][h - 1], self.denominator)


@dataclass(frozen=True)
class RunManifest:
    command: str
    scheme_hash: str
    budget: int
    workers: int
    precision: int
    output_hashes: Dict[str, str]
    wall_time: float
    created_at: str = field(default_factory=utc_now)
