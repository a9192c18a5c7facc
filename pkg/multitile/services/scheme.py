from __future__ import annotations

import hashlib
import json
import logging
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Any, Dict, List

from sympy import integer_nthroot

from ..core.errors import ExactnessError, GeometryError, SchemeError
from ..data.exact import format_rational, parse_rational
from ..data.models import Check, Prototile, RuleChild, Scheme, ValidationReport
from . import geometry

logger = logging.getLogger(__name__)


def _rational(value: Any, where: str) -> Fraction:
    try:
        return parse_rational(value)
    except ValueError as exc:
        raise SchemeError(f"{where}: {exc}") from exc


def _require(mapping: Any, key: str, where: str) -> Any:
    if not isinstance(mapping, dict) or key not in mapping:
        raise SchemeError(f"{where}: missing field '{key}'")
    return mapping[key]


def _point(raw: Any, dimension: int, where: str) -> tuple:
    if not isinstance(raw, list) or len(raw) != dimension:
        raise SchemeError(f"{where}: expected {dimension} coordinates")
    return tuple(_rational(c, where) for c in raw)


def _prototile(raw: Any, dimension: int) -> Prototile:
    type_id = _require(raw, "id", "prototile")
    if not isinstance(type_id, int) or isinstance(type_id, bool):
        raise SchemeError(f"prototile id must be an integer, got {type_id!r}")
    where = f"prototile {type_id}"
    label = str(_require(raw, "label", where))
    vertices = tuple(_point(v, dimension, where) for v in _require(raw, "vertices", where))
    if dimension == 1 and len(vertices) != 2:
        raise SchemeError(f"{where}: an interval needs exactly two endpoints")
    if not geometry.is_valid_shape(vertices, dimension):
        raise SchemeError(f"{where}: not a simple polygon" if dimension == 2 else f"{where}: empty interval")
    return Prototile(type_id, label, dimension, vertices, geometry.volume(vertices, dimension))


def parse_scheme(document: str) -> Scheme:
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemeError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc

    name = str(_require(raw, "name", "scheme"))
    dimension = _require(raw, "dimension", "scheme")
    if dimension not in (1, 2):
        raise SchemeError(f"unsupported dimension {dimension!r}; geometry supports d=1 and d=2")

    prototiles = sorted((_prototile(p, dimension) for p in _require(raw, "prototiles", "scheme")), key=lambda p: p.id)
    if [p.id for p in prototiles] != list(range(1, len(prototiles) + 1)):
        raise SchemeError("prototile ids must be 1..n without gaps")
    labels = [p.label for p in prototiles]
    if len(set(labels)) != len(labels):
        raise SchemeError("prototile labels must be distinct")
    known = {p.id for p in prototiles}

    rules: Dict[int, tuple] = {}
    for rule in _require(raw, "rules", "scheme"):
        parent = _require(rule, "parent", "rule")
        if parent not in known:
            raise SchemeError(f"unknown prototile id {parent!r} as rule parent")
        if parent in rules:
            raise SchemeError(f"duplicate rule for prototile {parent}")
        children: List[RuleChild] = []
        for index, child in enumerate(_require(rule, "children", f"rule {parent}")):
            where = f"rule {parent}, child {index}"
            child_type = _require(child, "type", where)
            if child_type not in known:
                raise SchemeError(f"{where}: unknown prototile id {child_type!r}")
            scale = _rational(_require(child, "scale", where), where)
            if not 0 < scale < 1:
                raise SchemeError(f"{where}: scale outside (0,1): {format_rational(scale)}")
            offset = _point(_require(child, "offset", where), dimension, where)
            children.append(RuleChild(child_type, scale, offset))
        if not children:
            raise SchemeError(f"rule {parent} has no children")
        rules[parent] = tuple(children)
    missing = known - set(rules)
    if missing:
        raise SchemeError(f"no rule for prototile(s) {sorted(missing)}")

    scheme = Scheme(name, dimension, tuple(prototiles), tuple(rules[i] for i in sorted(rules)))
    logger.debug(
        "Scheme parsed",
        extra={"scheme": name, "prototiles": len(prototiles), "children": sum(len(r) for r in scheme.rules)},
    )
    return scheme


def load_scheme(path: Path) -> Scheme:
    return parse_scheme(Path(path).read_text(encoding="utf-8"))


def scheme_document(scheme: Scheme) -> dict:
    return {
        "name": scheme.name,
        "dimension": scheme.dimension,
        "prototiles": [
            {
                "id": p.id,
                "label": p.label,
                "vertices": [[format_rational(c) for c in v] for v in p.vertices],
            }
            for p in scheme.prototiles
        ],
        "rules": [
            {
                "parent": parent,
                "children": [
                    {
                        "type": c.child_type,
                        "scale": format_rational(c.scale),
                        "offset": [format_rational(o) for o in c.offset],
                    }
                    for c in scheme.rule(parent)
                ],
            }
            for parent in scheme.type_ids
        ],
    }


def serialize_scheme(scheme: Scheme) -> str:
    return json.dumps(scheme_document(scheme), sort_keys=True, indent=2) + "\n"


def scheme_hash(scheme: Scheme) -> str:
    return hashlib.sha256(serialize_scheme(scheme).encode("utf-8")).hexdigest()


def _unit_factor(volume: Fraction, dimension: int, label: str) -> Fraction:
    """``volume ** (-1/d)`` when it is rational."""
    if volume <= 0:
        raise GeometryError(f"prototile {label} has zero volume")
    num, num_exact = integer_nthroot(volume.denominator, dimension)
    den, den_exact = integer_nthroot(volume.numerator, dimension)
    if not (num_exact and den_exact):
        raise ExactnessError(
            f"prototile {label}: volume {format_rational(volume)} has no rational {dimension}-th root"
        )
    return Fraction(int(num), int(den))


def normalize(scheme: Scheme) -> Scheme:
    """Equivalent scheme with every prototile rescaled to unit volume."""
    factors = {p.id: _unit_factor(p.volume, scheme.dimension, p.label) for p in scheme.prototiles}
    if all(c == 1 for c in factors.values()):
        return scheme
    prototiles = tuple(
        Prototile(
            p.id,
            p.label,
            p.dimension,
            geometry.place(p.vertices, factors[p.id], (Fraction(0),) * scheme.dimension),
            Fraction(1),
        )
        for p in scheme.prototiles
    )
    rules = tuple(
        tuple(
            RuleChild(
                c.child_type,
                c.scale * factors[parent] / factors[c.child_type],
                tuple(factors[parent] * o for o in c.offset),
            )
            for c in scheme.rule(parent)
        )
        for parent in scheme.type_ids
    )
    logger.info("Scheme normalized", extra={"scheme": scheme.name, "factors": {k: str(v) for k, v in factors.items()}})
    return Scheme(scheme.name, scheme.dimension, prototiles, rules)


def child_shape(scheme: Scheme, child: RuleChild) -> geometry.Shape:
    return geometry.place(scheme.prototile(child.child_type).vertices, child.scale, child.offset)


def validate(scheme: Scheme) -> ValidationReport:
    d = scheme.dimension
    checks: List[Check] = []
    volume_sums = []
    for prototile in scheme.prototiles:
        parent = prototile.id
        shape_ok = geometry.is_valid_shape(prototile.vertices, d)
        checks.append(Check("simple polygon", parent, shape_ok, "" if shape_ok else "degenerate geometry"))

        rule = scheme.rule(parent)
        covered = sum((c.scale**d * scheme.prototile(c.child_type).volume for c in rule), Fraction(0))
        ratio = covered / prototile.volume
        volume_sums.append((parent, ratio))
        detail = f"sum of child volumes {format_rational(ratio)}, deficit {format_rational(1 - ratio)}"
        checks.append(Check("volume identity", parent, ratio == 1, detail))
        if not shape_ok:
            continue

        shapes = [child_shape(scheme, c) for c in rule]
        outside = [k for k, s in enumerate(shapes) if not geometry.contains(prototile.vertices, s, d)]
        checks.append(
            Check("containment", parent, not outside, f"children {outside} leave the parent" if outside else "")
        )
        overlaps = [(a, b) for a, b in combinations(range(len(shapes)), 2) if not geometry.disjoint(shapes[a], shapes[b], d)]
        checks.append(
            Check("disjointness", parent, not overlaps, f"overlapping children {overlaps}" if overlaps else "")
        )

    report = ValidationReport(scheme.name, tuple(volume_sums), tuple(checks), scheme.is_normalized)
    logger.info("Scheme validated", extra={"scheme": scheme.name, "ok": report.ok, "normalized": report.normalized})
    return report
