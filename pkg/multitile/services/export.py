"""Schema-versioned JSON for patches, censuses and complexity profiles."""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Dict

from ..data.exact import format_rational, parse_rational
from ..data.models import (
    CensusCell,
    ComplexityProfile,
    Patch,
    PatchMeta,
    PlacedTile,
    ScaleInterval,
    TileCensus,
    TimePoint,
)

SCHEMA_VERSION = 1


def _scalar(value) -> Any:
    return format_rational(value) if isinstance(value, (int, Fraction)) else value


def _read_scalar(value, exact: bool):
    return parse_rational(value) if exact else float(value)


def patch_document(patch: Patch) -> Dict[str, Any]:
    meta = patch.meta
    time = {"u": format_rational(meta.time.u)} if meta.time.is_exact else {"t": meta.time.approx}
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "patch",
        "meta": {
            "scheme_name": meta.scheme_name,
            "scheme_hash": meta.scheme_hash,
            "dimension": meta.dimension,
            "root": meta.root,
            "time": time,
            "frame_offset": [_scalar(c) for c in meta.frame_offset],
        },
        "tiles": [
            {
                "type": t.type,
                "scale": _scalar(t.scale),
                "offset": [_scalar(c) for c in t.offset],
                "path": list(t.path),
            }
            for t in patch.tiles
        ],
    }


def census_document(census: TileCensus) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "census",
        "total": census.total,
        "volume": _scalar(census.volume),
        "type_totals": {str(j): n for j, n in census.type_totals},
        "cells": [
            {
                "type": c.type,
                "a": format_rational(c.interval.a),
                "b": format_rational(c.interval.b),
                "closed_low": c.interval.closed_low,
                "closed_high": c.interval.closed_high,
                "count": c.count,
                "rate": c.rate,
            }
            for c in census.cells
        ],
    }


def profile_document(profile: ComplexityProfile) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "complexity",
        "c": list(profile.counts),
        "scales": [[[j, format_rational(s)] for j, s in row] for row in profile.scales],
    }


def export_json(result: Patch | TileCensus | ComplexityProfile) -> str:
    if isinstance(result, Patch):
        document = patch_document(result)
    elif isinstance(result, TileCensus):
        document = census_document(result)
    elif isinstance(result, ComplexityProfile):
        document = profile_document(result)
    else:
        raise TypeError(f"cannot export {type(result).__name__}")
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def _check(document: Dict[str, Any], kind: str) -> None:
    if document.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {document.get('schema_version')!r}")
    if document.get("kind") != kind:
        raise ValueError(f"expected a {kind} document, got {document.get('kind')!r}")


def load_patch_json(text: str) -> Patch:
    document = json.loads(text)
    _check(document, "patch")
    meta = document["meta"]
    exact = "u" in meta["time"]
    time = TimePoint.exact(meta["time"]["u"]) if exact else TimePoint.from_float(meta["time"]["t"])
    tiles = tuple(
        PlacedTile(
            t["type"],
            _read_scalar(t["scale"], exact),
            tuple(_read_scalar(c, exact) for c in t["offset"]),
            tuple(t["path"]),
        )
        for t in document["tiles"]
    )
    return Patch(
        tiles,
        PatchMeta(
            meta["scheme_name"],
            meta["scheme_hash"],
            meta["dimension"],
            meta["root"],
            time,
            tuple(_read_scalar(c, exact) for c in meta["frame_offset"]),
        ),
    )


def load_profile_json(text: str) -> ComplexityProfile:
    document = json.loads(text)
    _check(document, "complexity")
    scales = tuple(tuple((j, parse_rational(s)) for j, s in row) for row in document["scales"])
    return ComplexityProfile(tuple(document["c"]), scales)


def load_census_json(text: str) -> TileCensus:
    document = json.loads(text)
    _check(document, "census")
    cells = tuple(
        CensusCell(
            c["type"],
            ScaleInterval(parse_rational(c["a"]), parse_rational(c["b"]), c["closed_low"], c["closed_high"]),
            c["count"],
            c["rate"],
        )
        for c in document["cells"]
    )
    volume = document["volume"]
    return TileCensus(
        cells,
        tuple(sorted((int(j), n) for j, n in document["type_totals"].items())),
        document["total"],
        parse_rational(volume) if isinstance(volume, str) else volume,
    )
