"""Empirical measurements on generated patches."""

from __future__ import annotations

import logging
import math
from collections import Counter
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import mpmath
import numpy as np
import pandas as pd

from ..core.config import get_settings
from ..core.logging import scheme_logger
from ..data.exact import format_rational
from ..data.models import (
    Box,
    CensusCell,
    ComplexityProfile,
    DilationInterval,
    DiscrepancyPoint,
    EmpiricalRate,
    OccurrenceCount,
    Patch,
    PlacedTile,
    ScaleInterval,
    Scheme,
    StationaryAnchor,
    TileCensus,
    TimePoint,
)
from . import geometry
from .asymptotics import phi_total
from .flow import distinct_tiles, tile_histogram
from .graph import build_graph, edge_classes

logger = logging.getLogger(__name__)


def tile_shape(scheme: Scheme, tile: PlacedTile) -> geometry.Shape:
    return geometry.place(scheme.prototile(tile.type).vertices, tile.scale, tile.offset)


def _in_region(scheme: Scheme, tile: PlacedTile, region: Optional[Box]) -> bool:
    if region is None:
        return True
    return geometry.box_contains(region.low, region.high, tile_shape(scheme, tile))


def census(
    patch: Patch,
    partitions: Mapping[int, Sequence[ScaleInterval]],
    *,
    scheme: Optional[Scheme] = None,
    region: Optional[Box] = None,
) -> TileCensus:
    """Tile counts per (type, scale interval); ``region`` keeps tiles whose support lies inside it."""
    if not patch.is_exact:
        raise ValueError("census needs an exact patch")
    if region is not None and scheme is None:
        raise ValueError("a census region needs the scheme for tile geometry")
    volume = region.volume if region is not None else patch.volume
    counts: Counter = Counter()
    totals: Counter = Counter()
    for tile in patch.tiles:
        if not _in_region(scheme, tile, region):
            continue
        totals[tile.type] += 1
        for interval in partitions.get(tile.type, ()):
            if interval.contains(tile.scale):
                counts[(tile.type, interval)] += 1
    cells = tuple(
        CensusCell(type_id, interval, counts[(type_id, interval)], float(Fraction(counts[(type_id, interval)]) / volume))
        for type_id in sorted(partitions)
        for interval in partitions[type_id]
    )
    type_ids = sorted(set(totals) | set(partitions))
    return TileCensus(cells, tuple((j, totals[j]) for j in type_ids), sum(totals.values()), volume)


def census_frame(result: TileCensus) -> pd.DataFrame:
    records = [
        {
            "type": cell.type,
            "interval": str(cell.interval),
            "count": cell.count,
            "rate": cell.rate,
        }
        for cell in result.cells
    ]
    return pd.DataFrame(records, columns=["type", "interval", "count", "rate"])


def complexity(
    scheme: Scheme, anchor: StationaryAnchor, k_max: int, budget: Optional[int] = None
) -> ComplexityProfile:
    """Distinct (type, scale) pairs of F_{ks}(T_i) for k = 0..k_max."""
    counts: List[int] = []
    scales: List[Tuple[Tuple[int, Fraction], ...]] = []
    for k in range(k_max + 1):
        keys = sorted(distinct_tiles(scheme, anchor.root_type, anchor.period.times(k), budget))
        counts.append(len(keys))
        scales.append(tuple(keys))
    scheme_logger(logger, scheme).info("Complexity profile computed", extra={"k_max": k_max, "counts": counts})
    return ComplexityProfile(tuple(counts), tuple(scales))


def complexity_frame(profile: ComplexityProfile) -> pd.DataFrame:
    return pd.DataFrame({"k": range(len(profile.counts)), "c_k": list(profile.counts)})


def _full_edge_bound(scheme: Scheme, u: Fraction) -> int:
    """Largest number of whole edges a path of length ln(u) can traverse."""
    shortest_edge = 1 / max(c.scale for rule in scheme.rules for c in rule)
    n, reach = 0, shortest_edge
    while reach <= u:
        n += 1
        reach *= shortest_edge
    return n


def distinct_tile_ceiling(scheme: Scheme, t: TimePoint) -> int:
    """Bound on pairwise non-equivalent tiles of F_t from multisets of whole edge classes."""
    classes = len(edge_classes(build_graph(scheme)))
    if t.u <= 1:
        return 1
    n_max = _full_edge_bound(scheme, t.u)
    multisets = sum(math.comb(n + classes - 1, classes - 1) for n in range(n_max + 1))
    return classes * multisets + 1


def discrepancy_series(
    scheme: Scheme, i: int, times: Sequence[TimePoint], precision: Optional[int] = None
) -> List[DiscrepancyPoint]:
    precision = precision or get_settings().precision
    rate = phi_total(scheme)
    d = scheme.dimension
    points: List[DiscrepancyPoint] = []
    with mpmath.workdps(precision + 10):
        constant = rate.evaluate(precision)
        for t in times:
            histogram = tile_histogram(scheme, i, t)
            count = sum(histogram.values())
            volume = mpmath.mpf(t.u.numerator) ** d / mpmath.mpf(t.u.denominator) ** d
            expected = constant * volume
            gap = abs(count - expected)
            points.append(
                DiscrepancyPoint(
                    t,
                    count,
                    float(expected),
                    float(gap),
                    float(gap / volume),
                    len(histogram),
                    distinct_tile_ceiling(scheme, t),
                )
            )
    return points


def distinct_growth(points: Sequence[DiscrepancyPoint], edge_count: int) -> Tuple[float, float]:
    """Fitted constant C of ``distinct <= C t^|E|`` and the log-log slope of distinct counts."""
    usable = [(float(p.time), p.distinct) for p in points if float(p.time) > 1]
    if not usable:
        return 0.0, 0.0
    c = max(n / t**edge_count for t, n in usable)
    if len(usable) < 2:
        return c, 0.0
    x = np.log([t for t, _ in usable])
    y = np.log([n for _, n in usable])
    slope = float(np.polyfit(x, y, 1)[0])
    return c, slope


def discrepancy_frame(points: Sequence[DiscrepancyPoint]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "t_num": p.time.u.numerator,
                "t_den": p.time.u.denominator,
                "count": p.count,
                "expected": p.expected,
                "discrepancy": p.discrepancy,
            }
            for p in points
        ],
        columns=["t_num", "t_den", "count", "expected", "discrepancy"],
    )


def count_jumps(scheme: Scheme, i: int, t: TimePoint, eps: TimePoint) -> int:
    """``#F_{t+eps} - #F_t``."""
    later = TimePoint(u=t.u * eps.u)
    return sum(tile_histogram(scheme, i, later).values()) - sum(tile_histogram(scheme, i, t).values())


def sample_times(horizon: float, samples: int = 120) -> List[TimePoint]:
    """Exact times ln(u_k) spread over [horizon - 1, horizon]."""
    times = []
    for k in range(samples):
        s = horizon - 1 + k / (samples - 1) if samples > 1 else horizon
        u = Fraction(math.exp(s)).limit_denominator(1000)
        times.append(TimePoint.exact(max(u, Fraction(1))))
    return times


def empirical_rate(
    scheme: Scheme,
    i: int,
    j: Optional[int],
    interval: Optional[ScaleInterval],
    horizon: float,
    samples: int = 120,
) -> EmpiricalRate:
    """Mean of count / u^d over sample times in [horizon - 1, horizon]; ``j=None`` counts every type.

    The median is kept alongside for comparison; it is biased by the oscillating error term.
    """
    d = scheme.dimension
    times = sample_times(horizon, samples)
    rates = []
    for t in times:
        histogram = tile_histogram(scheme, i, t)
        count = sum(
            n
            for (type_id, scale), n in histogram.items()
            if (j is None or type_id == j) and (interval is None or interval.contains(scale))
        )
        rates.append(float(Fraction(count) / t.u**d))
    mean, median = float(np.mean(rates)), float(np.median(rates))
    scheme_logger(logger, scheme).info("Empirical rate measured", extra={"horizon": horizon, "samples": samples, "mean": mean})
    return EmpiricalRate(horizon, tuple(times), tuple(rates), mean, median)


def scale_gaps(scales, low: Fraction, high: Fraction) -> Fraction:
    """Largest gap of the scale set inside (low, high], both ends included."""
    inside = sorted({s for s in scales if low < s <= high})
    points = [low] + inside + ([] if inside and inside[-1] == high else [high])
    return max(b - a for a, b in zip(points, points[1:]))


def extract_patch(patch: Patch, box: Box, scheme: Scheme) -> Patch:
    """Sub-patch of the tiles whose support lies in ``box``."""
    tiles = tuple(t for t in patch.tiles if _in_region(scheme, t, box))
    return Patch(tiles, patch.meta)


def _canonical(needle: Patch) -> Tuple[PlacedTile, List[Tuple[int, Fraction, Tuple[Fraction, ...]]]]:
    anchor = min(needle.tiles, key=lambda t: (t.offset, t.type, t.scale))
    top = max(t.scale for t in needle.tiles)
    rest = [
        (t.type, t.scale / top, tuple((o - a) / top for o, a in zip(t.offset, anchor.offset)))
        for t in needle.tiles
        if t is not anchor
    ]
    return PlacedTile(anchor.type, anchor.scale / top, (Fraction(0),) * len(anchor.offset)), rest


def count_occurrences(
    haystack: Patch,
    needle: Patch,
    interval: DilationInterval,
    region: Box,
    scheme: Scheme,
) -> OccurrenceCount:
    """Counts L (support inside ``region``) and N (support meeting it) of dilated copies of ``needle``."""
    if not needle.tiles:
        raise ValueError("needle patch is empty")
    if not (haystack.is_exact and needle.is_exact):
        raise ValueError("occurrence counting needs exact patches")
    anchor, rest = _canonical(needle)
    index: Dict[Tuple[int, Fraction, Tuple[Fraction, ...]], PlacedTile] = {t.key(): t for t in haystack.tiles}
    inside = meets = 0
    for tile in haystack.tiles:
        if tile.type != anchor.type:
            continue
        dilation = tile.scale / anchor.scale
        if not interval.contains(dilation):
            continue
        matched = [tile]
        for type_id, scale, offset in rest:
            key = (type_id, dilation * scale, tuple(g + dilation * o for g, o in zip(tile.offset, offset)))
            hit = index.get(key)
            if hit is None:
                break
            matched.append(hit)
        else:
            shapes = [tile_shape(scheme, t) for t in matched]
            if all(geometry.box_contains(region.low, region.high, s) for s in shapes):
                inside += 1
            if any(geometry.box_intersects(region.low, region.high, s) for s in shapes):
                meets += 1
    scheme_logger(logger, scheme).debug(
        "Occurrences counted",
        extra={"needle_tiles": len(needle.tiles), "interval": f"[{format_rational(interval.low)}, {format_rational(interval.high)}]", "L": inside, "N": meets},
    )
    return OccurrenceCount(inside, meets)
