import random
from fractions import Fraction

import pytest

from multitile.data.models import Box, DilationInterval, Patch, ScaleInterval, TimePoint
from multitile.services.asymptotics import legal_interval
from multitile.services.flow import anchor_from_path, distinct_tiles, generate, stationary_patch
from multitile.services.graph import build_graph
from multitile.services.statistics import (
    census,
    census_frame,
    complexity,
    complexity_frame,
    count_jumps,
    count_occurrences,
    discrepancy_frame,
    discrepancy_series,
    distinct_growth,
    distinct_tile_ceiling,
    empirical_rate,
    extract_patch,
    sample_times,
    scale_gaps,
)


def test_square_census_after_one_step(square):
    patch = generate(square, 1, TimePoint.parse("ln(5/3)"))
    partitions = {1: [ScaleInterval(Fraction(1, 3), Fraction(1, 3) + Fraction(1, 100)), ScaleInterval(Fraction(99, 100), Fraction(1))]}
    result = census(patch, partitions)
    assert [cell.count for cell in result.cells] == [16, 1]
    assert result.total == 17
    assert result.volume == Fraction(25, 9)
    assert result.cells[1].rate == pytest.approx(9 / 25)


def test_census_partition_adds_up(triangles):
    patch = generate(triangles, 1, TimePoint.parse("ln7"))
    cut = Fraction(1, 2)
    partitions = {
        j: [ScaleInterval(legal_interval(triangles, j).a, cut, closed_low=False), ScaleInterval(cut, Fraction(1), closed_low=False)]
        for j in triangles.type_ids
    }
    result = census(patch, partitions)
    for j in triangles.type_ids:
        assert sum(cell.count for cell in result.cells if cell.type == j) == result.type_total(j)
    assert result.total == len(patch)
    frame = census_frame(result)
    assert list(frame.columns) == ["type", "interval", "count", "rate"]
    assert frame["count"].sum() == len(patch)


def test_square_complexity_is_sturmian(square):
    anchor = anchor_from_path(square, 1, (0,))
    profile = complexity(square, anchor, 12)
    assert list(profile.counts) == list(range(1, 14))
    assert list(complexity_frame(profile).columns) == ["k", "c_k"]


def test_fixed_half_complexity_is_constant(fixed_half):
    anchor = anchor_from_path(fixed_half, 1, (0, 3))
    profile = complexity(fixed_half, anchor, 5)
    assert profile.counts[0] == 1
    assert set(profile.counts[1:]) == {1}


def test_complexity_grows_for_triangles(triangles):
    anchor = anchor_from_path(triangles, 1, (5,))
    counts = complexity(triangles, anchor, 3).counts
    assert all(a < b for a, b in zip(counts, counts[1:]))


def test_discrepancy_series(square):
    step = TimePoint.parse("ln(5/3)")
    points = discrepancy_series(square, 1, [step.times(k) for k in range(0, 6)])
    assert points[0].count == 1
    assert all(p.discrepancy >= 0 for p in points)
    assert all(p.distinct <= p.ceiling for p in points)
    frame = discrepancy_frame(points)
    assert list(frame.columns) == ["t_num", "t_den", "count", "expected", "discrepancy"]
    assert frame["t_num"].iloc[1] == 5 and frame["t_den"].iloc[1] == 3
    fitted, _ = distinct_growth(points, len(build_graph(square).edges))
    assert fitted > 0


def test_distinct_tile_ceiling(square):
    assert distinct_tile_ceiling(square, TimePoint.exact(1)) == 1
    t = TimePoint.parse("ln25")
    assert len(distinct_tiles(square, 1, t)) <= distinct_tile_ceiling(square, t)


def test_count_jumps(kakutani):
    assert count_jumps(kakutani, 1, TimePoint.exact(1), TimePoint.parse("ln(3/2)")) == 1


def test_sample_times():
    times = sample_times(4.0, 8)
    assert len(times) == 8
    assert all(t.is_exact for t in times)
    assert float(times[0]) == pytest.approx(3.0, abs=1e-2)
    assert float(times[-1]) == pytest.approx(4.0, abs=1e-2)


def _u_scale_gap(scheme, k):
    # Scales of F_ks do not depend on where the root is anchored.
    keys = distinct_tiles(scheme, 1, TimePoint.exact(5**k))
    return scale_gaps({scale for type_id, scale in keys if type_id == 1}, Fraction(1, 5), Fraction(1))


def test_triangle_scale_gaps_shrink(triangles):
    gaps = [_u_scale_gap(triangles, k) for k in (1, 4, 8, 12)]
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < Fraction(1, 10)


@pytest.mark.slow
def test_triangle_scales_are_dense(triangles):
    assert _u_scale_gap(triangles, 20) <= Fraction(1, 20)


def test_scale_gaps():
    assert scale_gaps([Fraction(1, 2), Fraction(3, 4)], Fraction(1, 4), Fraction(1)) == Fraction(1, 4)
    assert scale_gaps([], Fraction(0), Fraction(1)) == 1


def _assert_single_tile_counts(square, haystack, regions):
    needle = Patch((haystack.tiles[0],), haystack.meta)
    interval = ScaleInterval(Fraction(1, 5), Fraction(1), closed_low=True, closed_high=True)
    dilations = DilationInterval(Fraction(1, 5), Fraction(1))
    for region in regions:
        counted = count_occurrences(haystack, needle, dilations, region, square)
        cell = census(haystack, {1: [interval]}, scheme=square, region=region).cells[0]
        assert counted.L == cell.count
        assert counted.L <= counted.N


def test_single_tile_occurrences_match_census(square):
    anchor = anchor_from_path(square, 1, (0,))
    regions = [
        Box((Fraction(-1), Fraction(-1)), (Fraction(1), Fraction(1))),
        Box((Fraction(-3), Fraction(-2)), (Fraction(0), Fraction(2))),
        Box((Fraction(-1, 2), Fraction(0)), (Fraction(3), Fraction(5, 2))),
    ]
    _assert_single_tile_counts(square, stationary_patch(square, anchor, 5), regions)


@pytest.mark.slow
def test_single_tile_occurrences_in_random_regions(square):
    rng = random.Random(20240917)
    anchor = anchor_from_path(square, 1, (0,))
    regions = []
    for _ in range(10):
        low = [Fraction(rng.randint(-100, 60), 4) for _ in range(2)]
        size = [Fraction(rng.randint(4, 160), 4) for _ in range(2)]
        regions.append(Box(tuple(low), tuple(a + s for a, s in zip(low, size))))
    _assert_single_tile_counts(square, stationary_patch(square, anchor, 8), regions)


def test_fixed_scale_pattern_has_zero_frequency(square):
    # only the central tile keeps scale 1 in every stationary patch
    anchor = anchor_from_path(square, 1, (0,))
    densities = []
    for k in range(2, 6):
        haystack = stationary_patch(square, anchor, k)
        needle = Patch((next(t for t in haystack.tiles if t.scale == 1),), haystack.meta)
        u = anchor.period.times(k).u
        region = Box((-u, -u), (u, u))
        found = count_occurrences(haystack, needle, DilationInterval(Fraction(1), Fraction(1)), region, square)
        assert found.L == found.N == 1
        densities.append(Fraction(found.L) / region.volume)
    assert all(b < a for a, b in zip(densities, densities[1:]))


def test_extracted_patch_occurs_in_its_source(square):
    anchor = anchor_from_path(square, 1, (0,))
    haystack = stationary_patch(square, anchor, 4)
    box = Box((Fraction(-1), Fraction(-1)), (Fraction(1), Fraction(1)))
    needle = extract_patch(haystack, box, square)
    assert len(needle) > 1
    everything = Box((Fraction(-10), Fraction(-10)), (Fraction(10), Fraction(10)))
    found = count_occurrences(haystack, needle, DilationInterval(Fraction(1, 100), Fraction(1)), everything, square)
    assert found.L >= 1
    with pytest.raises(ValueError):
        count_occurrences(haystack, Patch((), haystack.meta), DilationInterval(Fraction(1), Fraction(1)), box, square)


@pytest.mark.slow
def test_triangle_empirical_density_converges(triangles):
    target = 0.29597
    middle = ScaleInterval(Fraction(3, 5), Fraction(4, 5))
    late = empirical_rate(triangles, 1, 1, middle, 6.0)
    early = empirical_rate(triangles, 1, 1, middle, 4.0)
    late_error, early_error = abs(late.mean / target - 1), abs(early.mean / target - 1)
    assert late_error <= 0.15
    # no worse than T=4 up to the spread of a 120-sample mean
    assert late_error <= early_error + 0.01
    assert len(late.rates) == 120
    total = empirical_rate(triangles, 1, None, None, 6.0, samples=40)
    assert abs(total.mean / (2.0165 + 1.8411) - 1) <= 0.15
