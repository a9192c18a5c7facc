from fractions import Fraction

import pytest

from multitile.core.errors import BudgetExceeded
from multitile.core.workers import WorkerPool
from multitile.data.models import TimePoint
from multitile.services.asymptotics import beta_min, scale_minima
from multitile.services.flow import (
    anchor_from_path,
    count_tiles,
    find_stationary_anchors,
    generate,
    is_nested,
    legal_scale_violations,
    nested_path,
    patch_volume,
    stationary_patch,
    supertile_decompose,
    tile_histogram,
)
from multitile.services.graph import build_graph, path_count_oracle

TIMES = [
    "0",
    "ln(4/3)",
    "ln(3/2)",
    "ln(5/3)",
    "ln2",
    "ln(5/2)",
    "ln3",
    "ln(7/2)",
    "ln4",
    "ln(9/2)",
    "ln5",
    "ln(17/3)",
    "ln6",
    "ln7",
    "ln(15/2)",
    "ln8",
    "2ln3",
    "ln10",
    "ln(21/2)",
    "ln(25/2)",
]


@pytest.mark.parametrize("name", ["square", "triangles", "kakutani", "fixed_half"])
def test_patch_matches_path_count_and_volume(name, request):
    scheme = request.getfixturevalue(name)
    graph = build_graph(scheme)
    for text in TIMES:
        t = TimePoint.parse(text)
        for i in scheme.type_ids:
            patch = generate(scheme, i, t)
            assert len(patch) == path_count_oracle(graph, i, t)
            assert patch_volume(patch) == t.u**scheme.dimension
            assert count_tiles(scheme, i, t) == len(patch)


def test_tiles_have_legal_scales(triangles):
    patch = generate(triangles, 1, TimePoint.parse("ln(17/3)"))
    minima = scale_minima(triangles)
    assert minima == {j: beta_min(triangles, j) for j in triangles.type_ids}
    assert legal_scale_violations(patch, minima) == []
    assert legal_scale_violations(patch, {1: Fraction(1, 2), 2: Fraction(1, 2)}) != []


def test_square_one_step(square):
    patch = generate(square, 1, TimePoint.parse("ln(5/3)"))
    scales = sorted(t.scale for t in patch.tiles)
    assert scales == [Fraction(1, 3)] * 16 + [Fraction(1)]
    assert patch.tiles[0].path == (0,)


def test_float_time_generation(kakutani):
    patch = generate(kakutani, 1, TimePoint.from_float(1.0))
    assert not patch.is_exact
    assert sum(t.scale for t in patch.tiles) == pytest.approx(2.718281828459045)
    assert all(t.scale <= 1 for t in patch.tiles)


def test_workers_do_not_change_output(triangles):
    t = TimePoint.parse("ln8")
    sequential = generate(triangles, 1, t, pool=WorkerPool(1))
    parallel = generate(triangles, 1, t, pool=WorkerPool(2, backend="threading"))
    assert parallel == sequential


def test_budget_exceeded(square):
    with pytest.raises(BudgetExceeded) as info:
        generate(square, 1, TimePoint.parse("ln5"), budget=10)
    assert info.value.exit_code == 3


def test_histogram_matches_patch(triangles):
    t = TimePoint.parse("ln7")
    patch = generate(triangles, 2, t)
    histogram = tile_histogram(triangles, 2, t)
    assert sum(histogram.values()) == len(patch)
    assert set(histogram) == {(tile.type, tile.scale) for tile in patch.tiles}


def test_square_anchor(square):
    anchor = find_stationary_anchors(square, 1, TimePoint.parse("ln5"))[0]
    assert anchor.child_path == (0,)
    assert anchor.period == TimePoint.exact(Fraction(5, 3))
    assert anchor.control_point == (Fraction(1, 2), Fraction(1, 2))


def test_triangle_anchors(triangles):
    anchors = find_stationary_anchors(triangles, 1, TimePoint.parse("ln5"))
    assert [a.child_path for a in anchors[:3]] == [(5,), (7,), (3, 3)]
    assert anchors[0].control_point == (Fraction(1), Fraction(1, 4))
    assert all(a.period == TimePoint.exact(5) for a in anchors[:3])


def test_two_step_anchor_uses_its_own_fixed_point(triangles):
    # the loop 1 -3-> 2 -3-> 1 is primitive as a walk even though its index word repeats
    anchor = anchor_from_path(triangles, 1, (3, 3))
    assert anchor.ratio == Fraction(1, 5)
    assert anchor.chain == (Fraction(2, 5), Fraction(1, 5))
    assert anchor.control_point == (Fraction(1, 2), Fraction(1, 4))


def test_boundary_copies_are_not_anchors(triangles, kakutani):
    with pytest.raises(ValueError):
        anchor_from_path(triangles, 1, (0,))
    assert anchor_from_path(kakutani, 1, (0, 1)).control_point == (Fraction(1, 7),)
    assert anchor_from_path(kakutani, 1, (1, 0)).control_point == (Fraction(3, 7),)


def test_repeated_words_are_not_anchors(square):
    with pytest.raises(ValueError):
        anchor_from_path(square, 1, (0, 0))


def test_fixed_half_anchor(fixed_half):
    anchor = find_stationary_anchors(fixed_half, 1, TimePoint.parse("ln4"))[0]
    assert anchor.child_path == (0, 3)
    assert anchor.control_point == (Fraction(1, 3), Fraction(1, 3))


def _assert_nested(scheme, anchor, k_max):
    previous = stationary_patch(scheme, anchor, 0)
    for k in range(1, k_max + 1):
        current = stationary_patch(scheme, anchor, k)
        assert previous.tile_set() <= current.tile_set()
        assert is_nested(anchor, previous, current)
        previous = current


def test_square_stationary_patches_are_nested(square):
    anchor = find_stationary_anchors(square, 1, TimePoint.parse("ln5"))[0]
    _assert_nested(square, anchor, 5)


def test_triangle_stationary_patches_are_nested(triangles):
    _assert_nested(triangles, anchor_from_path(triangles, 1, (5,)), 2)


@pytest.mark.slow
def test_stationary_patches_stay_nested_at_depth(square, triangles):
    _assert_nested(square, anchor_from_path(square, 1, (0,)), 10)
    _assert_nested(triangles, anchor_from_path(triangles, 1, (5,)), 4)


def test_nesting_failure_is_detected(square):
    anchor = anchor_from_path(square, 1, (0,))
    previous = stationary_patch(square, anchor, 1)
    shifted = generate(square, 1, anchor.period.times(2))
    assert not is_nested(anchor, previous, shifted)
    assert not is_nested(anchor, stationary_patch(square, anchor, 2), previous)
    assert nested_path(anchor, previous.tiles[0]) == (0,) + previous.tiles[0].path


def test_supertile_groups(triangles):
    anchor = anchor_from_path(triangles, 1, (5,))
    patch = stationary_patch(triangles, anchor, 2)
    groups = supertile_decompose(triangles, patch, anchor, 1)
    assert len(groups) == len(stationary_patch(triangles, anchor, 1))
    assert sum(len(g.tiles) for g in groups) == len(patch)
    assert supertile_decompose(triangles, patch, anchor, 0)[0].tiles == (patch.tiles[0],)


def test_supertile_order_too_high(square):
    anchor = anchor_from_path(square, 1, (0,))
    patch = stationary_patch(square, anchor, 1)
    with pytest.raises(ValueError):
        supertile_decompose(square, patch, anchor, 2)
