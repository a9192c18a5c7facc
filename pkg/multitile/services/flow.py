"""Substitution semi-flow: patches F_t(T_i), stationary anchors and supertiles.

A placed tile with scale ``lam`` and offset ``o`` occupies ``lam * T_type + o``.
Substituting it places child ``k`` of its rule at ``(lam * alpha_k, o + lam * b_k)``.
A tile is substituted iff its scale is strictly greater than 1.
"""

from __future__ import annotations

import heapq
import logging
from collections import Counter
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from ..core.config import get_settings
from ..core.errors import BudgetExceeded
from ..core.logging import scheme_logger
from ..core.workers import WorkerPool, get_pool
from ..data.models import (
    Patch,
    PatchMeta,
    PlacedTile,
    Scalar,
    Scheme,
    StationaryAnchor,
    SupertileGroup,
    TimePoint,
    Vector,
)
from . import geometry
from .scheme import scheme_hash

logger = logging.getLogger(__name__)

TileKey = Tuple[int, Fraction]


def _children(scheme: Scheme, tile: PlacedTile, exact: bool) -> List[PlacedTile]:
    out = []
    for index, child in enumerate(scheme.rule(tile.type)):
        if exact:
            scale = tile.scale * child.scale
            offset = tuple(o + tile.scale * b for o, b in zip(tile.offset, child.offset))
        else:
            scale = tile.scale * float(child.scale)
            offset = tuple(o + tile.scale * float(b) for o, b in zip(tile.offset, child.offset))
        out.append(PlacedTile(child.child_type, scale, offset, tile.path + (index,)))
    return out


def _expand_subtree(root: PlacedTile, scheme: Scheme, exact: bool, budget: int) -> List[PlacedTile]:
    """Leaves below ``root`` in lexicographic path order."""
    leaves: List[PlacedTile] = []
    stack = [root]
    while stack:
        tile = stack.pop()
        if tile.scale > 1:
            stack.extend(reversed(_children(scheme, tile, exact)))
            continue
        leaves.append(tile)
        if len(leaves) > budget:
            raise BudgetExceeded("tile", budget)
    return leaves


def _frontier(scheme: Scheme, root: PlacedTile, exact: bool, width: int) -> List[PlacedTile]:
    """Breadth expansion in path order until ``width`` subtrees are pending."""
    frontier = [root]
    while True:
        if sum(1 for t in frontier if t.scale > 1) >= width:
            return frontier
        expanded: List[PlacedTile] = []
        grew = False
        for tile in frontier:
            if tile.scale > 1:
                expanded.extend(_children(scheme, tile, exact))
                grew = True
            else:
                expanded.append(tile)
        if not grew:
            return expanded
        frontier = expanded


def root_tile(scheme: Scheme, i: int, t: TimePoint, frame_offset: Optional[Sequence[Fraction]] = None) -> PlacedTile:
    scheme.prototile(i)
    origin = tuple(frame_offset) if frame_offset is not None else (Fraction(0),) * scheme.dimension
    u = t.inflation
    if t.is_exact:
        return PlacedTile(i, u, tuple(u * c for c in origin))
    return PlacedTile(i, u, tuple(u * float(c) for c in origin))


def generate(
    scheme: Scheme,
    i: int,
    t: TimePoint,
    *,
    frame_offset: Optional[Sequence[Fraction]] = None,
    budget: Optional[int] = None,
    pool: Optional[WorkerPool] = None,
) -> Patch:
    """The patch F_t(T_i), tiles in lexicographic path order."""
    budget = budget or get_settings().budget
    pool = pool or get_pool()
    exact = t.is_exact
    root = root_tile(scheme, i, t, frame_offset)

    if pool.parallel and root.scale > 1:
        frontier = _frontier(scheme, root, exact, 4 * pool.workers)
        pending = [tile for tile in frontier if tile.scale > 1]
        expanded = iter(pool.map(_expand_subtree, pending, scheme, exact, budget))
        tiles: List[PlacedTile] = []
        for tile in frontier:
            tiles.extend(next(expanded) if tile.scale > 1 else [tile])
            if len(tiles) > budget:
                raise BudgetExceeded("tile", budget)
    else:
        tiles = _expand_subtree(root, scheme, exact, budget)

    origin = tuple(frame_offset) if frame_offset is not None else (Fraction(0),) * scheme.dimension
    meta = PatchMeta(scheme.name, scheme_hash(scheme), scheme.dimension, i, t, origin)
    scheme_logger(logger, scheme).info(
        "Patch generated", extra={"root": i, "time": str(t), "tiles": len(tiles), "workers": pool.workers}
    )
    return Patch(tuple(tiles), meta)


def tile_histogram(scheme: Scheme, i: int, t: TimePoint, budget: Optional[int] = None) -> Counter:
    """Multiset of (type, scale) over F_t(T_i) by deduplicated expansion, no geometry."""
    if not t.is_exact:
        raise ValueError("tile histograms need an exact time")
    budget = budget or get_settings().state_budget
    u = t.u
    histogram: Counter = Counter()
    if u <= 1:
        histogram[(i, u)] = 1
        return histogram
    heap: List[Tuple[Fraction, int]] = [(-u, i)]
    pending: Dict[TileKey, int] = {(i, u): 1}
    processed = 0
    while heap:
        neg_scale, type_id = heapq.heappop(heap)
        scale = -neg_scale
        count = pending.pop((type_id, scale))
        processed += 1
        if processed > budget:
            raise BudgetExceeded("histogram state", budget)
        for child in scheme.rule(type_id):
            key = (child.child_type, scale * child.scale)
            if key[1] <= 1:
                histogram[key] += count
                continue
            if key not in pending:
                pending[key] = 0
                heapq.heappush(heap, (-key[1], key[0]))
            pending[key] += count
    return histogram


def distinct_tiles(scheme: Scheme, i: int, t: TimePoint, budget: Optional[int] = None) -> frozenset:
    return frozenset(tile_histogram(scheme, i, t, budget))


def count_tiles(scheme: Scheme, i: int, t: TimePoint, budget: Optional[int] = None) -> int:
    return sum(tile_histogram(scheme, i, t, budget).values())


def _edge_word(scheme: Scheme, i: int, path: Tuple[int, ...]) -> Tuple[Tuple[int, int], ...]:
    """The path as graph edges: (source type, child index) pairs walked from ``i``."""
    word = []
    type_id = i
    for index in path:
        word.append((type_id, index))
        type_id = scheme.rule(type_id)[index].child_type
    return tuple(word)


def _is_prime_word(word: Tuple) -> bool:
    n = len(word)
    return not any(n % m == 0 and word == word[:m] * (n // m) for m in range(1, n))


def _anchor(
    scheme: Scheme, i: int, q: Fraction, chain: Vector, path: Tuple[int, ...]
) -> Optional[StationaryAnchor]:
    """Anchor for a closed path at ``i``, or None when its self-copy is not usable."""
    d = scheme.dimension
    shape = scheme.prototile(i).vertices
    if not _is_prime_word(_edge_word(scheme, i, path)):
        return None
    if not geometry.strictly_inside(shape, geometry.place(shape, q, chain), d):
        return None
    point = tuple(c / (1 - q) for c in chain)
    if geometry.point_location(point, shape, d) != geometry.INSIDE:
        return None
    return StationaryAnchor(i, TimePoint.exact(1 / q), point, path, q, chain)


def anchor_from_path(scheme: Scheme, i: int, path: Sequence[int]) -> StationaryAnchor:
    """The anchor of one explicit closed path of child indices starting at ``i``."""
    type_id, q, chain = i, Fraction(1), (Fraction(0),) * scheme.dimension
    for index in path:
        rule = scheme.rule(type_id)
        if not 0 <= index < len(rule):
            raise ValueError(f"prototile {type_id} has no child {index}")
        child = rule[index]
        chain = tuple(c + q * b for c, b in zip(chain, child.offset))
        q *= child.scale
        type_id = child.child_type
    if not path or type_id != i:
        raise ValueError(f"path {list(path)} is not a closed path at prototile {i}")
    anchor = _anchor(scheme, i, q, chain, tuple(path))
    if anchor is None:
        raise ValueError(f"path {list(path)} has no interior fixed point or repeats a shorter path")
    return anchor


def find_stationary_anchors(
    scheme: Scheme, i: int, max_period: TimePoint, budget: Optional[int] = None
) -> List[StationaryAnchor]:
    """Closed paths at ``i`` whose self-copy sits strictly inside T_i, up to ``max_period``."""
    if not max_period.is_exact:
        raise ValueError("anchor search needs an exact period bound")
    budget = budget or get_settings().state_budget
    floor = 1 / max_period.u
    anchors: List[StationaryAnchor] = []
    stack: List[Tuple[int, Fraction, Vector, Tuple[int, ...]]] = [(i, Fraction(1), (Fraction(0),) * scheme.dimension, ())]
    visited = 0
    while stack:
        type_id, q, chain, path = stack.pop()
        visited += 1
        if visited > budget:
            raise BudgetExceeded("anchor search state", budget)
        for index, child in enumerate(scheme.rule(type_id)):
            child_q = q * child.scale
            if child_q < floor:
                continue
            child_chain = tuple(c + q * b for c, b in zip(chain, child.offset))
            child_path = path + (index,)
            stack.append((child.child_type, child_q, child_chain, child_path))
            if child.child_type != i:
                continue
            anchor = _anchor(scheme, i, child_q, child_chain, child_path)
            if anchor is not None:
                anchors.append(anchor)
    anchors.sort(key=lambda a: (-a.ratio, len(a.child_path), a.child_path))
    scheme_logger(logger, scheme).info("Stationary anchors found", extra={"root": i, "anchors": len(anchors)})
    return anchors


def stationary_patch(
    scheme: Scheme,
    anchor: StationaryAnchor,
    k: int,
    *,
    budget: Optional[int] = None,
    pool: Optional[WorkerPool] = None,
) -> Patch:
    """F_{ks}(T_i) with the control point at the origin."""
    if k < 0:
        raise ValueError("k must be non-negative")
    origin = tuple(-c for c in anchor.control_point)
    return generate(scheme, anchor.root_type, anchor.period.times(k), frame_offset=origin, budget=budget, pool=pool)


def nested_path(anchor: StationaryAnchor, tile: PlacedTile) -> Tuple[int, ...]:
    """Path of a tile of stationary_patch(k-1) inside stationary_patch(k)."""
    return anchor.child_path + tile.path


def is_nested(anchor: StationaryAnchor, previous: Patch, current: Patch) -> bool:
    """Every tile of ``previous`` sits in ``current`` at its nested path, same type, scale and offset."""
    by_path = {tile.path: tile for tile in current.tiles}
    for tile in previous.tiles:
        match = by_path.get(nested_path(anchor, tile))
        if match is None or match.key() != tile.key():
            return False
    return True


def supertile_decompose(scheme: Scheme, patch: Patch, anchor: StationaryAnchor, m: int) -> List[SupertileGroup]:
    """Group the tiles of stationary_patch(k) by their order-m supertile."""
    if not patch.is_exact:
        raise ValueError("supertile decomposition needs an exact patch")
    if patch.meta.root != anchor.root_type:
        raise ValueError("patch and anchor have different root types")
    if m < 0:
        raise ValueError("m must be non-negative")
    u = patch.meta.time.u
    shrink = anchor.ratio**m
    if u * shrink < 1:
        raise ValueError(f"order {m} exceeds the generation of the patch")

    root = root_tile(scheme, anchor.root_type, patch.meta.time, patch.meta.frame_offset)
    groups: Dict[Tuple[int, ...], List[PlacedTile]] = {}
    ancestors: Dict[Tuple[int, ...], PlacedTile] = {}
    for tile in patch.tiles:
        node = root
        while node.scale * shrink > 1:
            node = _children(scheme, node, True)[tile.path[len(node.path)]]
        ancestors.setdefault(node.path, node)
        groups.setdefault(node.path, []).append(tile)
    return [
        SupertileGroup(prefix, ancestors[prefix].type, ancestors[prefix].scale, ancestors[prefix].offset, tuple(tiles))
        for prefix, tiles in groups.items()
    ]


def legal_scale_violations(patch: Patch, minima: Dict[int, Fraction]) -> List[PlacedTile]:
    """Tiles whose scale falls outside (beta_min, 1]."""
    return [t for t in patch.tiles if not (minima.get(t.type, 0) < t.scale <= 1)]


def patch_volume(patch: Patch) -> Scalar:
    return sum((Fraction(t.scale) ** patch.dimension for t in patch.tiles), Fraction(0))
