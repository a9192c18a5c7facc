from __future__ import annotations

import colorsys
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from jinja2 import Environment, FileSystemLoader

from ..core.errors import GeometryError
from ..data.models import Patch, Scheme, StationaryAnchor, SubstGraph
from . import geometry
from .flow import supertile_decompose

TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"
COLOR_MODES = ("by-type", "by-scale", "by-supertile")
TYPE_PALETTE = ("#e4a672", "#7fb3d5", "#a9d18e", "#d7a1d8", "#f2d16b", "#9fa8da", "#f28b82", "#80cbc4")

_env = Environment(
    loader=FileSystemLoader(str(TEMPLATES_DIR)),
    autoescape=True,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)


@dataclass(frozen=True)
class RenderStyle:
    color_mode: str = "by-type"
    supertiles: Optional[int] = None
    stroke_width: float = 0.004
    viewport: Optional[Tuple[float, float, float, float]] = None
    width: int = 800

    def __post_init__(self) -> None:
        if self.color_mode not in COLOR_MODES:
            raise ValueError(f"color mode must be one of {', '.join(COLOR_MODES)}")
        if self.viewport is not None:
            x0, y0, x1, y1 = self.viewport
            if not (x1 > x0 and y1 > y0):
                raise ValueError("viewport must have positive width and height")
        if self.width <= 0:
            raise ValueError("width must be positive")


def fmt(value) -> str:
    return f"{float(value):.12g}"


def hue_ramp(n: int) -> List[str]:
    """``n`` distinct colours from a hue ramp."""
    colors = []
    for hue in np.linspace(0.0, 0.8, num=max(n, 1)):
        r, g, b = colorsys.hsv_to_rgb(float(hue), 0.55, 0.95)
        colors.append(f"#{int(round(r * 255)):02x}{int(round(g * 255)):02x}{int(round(b * 255)):02x}")
    return colors[:n]


def _type_fill(type_id: int) -> str:
    return TYPE_PALETTE[(type_id - 1) % len(TYPE_PALETTE)]


def _points(shape) -> str:
    # SVG y grows downward.
    return " ".join(f"{fmt(x)},{fmt(-y)}" for x, y in shape)


def _viewbox(boxes: Sequence[Tuple[Tuple, Tuple]], style: RenderStyle) -> Tuple[float, float, float, float]:
    if style.viewport is not None:
        return style.viewport
    xs0, ys0 = min(float(b[0][0]) for b in boxes), min(float(b[0][1]) for b in boxes)
    xs1, ys1 = max(float(b[1][0]) for b in boxes), max(float(b[1][1]) for b in boxes)
    return xs0, ys0, xs1, ys1


def render_svg(
    scheme: Scheme,
    patch: Patch,
    style: Optional[RenderStyle] = None,
    anchor: Optional[StationaryAnchor] = None,
) -> str:
    style = style or RenderStyle()
    if patch.dimension != 2:
        raise GeometryError("render_svg draws planar patches; use render_1d for intervals")
    shapes = [geometry.place(scheme.prototile(t.type).vertices, t.scale, t.offset) for t in patch.tiles]

    groups = None
    if style.color_mode == "by-supertile" or style.supertiles is not None:
        if anchor is None:
            raise ValueError("supertile rendering needs the stationary anchor")
        groups = supertile_decompose(scheme, patch, anchor, style.supertiles or 0)

    if style.color_mode == "by-scale":
        scales = sorted({t.scale for t in patch.tiles}, reverse=True)
        ramp = dict(zip(scales, hue_ramp(len(scales))))
        fills = [ramp[t.scale] for t in patch.tiles]
    elif style.color_mode == "by-supertile":
        ramp = hue_ramp(len(groups))
        member: Dict[Tuple[int, ...], str] = {}
        for color, group in zip(ramp, groups):
            for tile in group.tiles:
                member[tile.path] = color
        fills = [member[t.path] for t in patch.tiles]
    else:
        fills = [_type_fill(t.type) for t in patch.tiles]

    x0, y0, x1, y1 = _viewbox([geometry.bounding_box(s) for s in shapes], style)
    span = max(x1 - x0, y1 - y0)
    stroke = style.stroke_width * span
    tiles = [
        {
            "points": _points(shape),
            "fill": fill,
            "stroke": fmt(stroke * max(0.25, 1 - 0.05 * tile.depth)),
        }
        for tile, shape, fill in zip(patch.tiles, shapes, fills)
    ]
    outlines = []
    if groups is not None and style.supertiles is not None:
        outlines = [
            _points(geometry.place(scheme.prototile(g.type).vertices, g.scale, g.offset)) for g in groups
        ]
    height = max(1, int(round(style.width * (y1 - y0) / (x1 - x0))))
    return _env.get_template("patch.svg.j2").render(
        width=style.width,
        height=height,
        viewbox=f"{fmt(x0)} {fmt(-y1)} {fmt(x1 - x0)} {fmt(y1 - y0)}",
        title=f"{patch.meta.scheme_name} F_{patch.meta.time}(T_{patch.meta.root})",
        tiles=tiles,
        outlines=outlines,
        outline_width=fmt(3 * stroke),
    )


def render_1d(scheme: Scheme, patches: Patch | Sequence[Patch], style: Optional[RenderStyle] = None) -> str:
    """Stacked interval bars, one row per patch, with ticks at tile endpoints."""
    style = style or RenderStyle()
    rows_in = [patches] if isinstance(patches, Patch) else list(patches)
    if not rows_in or any(p.dimension != 1 for p in rows_in):
        raise GeometryError("render_1d draws one-dimensional patches")
    all_scales = sorted({t.scale for p in rows_in for t in p.tiles}, reverse=True)
    ramp = dict(zip(all_scales, hue_ramp(len(all_scales))))
    intervals = [
        [(t, geometry.place(scheme.prototile(t.type).vertices, t.scale, t.offset)) for t in p.tiles] for p in rows_in
    ]
    lo = min(float(shape[0][0]) for row in intervals for _, shape in row)
    hi = max(float(shape[1][0]) for row in intervals for _, shape in row)
    if style.viewport is not None:
        lo, _, hi, _ = style.viewport
    span = hi - lo
    bar_height = span / 20
    gap = bar_height
    rows = []
    for k, row in enumerate(intervals):
        bars, ticks = [], set()
        for tile, shape in row:
            a, b = shape[0][0], shape[1][0]
            fill = ramp[tile.scale] if style.color_mode == "by-scale" else _type_fill(tile.type)
            bars.append({"x": fmt(a), "width": fmt(b - a), "fill": fill})
            ticks.update((a, b))
        rows.append({"y": fmt(k * (bar_height + gap)), "bars": bars, "ticks": [fmt(x) for x in sorted(ticks)]})
    total_height = len(rows) * (bar_height + gap)
    return _env.get_template("bars.svg.j2").render(
        width=style.width,
        height=max(1, int(round(style.width * total_height / span))),
        viewbox=f"{fmt(lo)} {fmt(-gap / 2)} {fmt(span)} {fmt(total_height)}",
        title=f"{rows_in[0].meta.scheme_name} interval patches",
        rows=rows,
        bar_height=fmt(bar_height),
        tick_low=fmt(-gap / 4),
        tick_high=fmt(bar_height + gap / 4),
        stroke=fmt(style.stroke_width * span),
    )


def render_dot(scheme: Scheme, graph: SubstGraph) -> str:
    vertices = [{"id": p.id, "label": p.label} for p in scheme.prototiles]
    edges = [
        {"source": e.source, "target": e.target, "label": f"{e.child_index}: {e.length}"} for e in graph.edges
    ]
    return _env.get_template("graph.dot.j2").render(name=scheme.name, vertices=vertices, edges=edges)


def fill_colors(svg: str) -> set:
    """Distinct fill colours used by tile polygons or bars of a rendered document."""
    return set(re.findall(r'<(?:polygon|rect)[^>]*fill="(#[0-9a-f]{6})"', svg))
