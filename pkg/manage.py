from __future__ import annotations

import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import click
import mpmath

from multitile.core import configure_logging, get_settings
from multitile.core.config import Settings
from multitile.core.errors import MultitileError
from multitile.core.workers import WorkerPool
from multitile.data.codec import read_patch, write_patch, write_patch_csv
from multitile.data.exact import format_rational, parse_rational
from multitile.data.models import Box, DilationInterval, Patch, RunManifest, ScaleInterval, Scheme, TimePoint
from multitile.data.repository import get_repository
from multitile.services import asymptotics, flow, graph, render, statistics
from multitile.services.export import export_json, load_patch_json
from multitile.services.scheme import load_scheme, normalize, scheme_hash, validate

logger = logging.getLogger(__name__)


class RationalType(click.ParamType):
    name = "rational"

    def convert(self, value, param, ctx) -> Fraction:
        if isinstance(value, Fraction):
            return value
        try:
            return parse_rational(value)
        except ValueError as exc:
            self.fail(str(exc), param, ctx)


class TimeType(click.ParamType):
    name = "time"

    def convert(self, value, param, ctx) -> TimePoint:
        if isinstance(value, TimePoint):
            return value
        try:
            return TimePoint.parse(value)
        except ValueError as exc:
            self.fail(str(exc), param, ctx)


class PathType(click.ParamType):
    """Dot separated child indices such as ``0.3``."""

    name = "path"

    def convert(self, value, param, ctx) -> tuple:
        if isinstance(value, tuple):
            return value
        try:
            return tuple(int(part) for part in value.split("."))
        except ValueError:
            self.fail(f"{value!r} is not a dot separated list of child indices", param, ctx)


RATIONAL = RationalType()
TIME = TimeType()
CHILD_PATH = PathType()


class Run:
    """State of one invocation: effective settings, collected outputs and the manifest."""

    def __init__(self, settings: Settings, manifest_path: Optional[Path]) -> None:
        self.settings = settings
        self.manifest_path = manifest_path
        self.started = time.perf_counter()
        self.scheme_hash = ""
        self.outputs: Dict[str, str] = {}
        self._stdout: List[str] = []

    @property
    def pool(self) -> WorkerPool:
        return WorkerPool(self.settings.workers, self.settings.backend)

    def scheme(self, path: Path) -> Scheme:
        scheme = normalize(load_scheme(path))
        self.scheme_hash = scheme_hash(scheme)
        return scheme

    def echo(self, text: str = "") -> None:
        self._stdout.append(text + "\n")
        click.echo(text)

    def wrote(self, path: Path) -> None:
        self.outputs[str(path)] = hashlib.sha256(Path(path).read_bytes()).hexdigest()

    def finish(self) -> None:
        if self._stdout:
            self.outputs["stdout"] = hashlib.sha256("".join(self._stdout).encode("utf-8")).hexdigest()
        manifest = RunManifest(
            command=" ".join(sys.argv),
            scheme_hash=self.scheme_hash,
            budget=self.settings.budget,
            workers=self.settings.workers,
            precision=self.settings.precision,
            output_hashes=dict(self.outputs),
            wall_time=round(time.perf_counter() - self.started, 6),
        )
        get_repository().save_manifest(manifest)
        if self.manifest_path is not None:
            self.manifest_path.write_text(json.dumps(asdict(manifest), sort_keys=True, indent=2) + "\n", encoding="utf-8")
        logger.info("Run finished", extra={"command": manifest.command, "wall_time": manifest.wall_time})


class MultitileGroup(click.Group):
    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except MultitileError as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(exc.exit_code)
        except ValueError as exc:
            message = exc.args[0] if exc.args else str(exc)
            click.echo(f"usage error: {message}", err=True)
            ctx.exit(2)


def _decimal(value, digits: int = 5) -> str:
    return mpmath.nstr(value, digits)


def _read_any_patch(path: Path) -> Patch:
    if path.suffix == ".json":
        return load_patch_json(path.read_text(encoding="utf-8"))
    return read_patch(path)


def _scheme_for_patch(run: Run, patch: Patch, scheme_path: Optional[Path]) -> Scheme:
    if scheme_path is not None:
        return run.scheme(scheme_path)
    for candidate in run.settings.bundled_schemes():
        scheme = normalize(load_scheme(candidate))
        if scheme_hash(scheme) == patch.meta.scheme_hash:
            run.scheme_hash = patch.meta.scheme_hash
            return scheme
    raise click.UsageError("no bundled scheme matches the patch hash; pass --scheme")


def _cycle_label(cycle) -> str:
    route = "->".join(str(v) for v in cycle.vertices + cycle.vertices[:1])
    return f"{route} length {cycle.length} (x{cycle.multiplicity})"


def _box(values: Optional[Sequence[Fraction]], dimension: int) -> Optional[Box]:
    if not values:
        return None
    if len(values) != 2 * dimension:
        raise click.UsageError(f"a box needs {2 * dimension} coordinates in dimension {dimension}")
    return Box(tuple(values[:dimension]), tuple(values[dimension:]))


def _anchor(run: Run, scheme: Scheme, root: int, child_path: Optional[tuple], max_period: TimePoint):
    if child_path:
        return flow.anchor_from_path(scheme, root, child_path)
    anchors = flow.find_stationary_anchors(scheme, root, max_period, run.settings.state_budget)
    if not anchors:
        raise click.UsageError(f"no stationary anchor at prototile {root} up to period {max_period}; raise --max-period")
    return anchors[0]


def _root_option(f):
    return click.option("--root", default="1", show_default=True, help="Root prototile id or label")(f)


def _anchor_options(f):
    f = click.option("--path", "child_path", type=CHILD_PATH, help="Closed path of child indices, e.g. 0.3")(f)
    f = click.option("--max-period", type=TIME, default="ln5", show_default=True, help="Longest anchor period searched")(f)
    return f


@click.group(cls=MultitileGroup)
@click.option("--budget", type=int, help="Tile cap for patch generation (overrides MULTITILE_BUDGET)")
@click.option("--workers", type=int, help="Worker processes for patch generation")
@click.option("--precision", type=int, help="Decimal digits for evaluating exact values")
@click.option("--seed", type=int, help="Reserved; every algorithm is deterministic")
@click.option("--log-level", help="Log level for the JSON logs on stderr")
@click.option("--manifest", type=click.Path(dir_okay=False, path_type=Path), help="Also write the run manifest here")
@click.pass_context
def cli(
    ctx: click.Context,
    budget: Optional[int],
    workers: Optional[int],
    precision: Optional[int],
    seed: Optional[int],
    log_level: Optional[str],
    manifest: Optional[Path],
) -> None:
    """Multiscale substitution tilings: schemes, graphs, patches and tile statistics."""
    try:
        settings = get_settings().override(budget=budget, workers=workers, precision=precision, log_level=log_level)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    configure_logging(settings.log_level.upper())
    run = Run(settings, manifest)
    ctx.obj = run
    ctx.call_on_close(run.finish)


@cli.command("validate")
@click.argument("scheme_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_obj
def validate_cmd(run: Run, scheme_path: Path) -> None:
    """Check volume identity, containment and disjointness of a scheme."""
    scheme = load_scheme(scheme_path)
    run.scheme_hash = scheme_hash(scheme)
    report = validate(scheme)
    for line in report.lines():
        run.echo(line)
    if not report.ok:
        click.get_current_context().exit(1)


@cli.command("graph")
@click.argument("scheme_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--dot", type=click.Path(dir_okay=False, path_type=Path), help="Write the graph in DOT format")
@click.option("--window", type=float, help="Report the largest gap of return times inside [H-1, H] at each vertex")
@click.pass_obj
def graph_cmd(run: Run, scheme_path: Path, dot: Optional[Path], window: Optional[float]) -> None:
    """Associated graph, commensurability verdict, M(d) and Q."""
    scheme = run.scheme(scheme_path)
    g = graph.build_graph(scheme)
    run.echo(f"vertices: {g.vertex_count}")
    for edge in g.edges:
        run.echo(f"  {edge.source} -> {edge.target}  child {edge.child_index}  length {edge.length}")
    irreducible = graph.is_irreducible(g)
    run.echo(f"irreducible: {'yes' if irreducible else 'no'}")
    if irreducible:
        verdict = graph.classify_commensurability(g, run.settings.cycle_budget)
        run.echo(str(verdict))
        witnesses = graph.minimal_witnesses(verdict)
        if witnesses:
            run.echo(f"minimal witnesses: {len(witnesses)}")
            for pair in witnesses:
                run.echo("  " + " & ".join(_cycle_label(c) for c in pair))
    m = graph.eval_M(scheme, scheme.dimension)
    run.echo(f"M({scheme.dimension}):")
    for row in m.values:
        run.echo("  " + "  ".join(format_rational(x) for x in row))
    if irreducible:
        q = graph.compute_Q(scheme)
        run.echo(f"Z = {q.denominator} ≈ {_decimal(q.denominator.evaluate(run.settings.precision), 6)}")
        for h in scheme.type_ids:
            value = q.q(h)
            run.echo(f"q_{h} = {value.symbolic()} ≈ {_decimal(value.evaluate(run.settings.precision), 6)}")
    if window is not None:
        for v in g.vertices:
            gap = graph.max_window_gap(g, v, window, run.settings.state_budget)
            run.echo(f"return-time gap at {v} in [{window - 1:g}, {window:g}]: {gap:.6g}")
    if dot is not None:
        dot.write_text(render.render_dot(scheme, g), encoding="utf-8")
        run.wrote(dot)


@cli.command("generate")
@click.argument("scheme_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_root_option
@click.option("--time", "t", type=TIME, required=True, help="Flow time, e.g. ln(5/3), 2ln5 or a decimal")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Binary patch file")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False, path_type=Path), help="CSV tile table")
@click.option("--json", "json_path", type=click.Path(dir_okay=False, path_type=Path), help="JSON patch document")
@click.pass_obj
def generate_cmd(
    run: Run,
    scheme_path: Path,
    root: str,
    t: TimePoint,
    out: Optional[Path],
    csv_path: Optional[Path],
    json_path: Optional[Path],
) -> None:
    """Generate the patch F_t(T_root)."""
    scheme = run.scheme(scheme_path)
    patch = flow.generate(scheme, scheme.type_of(root), t, budget=run.settings.budget, pool=run.pool)
    run.echo(f"tiles: {len(patch)}")
    violations = flow.legal_scale_violations(patch, asymptotics.scale_minima(scheme))
    run.echo(f"legal scales: {'yes' if not violations else f'no ({len(violations)} tiles)'}")
    if patch.is_exact:
        run.echo(f"volume: {format_rational(flow.patch_volume(patch))} (u^d = {format_rational(patch.volume)})")
    if out is not None:
        write_patch(patch, out)
        run.wrote(out)
    if csv_path is not None:
        write_patch_csv(patch, csv_path)
        run.wrote(csv_path)
    if json_path is not None:
        json_path.write_text(export_json(patch), encoding="utf-8")
        run.wrote(json_path)


@cli.command("stats")
@click.argument("scheme_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--type", "type_", required=True, help="Tile type id or label")
@click.option("--interval", nargs=2, type=RATIONAL, help="Scale interval a b; default is the legal interval")
@click.option("--digits", default=5, show_default=True, help="Significant digits of printed decimals")
@click.option("--json", "as_json", is_flag=True, help="Print a JSON document instead of text")
@click.pass_obj
def stats_cmd(run: Run, scheme_path: Path, type_: str, interval, digits: int, as_json: bool) -> None:
    """Asymptotic tile frequency and volume fraction of one type and scale interval."""
    scheme = run.scheme(scheme_path)
    j = scheme.type_of(type_)
    scales = ScaleInterval(*interval) if interval else asymptotics.legal_interval(scheme, j)
    precision = run.settings.precision
    z = graph.compute_Q(scheme).denominator
    phi = asymptotics.phi(scheme, j, scales)
    nu = asymptotics.nu(scheme, j, scales)
    total_type = asymptotics.phi_total_type(scheme, j)
    total = asymptotics.phi_total(scheme)
    share = asymptotics.relative_fraction(scheme, j, scales)
    rows = [
        ("Z", str(z), z.evaluate(precision)),
        ("phi", phi.symbolic(), phi.evaluate(precision)),
        ("nu", str(nu), nu.evaluate(precision)),
        (f"phi_total[{j}]", total_type.symbolic(), total_type.evaluate(precision)),
        ("phi_total", total.symbolic(), total.evaluate(precision)),
        ("relative fraction", format_rational(share), mpmath.mpf(share.numerator) / share.denominator),
    ]
    if as_json:
        document = {
            "type": j,
            "interval": str(scales),
            "values": {name: {"exact": exact, "decimal": _decimal(value, digits)} for name, exact, value in rows},
        }
        run.echo(json.dumps(document, sort_keys=True, indent=2))
        return
    run.echo(f"type {j} ({scheme.prototile(j).label}), scales {scales}")
    for name, exact, value in rows:
        run.echo(f"{name} = {exact} ≈ {_decimal(value, digits)}")


@cli.command("census")
@click.argument("scheme_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_root_option
@click.option("--time", "t", type=TIME, help="Flow time of the patch to generate")
@click.option("--patch", "patch_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), help="Use a saved patch")
@click.option("--interval", "intervals", nargs=2, type=RATIONAL, multiple=True, help="Scale interval a b; repeatable")
@click.option("--region", nargs=4, type=RATIONAL, help="Count only tiles inside the box x0 y0 x1 y1")
@click.option("--json", "as_json", is_flag=True, help="Print a JSON census document instead of CSV")
@click.pass_obj
def census_cmd(run: Run, scheme_path: Path, root: str, t, patch_path, intervals, region, as_json: bool) -> None:
    """Tile counts per type and scale interval as CSV."""
    scheme = run.scheme(scheme_path)
    if patch_path is not None:
        patch = _read_any_patch(patch_path)
    elif t is not None:
        patch = flow.generate(scheme, scheme.type_of(root), t, budget=run.settings.budget, pool=run.pool)
    else:
        raise click.UsageError("pass --time or --patch")
    if intervals:
        partitions = {j: [ScaleInterval(a, b) for a, b in intervals] for j in scheme.type_ids}
    else:
        partitions = {j: [asymptotics.legal_interval(scheme, j)] for j in scheme.type_ids}
    box = _box(region, scheme.dimension) if region else None
    result = statistics.census(patch, partitions, scheme=scheme, region=box)
    if as_json:
        run.echo(export_json(result).rstrip("\n"))
    else:
        run.echo(statistics.census_frame(result).to_csv(index=False).rstrip("\n"))


@cli.command("complexity")
@click.argument("scheme_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_root_option
@_anchor_options
@click.option("--k-max", default=10, show_default=True, help="Largest multiple of the period")
@click.option("--json", "as_json", is_flag=True, help="Print a JSON profile instead of CSV")
@click.pass_obj
def complexity_cmd(run: Run, scheme_path: Path, root: str, child_path, max_period: TimePoint, k_max: int, as_json: bool) -> None:
    """Number of distinct (type, scale) pairs of F_ks for k = 0..k_max, as CSV k,c_k."""
    scheme = run.scheme(scheme_path)
    anchor = _anchor(run, scheme, scheme.type_of(root), child_path, max_period)
    profile = statistics.complexity(scheme, anchor, k_max, run.settings.state_budget)
    if as_json:
        run.echo(export_json(profile).rstrip("\n"))
    else:
        run.echo(statistics.complexity_frame(profile).to_csv(index=False).rstrip("\n"))


@cli.command("discrepancy")
@click.argument("scheme_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_root_option
@click.option("--time", "times", type=TIME, multiple=True, help="Sample time; repeatable")
@click.option("--step", type=TIME, help="Use the times k*step for k = 1..--count")
@click.option("--count", default=8, show_default=True, help="Number of multiples of --step")
@click.pass_obj
def discrepancy_cmd(run: Run, scheme_path: Path, root: str, times, step, count: int) -> None:
    """Tile count against its asymptotic prediction, as CSV t_num,t_den,count,expected,discrepancy."""
    scheme = run.scheme(scheme_path)
    samples = list(times) + ([step.times(k) for k in range(1, count + 1)] if step is not None else [])
    if not samples:
        raise click.UsageError("pass --time or --step")
    if any(not t.is_exact for t in samples):
        raise click.UsageError("discrepancy needs exact times ln(p/q)")
    points = statistics.discrepancy_series(scheme, scheme.type_of(root), samples, run.settings.precision)
    run.echo(statistics.discrepancy_frame(points).to_csv(index=False).rstrip("\n"))
    fitted, slope = statistics.distinct_growth(points, len(graph.build_graph(scheme).edges))
    breaches = [p for p in points if p.distinct > p.ceiling]
    click.echo(
        f"distinct tiles: fitted C = {fitted:.6g}, log-log slope = {slope:.4g}, "
        f"ceiling {'exceeded at ' + str(len(breaches)) + ' times' if breaches else 'respected'}",
        err=True,
    )


@cli.command("occurrences")
@click.argument("scheme_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("patch_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--needle", type=click.Path(exists=True, dir_okay=False, path_type=Path), help="Patch file to search for")
@click.option("--extract-box", nargs=4, type=RATIONAL, help="Take the needle from the haystack box x0 y0 x1 y1")
@click.option("--dilation", nargs=2, type=RATIONAL, required=True, help="Dilation interval low high")
@click.option("--region", nargs=4, type=RATIONAL, required=True, help="Counting region x0 y0 x1 y1")
@click.pass_obj
def occurrences_cmd(run: Run, scheme_path: Path, patch_path: Path, needle, extract_box, dilation, region) -> None:
    """Counts L (inside the region) and N (meeting it) of dilated copies of a patch."""
    scheme = run.scheme(scheme_path)
    haystack = _read_any_patch(patch_path)
    if needle is not None:
        small = _read_any_patch(needle)
    elif extract_box:
        small = statistics.extract_patch(haystack, _box(extract_box, scheme.dimension), scheme)
    else:
        raise click.UsageError("pass --needle or --extract-box")
    result = statistics.count_occurrences(
        haystack, small, DilationInterval(*dilation), _box(region, scheme.dimension), scheme
    )
    run.echo(f"needle tiles: {len(small)}")
    run.echo(f"L = {result.L}")
    run.echo(f"N = {result.N}")


@cli.command("stationary")
@click.argument("scheme_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_root_option
@_anchor_options
@click.option("--k", "k", type=int, help="Build stationary_patch(k) for the first anchor")
@click.option("--supertiles", type=int, help="Report the order-m supertile groups of the patch")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Binary patch file")
@click.pass_obj
def stationary_cmd(run: Run, scheme_path: Path, root: str, child_path, max_period: TimePoint, k, supertiles, out) -> None:
    """List stationary anchors and build nested patches around a control point."""
    scheme = run.scheme(scheme_path)
    i = scheme.type_of(root)
    if child_path:
        anchors = [flow.anchor_from_path(scheme, i, child_path)]
    else:
        anchors = flow.find_stationary_anchors(scheme, i, max_period, run.settings.state_budget)
    for anchor in anchors:
        run.echo(str(anchor))
    if k is None:
        return
    if not anchors:
        raise click.UsageError("no anchor to build a stationary patch from")
    anchor = anchors[0]
    patch = flow.stationary_patch(scheme, anchor, k, budget=run.settings.budget, pool=run.pool)
    run.echo(f"stationary patch k={k}: {len(patch)} tiles")
    if k > 0:
        previous = flow.stationary_patch(scheme, anchor, k - 1, budget=run.settings.budget, pool=run.pool)
        nested = flow.is_nested(anchor, previous, patch)
        run.echo(f"contains k={k - 1}: {'yes' if nested else 'no'}")
    if supertiles is not None:
        groups = flow.supertile_decompose(scheme, patch, anchor, supertiles)
        run.echo(f"order-{supertiles} supertiles: {len(groups)}")
    if out is not None:
        write_patch(patch, out)
        run.wrote(out)


@cli.command("render")
@click.argument("patch_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--scheme", "scheme_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), help="Scheme of the patch; bundled schemes are found by hash")
@click.option("--style", type=click.Choice(render.COLOR_MODES), default="by-type", show_default=True)
@click.option("--supertiles", type=int, help="Outline the order-m supertiles")
@click.option("--path", "child_path", type=CHILD_PATH, help="Anchor path of a stationary patch, for supertiles")
@click.option("--width", default=800, show_default=True, help="Image width in pixels")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="SVG file")
@click.pass_obj
def render_cmd(run: Run, patch_path: Path, scheme_path, style: str, supertiles, child_path, width: int, out: Path) -> None:
    """Draw a patch as SVG."""
    patch = _read_any_patch(patch_path)
    scheme = _scheme_for_patch(run, patch, scheme_path)
    look = render.RenderStyle(color_mode=style, supertiles=supertiles, width=width)
    if patch.dimension == 1:
        svg = render.render_1d(scheme, patch, look)
    else:
        anchor = flow.anchor_from_path(scheme, patch.meta.root, child_path) if child_path else None
        svg = render.render_svg(scheme, patch, look, anchor)
    out.write_text(svg, encoding="utf-8")
    run.wrote(out)
    run.echo(f"wrote {out} ({len(patch)} tiles)")


@cli.command("oracle")
@click.argument("scheme_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_root_option
@click.option("--time", "t", type=TIME, required=True, help="Exact flow time ln(p/q)")
@click.option("--jump", "eps", type=TIME, help="Also print #F_{t+eps} - #F_t for this exact eps")
@click.pass_obj
def oracle_cmd(run: Run, scheme_path: Path, root: str, t: TimePoint, eps: Optional[TimePoint]) -> None:
    """Number of metric paths of length t, counted on the graph alone."""
    scheme = run.scheme(scheme_path)
    if not t.is_exact:
        raise click.UsageError("the path-count oracle needs an exact time ln(p/q)")
    g = graph.build_graph(scheme)
    run.echo(str(graph.path_count_oracle(g, scheme.type_of(root), t, run.settings.state_budget)))
    if eps is not None:
        if not eps.is_exact:
            raise click.UsageError("--jump needs an exact time ln(p/q)")
        run.echo(f"jump: {statistics.count_jumps(scheme, scheme.type_of(root), t, eps)}")


if __name__ == "__main__":
    cli()
