"""The associated graph of a scheme and everything read off it.

Vertices are prototile ids, with one edge per rule child, of length ``ln(1/scale)``.
Exact lengths are :class:`LogLinearValue`; metric graphs built from arbitrary
positive reals carry ``mpmath.mpf`` lengths and only admit heuristic verdicts.
"""

from __future__ import annotations

import heapq
import logging
import math
from collections import Counter, defaultdict
from fractions import Fraction
from functools import lru_cache, reduce
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import mpmath
import networkx as nx
from sympy import Matrix, Rational

from ..core.config import get_settings
from ..core.errors import BudgetExceeded, SingularStructureError
from ..data.exact import LogLinearValue
from ..data.models import (
    COMMENSURABLE,
    HEURISTIC_COMMENSURABLE,
    HEURISTIC_INCOMMENSURABLE,
    INCOMMENSURABLE,
    CommensurabilityVerdict,
    CycleClass,
    Edge,
    GraphMatrixEval,
    QMatrix,
    Scheme,
    SubstGraph,
    TimePoint,
)

logger = logging.getLogger(__name__)

HEURISTIC_BITS = 128
HEURISTIC_MAX_DENOMINATOR = 10**12
HEURISTIC_RESIDUAL_BITS = 100

Horizon = TimePoint | LogLinearValue | Fraction | int


def build_graph(scheme: Scheme) -> SubstGraph:
    edges = [
        Edge(parent, child.child_type, LogLinearValue.log(1 / child.scale), child.scale, index)
        for parent in scheme.type_ids
        for index, child in enumerate(scheme.rule(parent))
    ]
    return SubstGraph(len(scheme.prototiles), tuple(edges))


def build_metric_graph(vertex_count: int, edges: Iterable[Tuple[int, int, object]]) -> SubstGraph:
    """Graph from explicit ``(source, target, length)`` triples.

    Lengths may be LogLinearValues, ``"ln(p/q)"`` strings, or any real accepted
    by ``mpmath.mpf`` (decimal strings keep their full precision).
    """
    built: List[Edge] = []
    counters: Counter = Counter()
    with mpmath.workprec(HEURISTIC_BITS):
        for source, target, raw in edges:
            if not (1 <= source <= vertex_count and 1 <= target <= vertex_count):
                raise ValueError(f"edge ({source}, {target}) references a missing vertex")
            if isinstance(raw, str) and raw.strip().startswith("ln"):
                raw = TimePoint.parse(raw).value
            if isinstance(raw, LogLinearValue):
                if raw.sign() <= 0:
                    raise ValueError("edge lengths must be positive")
                scale = 1 / raw.exp_rational() if raw.is_log_of_rational else None
                built.append(Edge(source, target, raw, scale, counters[source]))
            else:
                length = mpmath.mpf(raw)
                if length <= 0:
                    raise ValueError("edge lengths must be positive")
                built.append(Edge(source, target, length, None, counters[source]))
            counters[source] += 1
    return SubstGraph(vertex_count, tuple(built))


def to_networkx(graph: SubstGraph) -> nx.MultiDiGraph:
    g = nx.MultiDiGraph()
    g.add_nodes_from(graph.vertices)
    for edge in graph.edges:
        g.add_edge(edge.source, edge.target, key=edge.child_index, length=str(edge.length), scale=edge.scale)
    return g


def is_irreducible(graph: SubstGraph) -> bool:
    if graph.vertex_count == 0:
        return False
    return nx.is_strongly_connected(to_networkx(graph))


def edge_classes(graph: SubstGraph) -> Dict[Tuple[int, int, object], Tuple[Edge, ...]]:
    """Edges grouped by (source, target, length), in first-appearance order."""
    classes: Dict[Tuple[int, int, object], List[Edge]] = {}
    for edge in graph.edges:
        classes.setdefault((edge.source, edge.target, edge.length), []).append(edge)
    return {key: tuple(group) for key, group in classes.items()}


def _add(a, b):
    return a + b


def simple_cycle_classes(graph: SubstGraph, budget: Optional[int] = None) -> List[CycleClass]:
    """Simple vertex cycles expanded over their distinct edge lengths.

    Each class counts how many edge sequences along the vertex cycle give that length.
    """
    budget = budget or get_settings().cycle_budget
    collapsed = nx.DiGraph()
    collapsed.add_nodes_from(graph.vertices)
    hop_lengths: Dict[Tuple[int, int], Counter] = defaultdict(Counter)
    for edge in graph.edges:
        collapsed.add_edge(edge.source, edge.target)
        hop_lengths[(edge.source, edge.target)][edge.length] += 1

    classes: List[CycleClass] = []
    for cycle in nx.simple_cycles(collapsed):
        hops = [hop_lengths[(cycle[k], cycle[(k + 1) % len(cycle)])] for k in range(len(cycle))]
        by_length: Counter = Counter()
        for choice in product(*(sorted(h.items(), key=lambda kv: str(kv[0])) for h in hops)):
            length = reduce(_add, (length for length, _ in choice))
            by_length[length] += math.prod(count for _, count in choice)
        start = cycle.index(min(cycle))
        vertices = tuple(cycle[start:] + cycle[:start])
        for length, multiplicity in by_length.items():
            classes.append(CycleClass(vertices, length, multiplicity))
        if len(classes) > budget:
            raise BudgetExceeded("cycle enumeration", budget)
    classes.sort(key=lambda c: (float(c.length), len(c.vertices), c.vertices))
    logger.debug("Simple cycles enumerated", extra={"classes": len(classes)})
    return classes


def _rational_gcd(values: Iterable[Fraction]) -> Fraction:
    values = list(values)
    numerators = reduce(math.gcd, (v.numerator for v in values))
    denominators = reduce(math.lcm, (v.denominator for v in values))
    return Fraction(numerators, denominators)


def _classify_exact(cycles: Sequence[CycleClass]) -> CommensurabilityVerdict:
    basis = sorted({p for c in cycles for p in c.length.primes})
    rows = [[Rational(x.numerator, x.denominator) for x in c.length.vector(basis)] for c in cycles]
    rank = Matrix(rows).rank() if basis else 0
    shortest = cycles[0]
    if rank > 1:
        partner = next(c for c in cycles[1:] if c.length.ratio(shortest.length) is None)
        return CommensurabilityVerdict(INCOMMENSURABLE, witness=(shortest, partner), cycles=tuple(cycles))
    ratios = [c.length.ratio(shortest.length) for c in cycles]
    generator = shortest.length * _rational_gcd(ratios)
    return CommensurabilityVerdict(COMMENSURABLE, generator=generator, cycles=tuple(cycles))


def _is_near_rational(x: mpmath.mpf) -> Tuple[bool, Fraction]:
    """Continued-fraction test: a convergent with bounded denominator and tiny residual."""
    tolerance = mpmath.mpf(2) ** -HEURISTIC_RESIDUAL_BITS
    h0, h1, k0, k1 = 0, 1, 1, 0
    rest = x
    best = Fraction(int(mpmath.nint(x)))
    while True:
        a = int(mpmath.floor(rest))
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > HEURISTIC_MAX_DENOMINATOR:
            return False, best
        best = Fraction(h1, k1)
        if abs(x - mpmath.mpf(h1) / k1) < tolerance * max(1, abs(x)):
            return True, best
        frac = rest - a
        if frac == 0:
            return True, best
        rest = 1 / frac


def _classify_heuristic(cycles: Sequence[CycleClass]) -> CommensurabilityVerdict:
    with mpmath.workprec(HEURISTIC_BITS):
        lengths = [c.length.evaluate(45) if isinstance(c.length, LogLinearValue) else mpmath.mpf(c.length) for c in cycles]
        base = lengths[0]
        for cycle, length in zip(cycles[1:], lengths[1:]):
            rational, best = _is_near_rational(length / base)
            if not rational:
                note = (
                    f"length ratio {mpmath.nstr(length / base, 20)} has no convergent with denominator "
                    f"<= 10^12 at {HEURISTIC_BITS}-bit precision"
                )
                return CommensurabilityVerdict(
                    HEURISTIC_INCOMMENSURABLE, witness=(cycles[0], cycle), note=note, cycles=tuple(cycles)
                )
    note = f"all cycle-length ratios within 2^-{HEURISTIC_RESIDUAL_BITS} of rationals with denominator <= 10^12"
    return CommensurabilityVerdict(HEURISTIC_COMMENSURABLE, note=note, cycles=tuple(cycles))


def classify_commensurability(graph: SubstGraph, budget: Optional[int] = None) -> CommensurabilityVerdict:
    if not is_irreducible(graph):
        raise ValueError("commensurability is defined for strongly connected graphs only")
    cycles = simple_cycle_classes(graph, budget)
    exact = all(isinstance(c.length, LogLinearValue) for c in cycles)
    verdict = _classify_exact(cycles) if exact else _classify_heuristic(cycles)
    logger.info("Commensurability classified", extra={"verdict": str(verdict), "cycles": len(cycles)})
    return verdict


def minimal_witnesses(verdict: CommensurabilityVerdict) -> List[Tuple[CycleClass, CycleClass]]:
    """Every incommensurable cycle pair with the smallest (longer, shorter) lengths.

    Distinct cycles of equal length give several minimal pairs; callers pick one.
    """
    if verdict.kind != INCOMMENSURABLE:
        return []
    pairs = []
    for k, short in enumerate(verdict.cycles):
        for long in verdict.cycles[k + 1 :]:
            if long.length.ratio(short.length) is None:
                pairs.append((long, short) if long.length >= short.length else (short, long))
    if not pairs:
        return []
    best = min((a.length, b.length) for a, b in pairs)
    return [(a, b) for a, b in pairs if (a.length, b.length) == best]


@lru_cache(maxsize=64)
def eval_M(scheme: Scheme, s: int) -> GraphMatrixEval:
    if s < 0:
        raise ValueError("s must be a non-negative integer")
    n = len(scheme.prototiles)
    values = [[Fraction(0)] * n for _ in range(n)]
    terms: List[List[List[Tuple[Fraction, LogLinearValue]]]] = [[[] for _ in range(n)] for _ in range(n)]
    for parent in scheme.type_ids:
        for child in scheme.rule(parent):
            weight = child.scale**s
            values[parent - 1][child.child_type - 1] += weight
            terms[parent - 1][child.child_type - 1].append((-weight, LogLinearValue.log(1 / child.scale)))
    derivative = tuple(tuple(LogLinearValue.combination(cell) for cell in row) for row in terms)
    return GraphMatrixEval(s, tuple(tuple(row) for row in values), derivative)


def _adjugate(values: Tuple[Tuple[Fraction, ...], ...]) -> List[List[Fraction]]:
    n = len(values)
    if n == 1:
        return [[Fraction(1)]]
    a = Matrix(n, n, lambda i, j: (1 if i == j else 0) - Rational(values[i][j].numerator, values[i][j].denominator))
    adj = a.adjugate()
    return [[Fraction(int(adj[i, j].p), int(adj[i, j].q)) for j in range(n)] for i in range(n)]


@lru_cache(maxsize=64)
def compute_Q(scheme: Scheme) -> QMatrix:
    if not scheme.is_normalized:
        raise ValueError("compute_Q needs a normalized scheme")
    m = eval_M(scheme, scheme.dimension)
    adj = _adjugate(m.values)
    if all(x == 0 for row in adj for x in row):
        raise SingularStructureError("adj(I - M(d)) vanishes; the scheme is not irreducible")
    if any(row != adj[0] for row in adj[1:]):
        raise SingularStructureError("rows of adj(I - M(d)) differ; the scheme is not irreducible")
    n = len(adj)
    denominator = LogLinearValue.combination(
        (-adj[i][j], m.derivative[j][i]) for i in range(n) for j in range(n)
    )
    if denominator.sign() <= 0:
        raise SingularStructureError(f"non-positive path-count denominator {denominator}")
    logger.debug("Q computed", extra={"scheme": scheme.name, "denominator": str(denominator)})
    return QMatrix(tuple(tuple(row) for row in adj), denominator)


def horizon_rational(horizon: Horizon) -> Fraction:
    """The rational ``u`` of an exact time ``ln(u)``."""
    if isinstance(horizon, TimePoint):
        if not horizon.is_exact:
            raise ValueError("path enumeration needs an exact time ln(u)")
        return horizon.u
    if isinstance(horizon, LogLinearValue):
        return horizon.exp_rational()
    return Fraction(horizon)


def _check_exact(graph: SubstGraph) -> None:
    if not all(edge.scale is not None for edge in graph.edges):
        raise ValueError("exact path enumeration needs rational edge scales")


def path_time_multiset(
    graph: SubstGraph, i: int, j: int, horizon: Horizon, budget: Optional[int] = None
) -> List[Tuple[LogLinearValue, int]]:
    """Lengths of paths i -> j up to the horizon with their path counts, ascending."""
    _check_exact(graph)
    budget = budget or get_settings().state_budget
    floor = 1 / horizon_rational(horizon)
    heap: List[Tuple[Fraction, int]] = [(-Fraction(1), i)]
    pending: Dict[Tuple[int, Fraction], int] = {(i, Fraction(1)): 1}
    times: Counter = Counter()
    processed = 0
    while heap:
        neg_q, vertex = heapq.heappop(heap)
        q = -neg_q
        count = pending.pop((vertex, q))
        processed += 1
        if processed > budget:
            raise BudgetExceeded("path enumeration state", budget)
        if vertex == j:
            times[q] += count
        for edge in graph.out_edges(vertex):
            child_q = q * edge.scale
            if child_q < floor:
                continue
            key = (edge.target, child_q)
            if key not in pending:
                pending[key] = 0
                heapq.heappush(heap, (-child_q, edge.target))
            pending[key] += count
    return [(LogLinearValue.log(1 / q), times[q]) for q in sorted(times, reverse=True)]


def enumerate_path_times(
    graph: SubstGraph, i: int, j: int, horizon: Horizon, budget: Optional[int] = None
) -> List[LogLinearValue]:
    """Sorted multiset of path lengths i -> j within [0, horizon]."""
    out: List[LogLinearValue] = []
    for time, count in path_time_multiset(graph, i, j, horizon, budget):
        out.extend([time] * count)
    return out


def path_count_oracle(graph: SubstGraph, i: int, t: Horizon, budget: Optional[int] = None) -> int:
    """Number of metric paths of length exactly ``t`` starting at ``i``, by graph traversal only."""
    _check_exact(graph)
    budget = budget or get_settings().state_budget
    u = horizon_rational(t)
    if u <= 1:
        return 1
    heap: List[Tuple[Fraction, int]] = [(-Fraction(1), i)]
    pending: Dict[Tuple[int, Fraction], int] = {(i, Fraction(1)): 1}
    leaves = 0
    processed = 0
    while heap:
        neg_q, vertex = heapq.heappop(heap)
        q = -neg_q
        count = pending.pop((vertex, q))
        processed += 1
        if processed > budget:
            raise BudgetExceeded("path enumeration state", budget)
        for edge in graph.out_edges(vertex):
            child_q = q * edge.scale
            if u * child_q <= 1:
                leaves += count
                continue
            key = (edge.target, child_q)
            if key not in pending:
                pending[key] = 0
                heapq.heappush(heap, (-child_q, edge.target))
            pending[key] += count
    return leaves


def max_window_gap(graph: SubstGraph, i: int, h: float, budget: Optional[int] = None) -> float:
    """Largest gap between consecutive distinct return times to ``i`` inside [h-1, h]."""
    horizon = Fraction(math.ceil(math.exp(h)))
    times = sorted({float(t) for t, _ in path_time_multiset(graph, i, i, horizon, budget)})
    window = [h - 1] + [t for t in times if h - 1 <= t <= h] + [h]
    return max(b - a for a, b in zip(window, window[1:]))
