"""Closed-form asymptotic tile densities of a normalized incommensurable scheme.

All rates are per unit of inflated volume ``e^{dt}`` and share the path-count
denominator ``Z`` of :func:`graph.compute_Q`, so they are exact
:class:`FreqValue` objects with a rational numerator.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Tuple

from ..core.errors import CommensurableSchemeError, SchemeError
from ..data.exact import FreqValue, LogLinearValue, VolumeFraction
from ..data.models import INCOMMENSURABLE, CommensurabilityVerdict, RuleChild, ScaleInterval, Scheme
from .graph import build_graph, classify_commensurability, compute_Q

logger = logging.getLogger(__name__)


def scale_minima(scheme: Scheme) -> Dict[int, Fraction]:
    """Smallest contraction constant into each prototile that appears in some rule."""
    minima: Dict[int, Fraction] = {}
    for rule in scheme.rules:
        for child in rule:
            minima[child.child_type] = min(child.scale, minima.get(child.child_type, child.scale))
    return minima


def beta_min(scheme: Scheme, j: int) -> Fraction:
    scheme.prototile(j)
    minima = scale_minima(scheme)
    if j not in minima:
        raise SchemeError(f"prototile {j} never appears in a rule; the scheme is not irreducible")
    return minima[j]


def legal_interval(scheme: Scheme, j: int) -> ScaleInterval:
    return ScaleInterval.half_open(beta_min(scheme, j), Fraction(1))


@lru_cache(maxsize=64)
def verdict_for(scheme: Scheme) -> CommensurabilityVerdict:
    return classify_commensurability(build_graph(scheme))


def _require_formula(scheme: Scheme) -> None:
    if not scheme.is_normalized:
        raise ValueError("density formulas need a normalized scheme")
    verdict = verdict_for(scheme)
    if verdict.kind != INCOMMENSURABLE:
        raise CommensurableSchemeError(verdict)


def _window(child: RuleChild, interval: ScaleInterval) -> Tuple[Fraction, Fraction]:
    return max(interval.a, child.scale), max(interval.b, child.scale)


def _incoming(scheme: Scheme, h: int, j: int):
    return [c for c in scheme.rule(h) if c.child_type == j]


def phi_coefficients(scheme: Scheme, j: int, interval: ScaleInterval) -> Dict[int, Fraction]:
    """``c_{hj,I}`` for every vertex ``h``."""
    d = scheme.dimension
    coefficients: Dict[int, Fraction] = {}
    for h in scheme.type_ids:
        total = Fraction(0)
        for child in _incoming(scheme, h, j):
            eta, mu = _window(child, interval)
            total += child.scale**d * (eta**-d - mu**-d)
        coefficients[h] = total / d
    return coefficients


def nu_coefficients(scheme: Scheme, j: int, interval: ScaleInterval) -> Dict[int, LogLinearValue]:
    """``d_{hj,I}`` for every vertex ``h``, as log-linear values."""
    d = scheme.dimension
    coefficients: Dict[int, LogLinearValue] = {}
    for h in scheme.type_ids:
        terms = []
        for child in _incoming(scheme, h, j):
            eta, mu = _window(child, interval)
            terms.append((child.scale**d, LogLinearValue.log(mu / eta)))
        coefficients[h] = LogLinearValue.combination(terms)
    return coefficients


def phi(scheme: Scheme, j: int, interval: ScaleInterval) -> FreqValue:
    _require_formula(scheme)
    q = compute_Q(scheme)
    coefficients = phi_coefficients(scheme, j, interval)
    numerator = sum((coefficients[h] * q.numerator[0][h - 1] for h in scheme.type_ids), Fraction(0))
    value = FreqValue(numerator, q.denominator)
    logger.debug("phi evaluated", extra={"scheme": scheme.name, "type": j, "interval": str(interval), "value": str(value)})
    return value


def phi_total_type(scheme: Scheme, j: int) -> FreqValue:
    return phi(scheme, j, legal_interval(scheme, j))


def phi_total(scheme: Scheme) -> FreqValue:
    """Asymptotic number of tiles of any type per unit inflated volume."""
    values = [phi_total_type(scheme, j) for j in scheme.type_ids]
    total = values[0]
    for value in values[1:]:
        total = total + value
    return total


def nu(scheme: Scheme, j: int, interval: ScaleInterval) -> VolumeFraction:
    _require_formula(scheme)
    q = compute_Q(scheme)
    coefficients = nu_coefficients(scheme, j, interval)
    numerator = LogLinearValue.combination((q.numerator[0][h - 1], coefficients[h]) for h in scheme.type_ids)
    return VolumeFraction(numerator, q.denominator)


def nu_total_type(scheme: Scheme, j: int) -> VolumeFraction:
    return nu(scheme, j, legal_interval(scheme, j))


def relative_fraction(scheme: Scheme, j: int, interval: ScaleInterval) -> Fraction:
    """Share of all tiles that are of type ``j`` with scale in ``interval``."""
    return phi(scheme, j, interval).ratio(phi_total(scheme))


def edge_window(child: RuleChild, interval: ScaleInterval) -> Tuple[LogLinearValue, LogLinearValue]:
    """Offset and length, along the child's edge, of the part that yields scales in ``interval``."""
    eta, mu = _window(child, interval)
    return LogLinearValue.log(eta / child.scale), LogLinearValue.log(mu / eta)


def edge_interval_rate(
    scheme: Scheme, h: int, child_index: int, offset: LogLinearValue, length: LogLinearValue
) -> FreqValue:
    """Rate of metric paths that end inside ``[offset, offset + length]`` of one edge out of ``h``."""
    _require_formula(scheme)
    child = scheme.rule(h)[child_index]
    if offset.sign() < 0 or length.sign() < 0:
        raise ValueError("edge sub-interval needs non-negative offset and length")
    edge_length = LogLinearValue.log(1 / child.scale)
    if offset + length > edge_length:
        raise ValueError(f"sub-interval exceeds the edge length {edge_length}")
    d = scheme.dimension
    start = 1 / offset.exp_rational()
    shrink = 1 / length.exp_rational()
    factor = start**d * (1 - shrink**d) / d
    q = compute_Q(scheme)
    return FreqValue(factor * q.numerator[0][h - 1], q.denominator)
