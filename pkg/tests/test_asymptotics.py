from fractions import Fraction

import pytest

from multitile.core.errors import CommensurableSchemeError
from multitile.data.exact import LogLinearValue
from multitile.data.models import ScaleInterval
from multitile.services.asymptotics import (
    beta_min,
    edge_interval_rate,
    edge_window,
    legal_interval,
    nu,
    nu_coefficients,
    nu_total_type,
    phi,
    phi_coefficients,
    phi_total,
    phi_total_type,
    relative_fraction,
)

MIDDLE = ScaleInterval(Fraction(3, 5), Fraction(4, 5))


def test_legal_intervals(triangles, kakutani):
    assert beta_min(triangles, 1) == Fraction(1, 5)
    assert beta_min(triangles, 2) == Fraction(1, 5)
    assert str(legal_interval(kakutani, 1)) == "(1/3, 1]"


def test_phi_coefficients(triangles):
    coefficients = phi_coefficients(triangles, 1, MIDDLE)
    assert coefficients == {1: Fraction(119, 288), 2: Fraction(175, 1152)}


def test_phi_on_middle_interval(triangles):
    value = phi(triangles, 1, MIDDLE)
    assert value.numerator == Fraction(175, 1152)
    assert value.symbolic() == "(175/1152)/Z"
    assert float(value) == pytest.approx(0.29597, abs=1e-5)


def test_phi_totals(triangles):
    upward = phi_total_type(triangles, 1)
    downward = phi_total_type(triangles, 2)
    assert upward.numerator == Fraction(207, 200)
    assert downward.numerator == Fraction(189, 200)
    assert float(upward) == pytest.approx(2.0165, abs=5e-4)
    assert float(downward) == pytest.approx(1.8411, abs=5e-4)
    assert phi_total(triangles).numerator == Fraction(396, 200)


def test_relative_fraction(triangles):
    share = relative_fraction(triangles, 1, MIDDLE)
    assert share == Fraction(4375, 57024)
    assert float(share) == pytest.approx(0.0767, abs=1e-4)


def test_single_prototile_total_numerator(square, kakutani):
    # One prototile: the total numerator is sum((1 - alpha^d) / d) over the rule.
    for scheme in (square, kakutani):
        total = phi_total(scheme)
        d = scheme.dimension
        expected = sum((1 - c.scale**d) / d for c in scheme.rule(1))
        assert total.numerator == expected


def test_nu_coefficients(triangles):
    coefficients = nu_coefficients(triangles, 1, MIDDLE)
    ln = LogLinearValue.log(Fraction(4, 3))
    assert coefficients[1] == ln * Fraction(17, 25)
    assert coefficients[2] == ln * Fraction(1, 4)


def test_volume_fractions_sum_to_one(triangles, square):
    for scheme in (triangles, square):
        parts = [nu_total_type(scheme, j) for j in scheme.type_ids]
        total = parts[0]
        for part in parts[1:]:
            total = total + part
        assert total.exact_ratio() == 1


def test_nu_is_between_zero_and_one(triangles):
    value = float(nu(triangles, 1, MIDDLE))
    assert 0 < value < 1


def test_commensurable_scheme_raises(fixed_half):
    with pytest.raises(CommensurableSchemeError) as info:
        phi(fixed_half, 1, legal_interval(fixed_half, 1))
    assert "commensurable" in str(info.value.verdict)


def test_edge_window(triangles):
    child = triangles.rule(2)[3]
    offset, length = edge_window(child, MIDDLE)
    assert offset == LogLinearValue.log(Fraction(6, 5))
    assert length == LogLinearValue.log(Fraction(4, 3))


def test_whole_edge_rate_matches_phi_term(triangles):
    # The full edge D -> U of length ln2 ends a tile at every scale in (1/2, 1].
    child_index = 3
    rate = edge_interval_rate(triangles, 2, child_index, LogLinearValue.zero(), LogLinearValue.log(2))
    c = Fraction(1, 4) * (4 - 1) / 2
    assert rate.numerator == c * Fraction(8, 25)
    with pytest.raises(ValueError):
        edge_interval_rate(triangles, 2, child_index, LogLinearValue.zero(), LogLinearValue.log(3))


def test_phi_is_additive_over_intervals(triangles):
    a, b, c = Fraction(1, 4), Fraction(1, 2), Fraction(9, 10)
    whole = phi(triangles, 2, ScaleInterval(a, c))
    parts = phi(triangles, 2, ScaleInterval(a, b)) + phi(triangles, 2, ScaleInterval(b, c))
    assert whole == parts


def test_phi_ignores_interval_endpoints(triangles):
    closed = phi(triangles, 1, MIDDLE)
    half_open = phi(triangles, 1, ScaleInterval.half_open(MIDDLE.a, MIDDLE.b))
    assert closed == half_open


def test_phi_vanishes_below_legal_scales(triangles):
    assert phi(triangles, 1, ScaleInterval(Fraction(1, 10), Fraction(1, 5))).numerator == 0


def test_relative_fractions_sum_to_one(triangles):
    total = sum(relative_fraction(triangles, j, legal_interval(triangles, j)) for j in triangles.type_ids)
    assert total == 1
