import math
from fractions import Fraction as F

import pytest

from maxvisit import analysis, bounds
from maxvisit.analysis import (
    check_c1_junctions,
    check_dnelyg_inequalities,
    check_global_shape,
    check_piecewise_convexity,
    compare_hoeffding,
    dominance_terms,
    parity_intervals,
)
from maxvisit.bounds import BoundTable, d_value


def d2(x):
    """D_2 written out by hand from the one-step optimization."""
    if x <= 0:
        return F(1)
    if x <= 1:
        return 1 - x / 2 if x < 1 else F(1, 2)
    if x <= 2:
        return F(1, 2) / x
    return F(0)


def test_parity_intervals():
    assert parity_intervals(2) == [(0, 2)]
    assert parity_intervals(3) == [(1, 3), (0, 1)]
    assert parity_intervals(6) == [(4, 6), (2, 4), (0, 2)]
    assert parity_intervals(0) == []


def test_hand_formula_for_d2():
    for j in range(-8, 25):
        x = F(j, 8)
        assert d_value(2, x) == d2(x)


def test_convexity_examples():
    rep = check_piecewise_convexity(2)
    assert rep.passed and rep.worst_violation == 0
    xs = [F(j, 16) for j in range(1, 32)]
    assert min(d2(x - F(1, 16)) - 2 * d2(x) + d2(x + F(1, 16)) for x in xs) >= 0
    assert check_piecewise_convexity(3, F(1, 16)).passed


def test_constant_region_has_zero_second_difference():
    h = F(1, 16)
    for n in range(0, 6):
        for j in range(-40, 0):
            x = F(j, 16)
            assert d_value(n, x - h) - 2 * d_value(n, x) + d_value(n, x + h) == 0


def test_convexity_needs_two_steps():
    with pytest.raises(ValueError):
        check_piecewise_convexity(1)


def test_convexity_detects_a_concave_bump(monkeypatch):
    real = bounds.d_value

    def bumped(n, x, method="auto", table=None):
        v = real(n, x, method, table)
        return v + F(1, 100) if x == F(1) else v

    monkeypatch.setattr(bounds, "d_value", bumped)
    rep = check_piecewise_convexity(2)
    assert not rep.passed
    assert rep.witnesses == [(2, F(1))]
    h = F(1, 16)
    native = d2(1 - h) - 2 * d2(F(1)) + d2(1 + h)
    assert rep.worst_violation == pytest.approx(float(F(2, 100) - native))


def test_c1_examples():
    # both one-sided slopes of D_3 at 2 equal D_2(2) - D_2(1) = -1/4
    assert d2(F(2)) - d2(F(1)) == d2(F(3)) - d2(F(2)) == F(-1, 4)
    rep = check_c1_junctions(3)
    assert rep.passed and "m in [2]" in rep.grid
    rep = check_c1_junctions(2)
    assert rep.passed and "m in [1]" in rep.grid


def test_c1_slope_from_difference_quotients():
    h = F(1, 2**12)
    left = (d_value(3, 2) - d_value(3, 2 - h)) / h
    right = (d_value(3, 2 + h) - d_value(3, 2)) / h
    assert float(left) == pytest.approx(-0.25, abs=1e-3)
    assert float(right) == pytest.approx(-0.25, abs=1e-3)


def test_c1_excludes_jump_point():
    for n in range(2, 9):
        rep = check_c1_junctions(n)
        assert rep.passed
        assert str(n) not in rep.grid.split("m in ")[1].split("]")[0].split(", ")


def test_dominance_examples():
    d = lambda n, x: d_value(n, x)
    assert dominance_terms(1, F(1, 2), d) == {"a": F(1, 12)}
    assert dominance_terms(2, F(1, 2), d) == {"b": F(1, 9)}
    assert dominance_terms(2, F(3, 2), d) == {"c": F(1, 24)}


def test_dominance_region_selection():
    d = lambda n, x: d_value(n, x)
    assert set(dominance_terms(3, F(1, 2), d)) == {"a"}
    assert set(dominance_terms(3, F(3, 2), d)) == {"b"}
    assert set(dominance_terms(4, F(1, 2), d)) == {"b"}
    assert set(dominance_terms(4, F(3, 4), d)) == {"b"}
    assert set(dominance_terms(4, F(5, 4), d)) == {"c"}


@pytest.mark.parametrize("n", range(0, 10))
def test_dominance_all_hold(n):
    rep = check_dnelyg_inequalities(n)
    assert rep.passed and rep.worst_violation == 0
    assert sum(rep.extra["checked"].values()) > 0


def test_global_shape_examples():
    assert d_value(5, -1) == 1
    assert d_value(5, F(5001, 1000)) == 0
    assert d_value(5, 5) == F(1, 32)
    rep = check_global_shape(5, F(1, 16))
    assert rep.passed and rep.worst_violation == 0
    assert check_global_shape(0).passed


def test_global_shape_detects_increase(monkeypatch):
    real = bounds.d_value

    def wrong(n, x, method="auto", table=None):
        return F(1, 2) if n == 3 and x == F(3, 2) else real(n, x, method, table)

    monkeypatch.setattr(bounds, "d_value", wrong)
    assert not check_global_shape(3).passed


def test_hoeffding_examples():
    rep = compare_hoeffding(8, F(1, 4))
    assert rep.passed
    assert 0 < rep.extra["max_ratio"] <= 1
    for n in range(1, 30):
        assert 2.0**-n <= math.exp(-n / 2)
    with pytest.raises(ValueError):
        compare_hoeffding(0)


def test_report_serialization():
    rep = check_c1_junctions(4, BoundTable())
    data = rep.to_dict()
    assert data["property"] == "c1_junctions"
    assert data["pass"] is True
    assert data["tolerance"] == analysis.SLOPE_TOL


@pytest.mark.parametrize("n", range(2, 16))
def test_all_checks_pass_up_to_15(n):
    table = BoundTable()
    assert check_piecewise_convexity(n, table=table).passed
    assert check_c1_junctions(n, table=table).passed
    assert check_dnelyg_inequalities(n, table=table).passed
    assert check_global_shape(n, table=table).passed
    assert compare_hoeffding(n).passed
