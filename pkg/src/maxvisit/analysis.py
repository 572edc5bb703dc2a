"""Numerical certificates for the analytic shape of D_n.

Each check returns a :class:`PropertyReport`.  Checks on rational
quantities (convexity, the one-step dominance inequalities, monotonicity)
are exact, so their tolerance is effectively zero; only the derivative
limits and the Hoeffding comparison involve floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import bounds
from .bounds import BoundTable, RationalLike, as_rational

__all__ = [
    "PropertyReport",
    "parity_intervals",
    "check_piecewise_convexity",
    "check_c1_junctions",
    "check_dnelyg_inequalities",
    "check_global_shape",
    "compare_hoeffding",
]

EXACT_TOL = 1e-12
SLOPE_TOL = 1e-3


@dataclass
class PropertyReport:
    name: str
    grid: str
    worst_violation: float
    tolerance: float
    witnesses: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.worst_violation <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "property": self.name,
            "grid": self.grid,
            "pass": self.passed,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "witnesses": [[n, str(x)] for n, x in self.witnesses],
            **self.extra,
        }


class _Worst:
    """Track the largest violation and where it happened."""

    def __init__(self):
        self.value = 0.0
        self.where = []

    def add(self, violation, n, x):
        v = float(violation)
        if v > self.value:
            self.value, self.where = v, [(n, x)]
        elif v == self.value and v > 0 and len(self.where) < 5:
            self.where.append((n, x))


def _grid(lo: Fraction, hi: Fraction, step: Fraction) -> list[Fraction]:
    """All multiples of step in [lo, hi]."""
    first = math.ceil(lo / step)
    last = math.floor(hi / step)
    return [k * step for k in range(first, last + 1)]


def parity_intervals(n: int) -> list[tuple[int, int]]:
    """(n-2, n), (n-4, n-2), ... down to (0, 1) or (0, 2)."""
    out = []
    hi = n
    while hi > 0:
        out.append((max(hi - 2, 0), hi))
        hi -= 2
    return out


def _d(table: BoundTable):
    def d(n, x):
        return bounds.d_value(n, x, "recursion", table)
    return d


def check_piecewise_convexity(n: int, grid_step: RationalLike = Fraction(1, 16),
                              table: BoundTable | None = None) -> PropertyReport:
    """Second differences of D_n are >= 0 inside each parity interval."""
    if n < 2:
        raise ValueError("n must be at least 2")
    step = as_rational(grid_step)
    d = _d(table or BoundTable())
    worst = _Worst()
    min_second = None
    for lo, hi in parity_intervals(n):
        for x in _grid(Fraction(lo) + step, Fraction(hi) - step, step):
            second = d(n, x - step) - 2 * d(n, x) + d(n, x + step)
            min_second = second if min_second is None else min(min_second, second)
            worst.add(max(Fraction(0), -second), n, x)
    return PropertyReport("piecewise_convexity", f"n={n}, step={step}", worst.value, EXACT_TOL,
                          worst.where, {"min_second_difference": float(min_second or 0)})


def check_c1_junctions(n: int, table: BoundTable | None = None, finest: int = 12) -> PropertyReport:
    """One-sided slopes agree at the integers m < n with n + m odd.

    For each such m the difference quotients with step 2^-finest must match
    the exact one-sided derivatives D_{n-1}(m) - D_{n-1}(m-1) (from the left)
    and D_{n-1}(m+1) - D_{n-1}(m) (from the right), and those two exact values
    must coincide.  x = n, where D_n jumps, is not a junction.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    d = _d(table or BoundTable())
    worst = _Worst()
    junctions = [m for m in range(1, n) if (n + m) % 2 == 1]
    for m in junctions:
        left_exact = d(n - 1, m) - d(n - 1, m - 1)
        right_exact = d(n - 1, m + 1) - d(n - 1, m)
        worst.add(abs(left_exact - right_exact), n, Fraction(m))
        h = Fraction(1, 2**finest)
        left = (d(n, m) - d(n, m - h)) / h
        right = (d(n, m + h) - d(n, m)) / h
        worst.add(abs(left - right), n, Fraction(m))
        worst.add(abs(left - left_exact), n, Fraction(m))
        worst.add(abs(right - right_exact), n, Fraction(m))
    return PropertyReport("c1_junctions", f"n={n}, m in {junctions}, step 2^-{finest}",
                          worst.value, SLOPE_TOL, worst.where)


def dominance_terms(n: int, x: Fraction, d) -> dict[str, Fraction]:
    """Left-hand sides of the three one-step dominance inequalities that apply at (n, x)."""
    fl = math.floor(x)
    a = x - fl
    p2, q2 = 1 - a, a
    p3, q3 = 1 / (1 + a), a / (1 + a)
    p4, q4 = (1 - a) / (2 - a), 1 / (2 - a)
    half = Fraction(1, 2)
    out = {}
    if n % 2 == 1 and 0 < x < 1:
        out["a"] = p2 * d(n, 0) + q2 * d(n, 1) - p3 * d(n, 0) - q3 * d(n, x + 1)
    if math.floor(n + x) % 2 == 0:
        out["b"] = p3 * d(n, fl) + q3 * d(n, x + 1) - half * d(n, x - 1) - half * d(n, x + 1)
    if math.floor(n + x) % 2 == 1 and x > 1:
        out["c"] = p4 * d(n, x - 1) + q4 * d(n, fl + 1) - half * d(n, x - 1) - half * d(n, x + 1)
    return out


def check_dnelyg_inequalities(n: int, grid_step: RationalLike = Fraction(1, 16),
                              table: BoundTable | None = None) -> PropertyReport:
    """All applicable dominance inequalities hold exactly on the grid over (0, n + 1]."""
    if n < 0:
        raise ValueError("n must be non-negative")
    step = as_rational(grid_step)
    d = _d(table or BoundTable())
    worst = _Worst()
    counts = {"a": 0, "b": 0, "c": 0}
    for x in _grid(step, Fraction(n + 1), step):
        for name, lhs in dominance_terms(n, x, d).items():
            counts[name] += 1
            worst.add(max(Fraction(0), -lhs), n, x)
    return PropertyReport("dominance_inequalities", f"n={n}, step={step}", worst.value, EXACT_TOL,
                          worst.where, {"checked": counts})


def check_global_shape(n: int, grid_step: RationalLike = Fraction(1, 16),
                       table: BoundTable | None = None) -> PropertyReport:
    """Nonincreasing in x; 1 on x <= 0; 0 beyond n; D_n(n) = 2^-n; nondecreasing in n."""
    if n < 0:
        raise ValueError("n must be non-negative")
    step = as_rational(grid_step)
    d = _d(table or BoundTable())
    worst = _Worst()
    xs = _grid(Fraction(-1), Fraction(n + 1), step)
    values = [d(n, x) for x in xs]
    for x0, v0, v1 in zip(xs, values, values[1:]):
        worst.add(max(Fraction(0), v1 - v0), n, x0)
    for x, v in zip(xs, values):
        if x <= 0:
            worst.add(abs(v - 1), n, x)
        elif x > n:
            worst.add(abs(v), n, x)
    worst.add(abs(d(n, n) - Fraction(1, 2**n)), n, Fraction(n))
    # left-continuity at n: D_n(n - h) -> 2^-n
    h = Fraction(1, 2**20)
    worst.add(max(Fraction(0), abs(d(n, n - h) - Fraction(1, 2**n)) - Fraction(1, 2**10)), n, n - h)
    if n >= 1:
        for x in xs:
            worst.add(max(Fraction(0), d(n - 1, x) - d(n, x)), n, x)
    return PropertyReport("global_shape", f"n={n}, x in [-1, {n + 1}], step={step}",
                          worst.value, EXACT_TOL, worst.where)


def compare_hoeffding(n: int, grid_step: RationalLike = Fraction(1, 16)) -> PropertyReport:
    """D_n(x) <= exp(-x^2/2n) on the grid over (0, n]; also reports the worst ratio."""
    if n < 1:
        raise ValueError("n must be at least 1")
    step = as_rational(grid_step)
    worst = _Worst()
    max_ratio, at = 0.0, None
    for x in _grid(step, Fraction(n), step):
        exact = bounds.d_value(n, x)
        hoeff = bounds.hoeffding_bound(n, x)
        worst.add(max(0.0, float(exact) - hoeff), n, x)
        ratio = float(exact) / hoeff
        if ratio > max_ratio:
            max_ratio, at = ratio, x
    return PropertyReport("hoeffding_domination", f"n={n}, x in (0, {n}], step={step}",
                          worst.value, EXACT_TOL, worst.where,
                          {"max_ratio": max_ratio, "max_ratio_at": str(at)})
