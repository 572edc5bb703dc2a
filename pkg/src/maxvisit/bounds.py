"""Exact values of the sharp bound D_n(x).

D_n(x) is the supremum, over martingales M with M_0 = 0 and increments
bounded by 1, of P{max_{k<=n} M_k >= x}.  Everything here is computed in
exact rational arithmetic with :class:`fractions.Fraction`.

Two independent evaluation routes are provided: the one-step recursion
(``d_recursive``) and the parity-dependent closed forms (``d_closed_odd`` /
``d_closed_even``) built from the binomial tail sums ``b_tail``.
"""
from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from functools import lru_cache
from typing import Union

Rational = Fraction
RationalLike = Union[int, Fraction, str, Decimal]

__all__ = [
    "Rational",
    "as_rational",
    "LevelDecomposition",
    "CaseTag",
    "StepDistribution",
    "BoundTable",
    "b_tail",
    "classify_case",
    "optimal_step",
    "d_recursive",
    "d_closed_odd",
    "d_closed_even",
    "d_value",
    "hoeffding_bound",
]


def as_rational(x: RationalLike) -> Fraction:
    """Convert ``x`` to an exact Fraction.

    Strings may be integers, finite decimals (``"1.5"``) or ``"p/q"``.
    Floats are rejected so that binary rounding never leaks into exact code.
    """
    if isinstance(x, bool):
        raise TypeError("bool is not a level")
    if isinstance(x, float):
        raise TypeError("floats are not accepted; pass a Fraction, int or decimal string")
    if isinstance(x, str):
        text = x.strip()
        if not text:
            raise ValueError("empty number")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not an exact rational: {x!r}") from exc
    return Fraction(x)


@dataclass(frozen=True)
class LevelDecomposition:
    """``x = m + alpha`` with integer ``m`` and ``0 <= alpha < 1``."""

    m: int
    alpha: Fraction

    @classmethod
    def of(cls, x: RationalLike) -> "LevelDecomposition":
        x = as_rational(x)
        m = math.floor(x)
        return cls(m, x - m)

    @property
    def value(self) -> Fraction:
        return self.m + self.alpha

    @property
    def is_integer(self) -> bool:
        return self.alpha == 0


class CaseTag(enum.Enum):
    ABSORBED = "absorbed"
    DEAD = "dead"
    INTEGER = "integer"
    SMALL_ODD = "small_odd"
    EVEN_FLOOR = "even_floor"
    ODD_FLOOR = "odd_floor"


@dataclass(frozen=True)
class StepDistribution:
    """Mean-zero two-point law of one increment of M.

    The walk moves up by ``up`` (towards the target, so the remaining
    distance drops by ``up``) with probability ``up_prob`` and down by
    ``down`` with probability ``down_prob``.
    """

    up: Fraction
    up_prob: Fraction
    down: Fraction
    down_prob: Fraction

    def __post_init__(self):
        if self.up_prob + self.down_prob != 1:
            raise ValueError("probabilities must sum to 1")
        if self.up_prob * self.up != self.down_prob * self.down:
            raise ValueError("step is not mean-zero")
        if not (0 <= self.up <= 1 and 0 <= self.down <= 1):
            raise ValueError("step sizes must lie in [0, 1]")

    def landings(self, rho: Fraction) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
        """((remaining after up-move, prob), (remaining after down-move, prob))."""
        return (rho - self.up, self.up_prob), (rho + self.down, self.down_prob)


class BoundTable:
    """Thread-safe memo of ``(h, rho) -> D_h(rho)``.

    Entries are only published once fully computed, so concurrent readers
    never see partial state; two writers racing on one key store equal values.
    """

    def __init__(self):
        self._entries: dict[tuple[int, Fraction], Fraction] = {}
        self._lock = threading.Lock()

    def get(self, h: int, rho: Fraction):
        return self._entries.get((h, rho))

    def put(self, h: int, rho: Fraction, value: Fraction) -> None:
        with self._lock:
            self._entries.setdefault((h, rho), value)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key) -> bool:
        return key in self._entries

    def items(self):
        with self._lock:
            return list(self._entries.items())


@lru_cache(maxsize=None)
def b_tail(n: int, k: int) -> Fraction:
    """Normalized sum of the ``n - k + 1`` smallest binomial coefficients of order n.

    ``B(n, k) = 2^-n * sum_{i=0}^{n-k} C(n, floor(i/2))`` for ``0 <= k <= n``,
    extended by 1 for ``k <= 0`` and 0 for ``k > n``.
    """
    if k <= 0:
        return Fraction(1)
    if n < 0:
        raise ValueError("n must be non-negative")
    if k > n:
        return Fraction(0)
    total = sum(math.comb(n, i // 2) for i in range(n - k + 1))
    return Fraction(total, 2**n)


def classify_case(h: int, rho: RationalLike) -> CaseTag:
    """Which branch of the recursion applies with ``h`` steps left at distance ``rho``."""
    if h < 0:
        raise ValueError("h must be non-negative")
    rho = as_rational(rho)
    if rho <= 0:
        return CaseTag.ABSORBED
    if rho > h:
        return CaseTag.DEAD
    if rho.denominator == 1:
        return CaseTag.INTEGER
    rest = h - 1
    if rest % 2 == 1 and rho < 1:
        return CaseTag.SMALL_ODD
    if (math.floor(rho) + rest) % 2 == 0:
        return CaseTag.EVEN_FLOOR
    # the guards above leave exactly the ceil-parity case with rho > 1
    assert (math.ceil(rho) + rest) % 2 == 0 and rho > 1
    return CaseTag.ODD_FLOOR


def optimal_step(h: int, rho: RationalLike) -> StepDistribution:
    """Mean-zero step maximizing ``E D_{h-1}(rho - X)`` over ``|X| <= 1``."""
    rho = as_rational(rho)
    case = classify_case(h, rho)
    alpha = rho - math.floor(rho)
    if case is CaseTag.INTEGER:
        half = Fraction(1, 2)
        return StepDistribution(Fraction(1), half, Fraction(1), half)
    if case is CaseTag.SMALL_ODD:
        # lands at remaining distance 0 or 1
        return StepDistribution(rho, 1 - rho, 1 - rho, rho)
    if case is CaseTag.EVEN_FLOOR:
        # lands at floor(rho) or rho + 1
        return StepDistribution(alpha, 1 / (1 + alpha), Fraction(1), alpha / (1 + alpha))
    if case is CaseTag.ODD_FLOOR:
        # lands at rho - 1 or ceil(rho)
        return StepDistribution(Fraction(1), (1 - alpha) / (2 - alpha), 1 - alpha, 1 / (2 - alpha))
    raise ValueError(f"no step is defined in state {case.value} (h={h}, rho={rho})")


def d_recursive(h: int, rho: RationalLike, table: BoundTable | None = None) -> Fraction:
    """D_h(rho) by the one-step recursion, memoized in ``table``.

    Recursion depth equals ``h``.
    """
    if h < 0:
        raise ValueError("h must be non-negative")
    rho = as_rational(rho)
    if rho <= 0:
        return Fraction(1)
    if rho > h:
        return Fraction(0)
    if table is None:
        table = BoundTable()
    cached = table.get(h, rho)
    if cached is not None:
        return cached
    step = optimal_step(h, rho)
    (r_up, p_up), (r_down, p_down) = step.landings(rho)
    value = p_up * d_recursive(h - 1, r_up, table) + p_down * d_recursive(h - 1, r_down, table)
    table.put(h, rho, value)
    return value


def _check_closed_domain(n: int, x: Fraction, want_odd: bool) -> LevelDecomposition:
    dec = LevelDecomposition.of(x)
    if not 0 < x <= n:
        raise ValueError(f"closed form needs 0 < x <= n, got n={n}, x={x}")
    if ((dec.m + n) % 2 == 1) != want_odd:
        parity = "odd" if want_odd else "even"
        raise ValueError(f"m + n must be {parity} (n={n}, x={x})")
    return dec


def d_closed_odd(n: int, x: RationalLike) -> Fraction:
    """Closed form of D_n(x) for ``m + n`` odd, ``x = m + alpha``."""
    x = as_rational(x)
    dec = _check_closed_domain(n, x, want_odd=True)
    m, alpha = dec.m, dec.alpha
    top = (n - m - 1) // 2
    ratio = alpha / (1 + alpha)
    coeff = 1 / (1 + alpha)  # a_0
    total = Fraction(0)
    for i in range(top + 1):
        total += coeff * b_tail(n - i - 1, m + i)
        coeff *= ratio
    return total


def d_closed_even(n: int, x: RationalLike) -> Fraction:
    """Closed form of D_n(x) for ``m + n`` even, ``x = m + alpha``."""
    x = as_rational(x)
    dec = _check_closed_domain(n, x, want_odd=False)
    m, alpha = dec.m, dec.alpha
    ratio = (1 - alpha) / (2 - alpha)
    coeff = 1 / (2 - alpha)  # b_0 when 0 < m
    total = Fraction(0)
    for i in range(m):
        total += coeff * b_tail(n - i - 1, m - i + 1)
        coeff *= ratio
    power = Fraction(1)
    for _ in range(m):
        power *= ratio
    if alpha:
        # at x = n the index n - m - 1 is negative but the weight is 0
        total += alpha * power * b_tail(n - m - 1, 1)
    total += (1 - alpha) * power * b_tail(n - m - 2, 0)
    return total


def d_value(n: int, x: RationalLike, method: str = "auto",
            table: BoundTable | None = None, check: bool = False) -> Fraction:
    """D_n(x), the sharp bound on P{max_{k<=n} M_k >= x}.

    ``method`` is ``"auto"``/``"closed"`` (closed form chosen by the parity of
    ``m + n``) or ``"recursion"``.  With ``check=True`` the closed form is
    also compared against the recursion and an AssertionError is raised on
    any mismatch.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    x = as_rational(x)
    if method not in ("auto", "closed", "recursion"):
        raise ValueError(f"unknown method {method!r}")
    if x <= 0:
        return Fraction(1)
    if x > n:
        return Fraction(0)
    if method == "recursion":
        return d_recursive(n, x, table)
    m = math.floor(x)
    value = d_closed_odd(n, x) if (m + n) % 2 else d_closed_even(n, x)
    if check:
        other = d_recursive(n, x, table)
        assert value == other, f"closed form {value} != recursion {other} at n={n}, x={x}"
    return value


def hoeffding_bound(n: int, x: RationalLike) -> float:
    """exp(-x^2 / 2n)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    x = as_rational(x)
    return math.exp(-float(x * x / (2 * n)))
