"""Independent checks of the bound.

Nothing in here calls the recursion or the closed forms:

* ``rademacher_tail`` counts outcomes of the symmetric +-1 walk;
* ``envelope_value_iteration`` recomputes the value function from scratch
  by taking, at every step, the least concave majorant of the continuation
  value at displacement 0 (the best mean-zero mixture);
* ``brute_force_strategy_sup`` searches all strategy trees built from
  mean-zero two-point steps on a finite candidate set;
* ``supermartingale_compensator`` lifts a super-martingale step to a
  martingale step that dominates it pointwise.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

import numba
import numpy as np

from .bounds import RationalLike, as_rational

__all__ = [
    "ConditionalStep",
    "EnvelopeSample",
    "StrategyTree",
    "rademacher_tail",
    "envelope_at_zero",
    "continuation_samples",
    "envelope_value_table",
    "envelope_value_iteration",
    "lattice_size",
    "table_value",
    "brute_force_strategy_sup",
    "optimal_strategy",
    "evaluate_tree",
    "stop_tree",
    "verify_stopping_equivalence",
    "supermartingale_compensator",
    "random_conditional_step",
    "random_tree",
    "all_trees",
    "STEP_ALPHABET",
]

MARTINGALE = "martingale"
SUPERMARTINGALE = "supermartingale"
TERMINAL = "terminal"
RUNNING_MAX = "running-max"


# --------------------------------------------------------------------------
# Rademacher tails


def rademacher_tail(n: int, k: int) -> Fraction:
    """P{R_n >= k} for a sum of n independent symmetric +-1 signs."""
    if n < 0:
        raise ValueError("n must be non-negative")
    # R_n = 2j - n with j ~ Binomial(n, 1/2)
    lo = max(0, -(-(n + k) // 2))
    return Fraction(sum(math.comb(n, j) for j in range(lo, n + 1)), 2**n)


# --------------------------------------------------------------------------
# Concave envelope


class EnvelopeSample(NamedTuple):
    t: float
    value: float


_HULL_EPS = 1e-12


@numba.njit(cache=True)
def _hull_at_zero(t, y, stack):
    """Least concave majorant of (t, y) at t = 0.

    ``t`` must be strictly increasing and contain a point <= 0 and one >= 0.
    Collinear points are kept on the hull so that the touching pair closest
    to 0 is reported.  Returns (value, i_left, i_right); i_left == i_right
    when the sample at 0 is itself on the hull.
    """
    top = 0
    for k in range(t.shape[0]):
        while top >= 2:
            o = stack[top - 2]
            a = stack[top - 1]
            cross = (t[a] - t[o]) * (y[k] - y[o]) - (y[a] - y[o]) * (t[k] - t[o])
            if cross > _HULL_EPS * (t[k] - t[o]):
                top -= 1
            else:
                break
        stack[top] = k
        top += 1
    for s in range(top):
        j = stack[s]
        if t[j] == 0.0:
            return y[j], j, j
        if t[j] > 0.0:
            i = stack[s - 1]
            value = (t[j] * y[i] - t[i] * y[j]) / (t[j] - t[i])
            return value, i, j
    return np.nan, -1, -1


def envelope_at_zero(samples: Iterable) -> tuple[float, tuple[float, float]]:
    """Value at t = 0 of the least concave majorant of ``samples``.

    ``samples`` is a sequence of ``(t, value)`` pairs with strictly
    increasing t spanning 0.  Returns the value and the two touching
    abscissas ``(t1 <= 0 <= t2)``; ``(0.0, 0.0)`` when the sample at 0 is on
    the majorant.
    """
    arr = np.asarray([(float(a), float(b)) for a, b in samples], dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise ValueError("need at least two samples")
    t = np.ascontiguousarray(arr[:, 0])
    y = np.ascontiguousarray(arr[:, 1])
    if np.any(np.diff(t) <= 0):
        raise ValueError("abscissas must be strictly increasing")
    if not (t[0] <= 0.0 <= t[-1]):
        raise ValueError("samples must span t = 0")
    value, i, j = _hull_at_zero(t, y, np.empty(t.shape[0], dtype=np.int64))
    return float(value), (float(t[i]), float(t[j]))


def lattice_size(x: RationalLike, grid_resolution: float) -> int:
    """Smallest multiple N of the denominator of x with 1/N <= grid_resolution.

    On the lattice (1/N)Z both x and every integer are grid points, so the
    kinks of the value function and all landing points are sampled exactly.
    """
    if grid_resolution <= 0:
        raise ValueError("grid_resolution must be positive")
    q = as_rational(x).denominator
    return q * max(1, math.ceil(1.0 / (grid_resolution * q) - 1e-12))


@numba.njit(cache=True)
def _envelope_levels(n, N):
    size = (n + 1) * N + 1  # rho = i / N for i = 0 .. (n+1)N
    out = np.zeros((n + 1, size))
    out[:, 0] = 1.0  # rho <= 0 is absorbed
    width = 2 * N + 1
    t = np.empty(width)
    y = np.empty(width)
    stack = np.empty(width, dtype=np.int64)
    for j in range(width):
        t[j] = (j - N) / N
    for h in range(1, n + 1):
        prev = out[h - 1]
        for i in range(1, min(h * N, size - 1) + 1):
            for j in range(width):
                src = i - (j - N)
                if src <= 0:
                    y[j] = 1.0
                elif src >= size:
                    y[j] = 0.0
                else:
                    y[j] = prev[src]
            value, a, b = _hull_at_zero(t, y, stack)
            out[h, i] = value
    return out


@lru_cache(maxsize=16)
def envelope_value_table(n: int, N: int) -> np.ndarray:
    """Value-iteration table V[h, i] ~ D_h(i / N) for h <= n, 0 <= i <= (n+1)N.

    ``V_0 = 1{rho <= 0}``; ``V_h(rho)`` is the concave majorant at 0 of
    ``t -> V_{h-1}(rho - t)`` over t in [-1, 1] (step 1/N), with V = 1 for
    rho <= 0.
    """
    if n < 0 or N < 1:
        raise ValueError("need n >= 0 and N >= 1")
    table = _envelope_levels(n, N)
    table.setflags(write=False)
    return table


def table_value(table: np.ndarray, h: int, x: Fraction, N: int) -> float:
    if x <= 0:
        return 1.0
    i = x * N
    assert i.denominator == 1
    i = int(i)
    return float(table[h, i]) if i < table.shape[1] else 0.0


def envelope_value_iteration(n: int, x: RationalLike, grid_resolution: float = 1e-3) -> float:
    """D_n(x) recomputed by concave-envelope value iteration on a lattice."""
    if n < 0:
        raise ValueError("n must be non-negative")
    x = as_rational(x)
    if x <= 0:
        return 1.0
    if x > n:
        return 0.0
    N = lattice_size(x, grid_resolution)
    return table_value(envelope_value_table(n, N), n, x, N)


def continuation_samples(n: int, x: RationalLike, grid_resolution: float = 1e-3) -> list[EnvelopeSample]:
    """Samples of ``t -> V_{n-1}(x - t)`` on [-1, 1] from the value-iteration table."""
    if n < 1:
        raise ValueError("n must be at least 1")
    x = as_rational(x)
    N = lattice_size(x, grid_resolution)
    table = envelope_value_table(n - 1, N)
    samples = []
    for j in range(-N, N + 1):
        t = Fraction(j, N)
        samples.append(EnvelopeSample(float(t), table_value(table, n - 1, x - t, N)))
    return samples


# --------------------------------------------------------------------------
# Conditional steps and strategy trees


@dataclass(frozen=True)
class ConditionalStep:
    """Finite-support law of one increment given the past."""

    support: tuple[tuple[Fraction, Fraction], ...]
    kind: str = MARTINGALE

    def __post_init__(self):
        support = tuple((Fraction(v), Fraction(p)) for v, p in self.support)
        object.__setattr__(self, "support", support)
        if not support:
            raise ValueError("empty support")
        if any(p <= 0 for _, p in support):
            raise ValueError("probabilities must be positive")
        if sum(p for _, p in support) != 1:
            raise ValueError("probabilities must sum to 1")
        if any(abs(v) > 1 for v, _ in support):
            raise ValueError("step values must lie in [-1, 1]")
        if self.kind == MARTINGALE and self.mean != 0:
            raise ValueError("martingale step must have mean 0")
        if self.kind == SUPERMARTINGALE and self.mean > 0:
            raise ValueError("super-martingale step must have mean <= 0")
        if self.kind not in (MARTINGALE, SUPERMARTINGALE):
            raise ValueError(f"unknown class {self.kind!r}")

    @property
    def mean(self) -> Fraction:
        return sum((v * p for v, p in self.support), Fraction(0))

    @classmethod
    def two_point(cls, down: Fraction, up: Fraction) -> "ConditionalStep":
        """Mean-zero law on {down < 0 < up}."""
        return cls(((down, up / (up - down)), (up, -down / (up - down))))


ZERO_STEP = ConditionalStep(((Fraction(0), Fraction(1)),))

# node -> step, keyed by the tuple of branch indices taken from the root;
# absent nodes idle
StrategyTree = dict


def evaluate_tree(tree: StrategyTree, depth: int, x: RationalLike, objective: str = TERMINAL) -> Fraction:
    """Exact P{M_depth >= x} (terminal) or P{max_k M_k >= x} (running-max)."""
    x = as_rational(x)
    if objective not in (TERMINAL, RUNNING_MAX):
        raise ValueError(f"unknown objective {objective!r}")

    def walk(node: tuple, pos: Fraction, k: int, seen: bool) -> Fraction:
        seen = seen or pos >= x
        if k == depth:
            return Fraction(int(seen if objective == RUNNING_MAX else pos >= x))
        step = tree.get(node, ZERO_STEP)
        return sum((p * walk(node + (b,), pos + v, k + 1, seen)
                    for b, (v, p) in enumerate(step.support)), Fraction(0))

    return walk((), Fraction(0), 0, False)


def stop_tree(tree: StrategyTree, depth: int, x: RationalLike) -> StrategyTree:
    """The same strategy with every node at or above x replaced by idling."""
    x = as_rational(x)
    out: StrategyTree = {}

    def walk(node: tuple, pos: Fraction, k: int):
        if k == depth or pos >= x:
            return
        step = tree.get(node, ZERO_STEP)
        out[node] = step
        for b, (v, _) in enumerate(step.support):
            walk(node + (b,), pos + v, k + 1)

    walk((), Fraction(0), 0)
    return out


class _Search:
    """Exhaustive optimum over trees of mean-zero two-point steps.

    The optimal continuation depends on the history only through the current
    position and (for running-max) whether x was already reached, so the
    search over trees is memoized on that state.  Positions are scaled to
    integers by the common denominator of x and the candidates.
    """

    def __init__(self, x: Fraction, candidates: Sequence[Fraction], objective: str):
        if objective not in (TERMINAL, RUNNING_MAX):
            raise ValueError(f"unknown objective {objective!r}")
        values = sorted({as_rational(c) for c in candidates})
        if any(abs(v) > 1 for v in values):
            raise ValueError("candidate steps must lie in [-1, 1]")
        scale = math.lcm(x.denominator, *(v.denominator for v in values))
        self.scale = scale
        self.x = int(x * scale)
        self.objective = objective
        downs = [int(v * scale) for v in values if v < 0]
        ups = [int(v * scale) for v in values if v > 0]
        self.pairs = [(a, b) for a in sorted(downs, key=abs) for b in sorted(ups)]
        self.reach = max(ups, default=0)
        self.memo: dict[tuple[int, int], tuple[Fraction, tuple[int, int] | None]] = {}

    def value(self, h: int, pos: int) -> Fraction:
        return self.solve(h, pos)[0]

    def solve(self, h: int, pos: int):
        if self.objective == RUNNING_MAX and pos >= self.x:
            return Fraction(1), None
        if h == 0:
            return Fraction(int(pos >= self.x)), None
        if pos + h * self.reach < self.x:
            return Fraction(0), None
        key = (h, pos)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        best, arg = self.value(h - 1, pos), None
        for a, b in self.pairs:
            v = (b * self.value(h - 1, pos + a) - a * self.value(h - 1, pos + b)) / Fraction(b - a)
            if v > best:
                best, arg = v, (a, b)
        self.memo[key] = (best, arg)
        return best, arg

    def tree(self, n: int) -> StrategyTree:
        out: StrategyTree = {}

        def walk(node: tuple, pos: int, k: int):
            if k == n:
                return
            _, arg = self.solve(n - k, pos)
            if arg is None:
                out[node] = ZERO_STEP
                walk(node + (0,), pos, k + 1)
                return
            a, b = arg
            out[node] = ConditionalStep.two_point(Fraction(a, self.scale), Fraction(b, self.scale))
            walk(node + (0,), pos + a, k + 1)
            walk(node + (1,), pos + b, k + 1)

        walk((), 0, 0)
        return out


def brute_force_strategy_sup(n: int, x: RationalLike, candidate_steps: Iterable,
                             objective: str = TERMINAL) -> Fraction:
    """Best probability over strategy trees with steps from ``candidate_steps``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    x = as_rational(x)
    return _Search(x, list(candidate_steps), objective).value(n, 0)


def optimal_strategy(n: int, x: RationalLike, candidate_steps: Iterable,
                     objective: str = TERMINAL) -> tuple[Fraction, StrategyTree]:
    x = as_rational(x)
    search = _Search(x, list(candidate_steps), objective)
    return search.value(n, 0), search.tree(n)


def verify_stopping_equivalence(n: int, x: RationalLike, candidate_steps: Iterable) -> bool:
    """Terminal and running-max optima agree, and stopping attains the latter.

    The optimal running-max strategy, stopped at x, is evaluated under the
    terminal objective; it must reach the running-max optimum exactly.
    """
    x = as_rational(x)
    cands = list(candidate_steps)
    terminal = brute_force_strategy_sup(n, x, cands, TERMINAL)
    running, tree = optimal_strategy(n, x, cands, RUNNING_MAX)
    stopped = stop_tree(tree, n, x)
    return terminal == running and evaluate_tree(stopped, n, x, TERMINAL) == running


# --------------------------------------------------------------------------
# Super-martingale compensator


def supermartingale_compensator(step: ConditionalStep) -> ConditionalStep:
    """Map X to X + Y with Y = (X - 1) e / (1 - e), e = E X <= 0.

    Each support value v becomes (v - e) / (1 - e) with the same probability;
    the result has mean exactly 0 and Y >= 0 pointwise.
    """
    e = step.mean
    if e > 0:
        raise ValueError("step has positive mean; not a super-martingale increment")
    return ConditionalStep(tuple(((v - e) / (1 - e), p) for v, p in step.support), MARTINGALE)


def random_conditional_step(rng: random.Random, max_support: int = 3, max_den: int = 8) -> ConditionalStep:
    """A pseudorandom super-martingale step with small rational support."""
    k = rng.randint(1, max_support)
    values = set()
    while len(values) < k:
        den = rng.randint(1, max_den)
        values.add(Fraction(rng.randint(-den, den), den))
    weights = [rng.randint(1, 9) for _ in values]
    total = sum(weights)
    support = [(v, Fraction(w, total)) for v, w in zip(sorted(values), weights)]
    if sum(v * p for v, p in support) > 0:
        support = [(-v, p) for v, p in support]
    return ConditionalStep(tuple(support), SUPERMARTINGALE)


def random_tree(rng: random.Random, depth: int) -> StrategyTree:
    """A full tree of pseudorandom super-martingale steps of the given depth."""
    tree: StrategyTree = {}

    def grow(node: tuple, k: int):
        if k == depth:
            return
        step = random_conditional_step(rng)
        tree[node] = step
        for b in range(len(step.support)):
            grow(node + (b,), k + 1)

    grow((), 0)
    return tree


def all_trees(alphabet, depth: int):
    """Yield every full tree of the given depth whose nodes use steps from alphabet."""

    def subtrees(k: int):
        if k == 0:
            yield {}
            return
        for step in alphabet:
            for children in itertools.product(list(subtrees(k - 1)), repeat=len(step.support)):
                tree = {(): step}
                for b, child in enumerate(children):
                    tree.update({(b,) + node: s for node, s in child.items()})
                yield tree

    yield from subtrees(depth)


# Small super-martingale alphabet for exhaustive tree checks.
STEP_ALPHABET = (
    ConditionalStep(((Fraction(-1), Fraction(1)),), SUPERMARTINGALE),
    ConditionalStep(((Fraction(-1), Fraction(3, 4)), (Fraction(1), Fraction(1, 4))), SUPERMARTINGALE),
    ConditionalStep(((Fraction(-1, 2), Fraction(1, 2)), (Fraction(1, 2), Fraction(1, 2))), SUPERMARTINGALE),
)
