"""The extremal random walk that attains D_n(x).

The walk is tracked through its remaining distance ``rho_k = x - M_k``.
From a live state it takes the step returned by ``bounds.optimal_step``;
once ``rho <= 0`` it is stopped (absorbed), and once ``rho`` exceeds the
number of steps left it idles, since the target is out of reach.

Randomness comes from a counter-based Philox stream.  Path ``i`` always
reads the same block of 64-bit words, so results do not depend on batch
size or on how many worker threads are used.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import bounds
from .bounds import RationalLike, StepDistribution, as_rational

__all__ = [
    "WalkState",
    "WalkPath",
    "McEstimate",
    "PathSample",
    "transition",
    "stopping_time",
    "path_max",
    "simulate_path",
    "sample_paths",
    "monte_carlo_estimate",
    "exact_chain_probability",
]

_TWO64 = 1 << 64
DEFAULT_BATCH = 1 << 16


@dataclass(frozen=True)
class WalkState:
    steps_elapsed: int
    remaining: Fraction
    absorbed: bool = False


@dataclass(frozen=True)
class WalkPath:
    levels: tuple[Fraction, ...]
    horizon: int
    target: Fraction

    @property
    def visited(self) -> bool:
        return path_max(self) >= self.target


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    standard_error: float
    paths: int
    seed: int


def transition(state: WalkState, n: int) -> Optional[StepDistribution]:
    """Law of the next increment, or None when the walk idles."""
    if state.steps_elapsed >= n:
        raise ValueError("no steps left")
    left = n - state.steps_elapsed
    if state.absorbed or state.remaining <= 0 or state.remaining > left:
        return None
    return bounds.optimal_step(left, state.remaining)


def stopping_time(path: WalkPath) -> Optional[int]:
    """First k with M_k >= x; None if the level is never reached."""
    for k, level in enumerate(path.levels):
        if level >= path.target:
            return k
    return None


def path_max(path: WalkPath) -> Fraction:
    return max(path.levels)


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 1 << 128:
        raise ValueError("seed must be in [0, 2**128)")
    return seed


def _stream_words(seed: int, start: int, count: int, n: int) -> np.ndarray:
    """Random words for paths ``start .. start+count-1``, shape (count, n).

    Path i owns Philox counters ``i*blocks .. (i+1)*blocks - 1``; each
    counter yields four words, of which the first n are used.
    """
    blocks = (n + 3) // 4
    if n == 0 or count == 0:
        return np.zeros((count, n), dtype=np.uint64)
    gen = np.random.Philox(key=_check_seed(seed), counter=start * blocks)
    raw = gen.random_raw(count * blocks * 4)
    return raw.reshape(count, blocks * 4)[:, :n]


def _up_threshold(p: Fraction) -> int:
    """Smallest T with: word < T  <=>  word / 2^64 < p, for 64-bit words."""
    t = -(-p.numerator * _TWO64 // p.denominator)
    # only reachable when 1 - p < 2^-64
    return min(t, _TWO64 - 1)


def simulate_path(n: int, x: RationalLike, seed: int, index: int = 0) -> WalkPath:
    """One stopped path of the extremal walk, drawn from substream ``index``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    x = as_rational(x)
    words = _stream_words(seed, index, 1, n)[0]
    level = Fraction(0)
    levels = [level]
    state = WalkState(0, x, x <= 0)
    for k in range(n):
        step = transition(state, n)
        if step is not None:
            if int(words[k]) < _up_threshold(step.up_prob):
                level += step.up
            else:
                level -= step.down
        levels.append(level)
        remaining = x - level
        state = WalkState(k + 1, remaining, state.absorbed or remaining <= 0)
    return WalkPath(tuple(levels), n, x)


class _Kernel:
    """Transition tables over integer state codes.

    Remaining distances lie in Z or Z + alpha (alpha = {x}); ``rho = i + f*alpha``
    is encoded as ``2*(i + 1) + f``, which is increasing in rho.
    """

    def __init__(self, n: int, x: Fraction):
        self.n = n
        self.x = x
        self.alpha = x - math.floor(x)
        self.ncodes = 2 * (n + 3)
        self.thresh = np.zeros((n, self.ncodes), dtype=np.uint64)
        self.up_code = np.tile(np.arange(self.ncodes, dtype=np.int64), (n, 1))
        self.down_code = self.up_code.copy()
        for k in range(n):
            left = n - k
            for code in range(self.ncodes):
                rho = self.decode(code)
                if rho is None or rho <= 0 or rho > left:
                    continue
                step = bounds.optimal_step(left, rho)
                self.thresh[k, code] = _up_threshold(step.up_prob)
                self.up_code[k, code] = self.encode(rho - step.up)
                self.down_code[k, code] = self.encode(rho + step.down)

    def decode(self, code: int) -> Optional[Fraction]:
        i, f = divmod(code, 2)
        if f and not self.alpha:
            return None
        return i - 1 + f * self.alpha

    def encode(self, rho: Fraction) -> int:
        i = math.floor(rho)
        frac = rho - i
        if frac == 0:
            f = 0
        elif frac == self.alpha:
            f = 1
        else:
            raise AssertionError(f"remaining distance {rho} left the lattice Z + {{0, {self.alpha}}}")
        code = 2 * (i + 1) + f
        if not 0 <= code < self.ncodes:
            raise AssertionError(f"remaining distance {rho} outside tracked range")
        return code


@dataclass
class PathSample:
    """Per-path summaries of a simulated batch (index order)."""

    n: int
    x: Fraction
    seed: int
    first_index: int
    final_remaining: list  # Fractions
    stop_times: np.ndarray  # -1 when never stopped
    min_remaining: list  # Fractions
    visited: np.ndarray
    final_level: np.ndarray  # float M_n

    @property
    def max_level(self) -> list:
        return [self.x - r for r in self.min_remaining]


def _run_batch(kernel: _Kernel, seed: int, start: int, count: int):
    """Final state codes, running minimum codes and stopping times (-1 if none)."""
    words = _stream_words(seed, start, count, kernel.n)
    codes = np.full(count, kernel.encode(kernel.x), dtype=np.int64)
    min_codes = codes.copy()
    stop = np.full(count, -1, dtype=np.int64)
    zero_code = kernel.encode(Fraction(0))
    for k in range(kernel.n):
        up = words[:, k] < kernel.thresh[k, codes]
        codes = np.where(up, kernel.up_code[k, codes], kernel.down_code[k, codes])
        np.minimum(min_codes, codes, out=min_codes)
        stop[(stop < 0) & (codes <= zero_code)] = k + 1
    return codes, min_codes, stop


def sample_paths(n: int, x: RationalLike, paths: int, seed: int, first_index: int = 0) -> PathSample:
    """Simulate paths ``first_index .. first_index+paths-1`` and keep per-path summaries."""
    if n < 0:
        raise ValueError("n must be non-negative")
    x = as_rational(x)
    seed = _check_seed(seed)
    if x <= 0:
        return PathSample(n, x, seed, first_index, [x] * paths, np.zeros(paths, dtype=np.int64),
                          [x] * paths, np.ones(paths, dtype=bool), np.zeros(paths))
    kernel = _Kernel(n, x)
    codes, min_codes, stop = _run_batch(kernel, seed, first_index, paths)
    rho_of = [kernel.decode(c) for c in range(kernel.ncodes)]
    level_of = np.array([float(x - r) if r is not None else np.nan for r in rho_of])
    return PathSample(n, x, seed, first_index,
                      [rho_of[c] for c in codes], stop, [rho_of[c] for c in min_codes],
                      stop >= 0, level_of[codes])


def _count_visits(kernel: _Kernel, seed: int, start: int, count: int) -> int:
    _, _, stop = _run_batch(kernel, seed, start, count)
    return int(np.count_nonzero(stop >= 0))


def monte_carlo_estimate(n: int, x: RationalLike, paths: int, seed: int,
                         threads: int = 1, batch: int = DEFAULT_BATCH) -> McEstimate:
    """Fraction of simulated stopped paths that reach [x, inf)."""
    if paths < 1:
        raise ValueError("paths must be at least 1")
    if n < 0:
        raise ValueError("n must be non-negative")
    x = as_rational(x)
    seed = _check_seed(seed)
    if x <= 0:
        visits = paths
    else:
        kernel = _Kernel(n, x)
        chunks = [(s, min(batch, paths - s)) for s in range(0, paths, batch)]
        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                counts = list(pool.map(lambda c: _count_visits(kernel, seed, *c), chunks))
        else:
            counts = [_count_visits(kernel, seed, *c) for c in chunks]
        visits = sum(counts)
    est = visits / paths
    return McEstimate(est, math.sqrt(est * (1 - est) / paths), paths, seed)


def exact_chain_probability(n: int, x: RationalLike) -> Fraction:
    """P{extremal walk stopped at x reaches [x, inf) within n steps}, exactly.

    Forward propagation of the law of the remaining distance; absorbed mass
    is collected as it arrives and dead states (rho > steps left) are dropped.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    x = as_rational(x)
    if x <= 0:
        return Fraction(1)
    hit = Fraction(0)
    layer = {x: Fraction(1)}
    for k in range(n):
        left = n - k
        nxt: dict[Fraction, Fraction] = {}
        for rho, mass in layer.items():
            if rho > left:
                continue
            step = bounds.optimal_step(left, rho)
            for r, p in step.landings(rho):
                if r <= 0:
                    hit += mass * p
                else:
                    nxt[r] = nxt.get(r, 0) + mass * p
        layer = nxt
    return hit
