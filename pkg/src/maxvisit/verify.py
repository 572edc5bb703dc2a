"""Verification suites behind ``maxvisit verify``.

Every suite builds its own :class:`BoundTable`, so nothing memoized in an
earlier run can mask a change to the code under test.  A suite that raises
is reported as failed rather than aborting the whole run.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from . import analysis, bounds, oracle, walk
from .bounds import BoundTable

STANDARD_DENOMINATORS = (2, 3, 4, 7, 8, 16)

SUITES = ("closed-vs-recursion", "chain", "envelope", "hoeffding", "analysis",
          "supermartingale", "stopping")

DEFAULT_N_MAX = {
    "closed-vs-recursion": 25,
    "chain": 20,
    "envelope": 8,
    "hoeffding": 25,
    "analysis": 15,
    "supermartingale": 3,
    "stopping": 4,
}
# exhaustive searches stay at desk scale whatever --n-max says
HARD_CAP = {"envelope": 8, "stopping": 4, "supermartingale": 3}

INTEGER_IDENTITY_N = 30
ENVELOPE_RESOLUTION = 1e-3
ENVELOPE_TOL = 1e-2
HOEFFDING_SLACK = 1e-12


def standard_grid(n: int, denominators=STANDARD_DENOMINATORS) -> list[Fraction]:
    """Sorted {j/q : q in denominators} intersected with [0, n + 1]."""
    return sorted({Fraction(j, q) for q in denominators for j in range(q * (n + 1) + 1)})


@dataclass
class SuiteResult:
    suite: str
    checked: int = 0
    worst_violation: float = 0.0
    witnesses: list = field(default_factory=list)
    error: Optional[str] = None
    details: dict = field(default_factory=dict)
    failures: int = 0

    @property
    def passed(self) -> bool:
        return self.error is None and self.failures == 0

    def fail(self, magnitude, n, x, what: str = "") -> None:
        self.failures += 1
        self.worst_violation = max(self.worst_violation, float(magnitude))
        if len(self.witnesses) < 5:
            self.witnesses.append([n, str(x), what] if what else [n, str(x)])

    def check(self, ok: bool, magnitude, n, x, what: str = "") -> None:
        self.checked += 1
        if not ok:
            self.fail(magnitude, n, x, what)

    def to_dict(self) -> dict:
        out = {
            "suite": self.suite,
            "pass": self.passed,
            "worst_violation": self.worst_violation,
            "witnesses": self.witnesses,
            "checked": self.checked,
        }
        if self.error is not None:
            out["error"] = self.error
        if self.details:
            out["details"] = self.details
        return out


def _closed_vs_recursion(res: SuiteResult, n_max: int) -> None:
    table = BoundTable()
    for n in range(n_max + 1):
        for x in standard_grid(n):
            closed = bounds.d_value(n, x, "closed")
            rec = bounds.d_recursive(n, x, table)
            res.check(closed == rec, abs(closed - rec), n, x, "closed != recursion")
    # integer levels: D_n(k) = B(n, k) = Rademacher tail expression
    for n in range(max(n_max, INTEGER_IDENTITY_N) + 1):
        for k in range(n + 1):
            d = bounds.d_value(n, k)
            b = bounds.b_tail(n, k)
            tail = 2 * oracle.rademacher_tail(n, k + 1)
            if (n + k) % 2 == 0:
                tail += oracle.rademacher_tail(n, k) - oracle.rademacher_tail(n, k + 1)
            res.check(d == b == tail, max(abs(d - b), abs(b - tail)), n, k, "integer identity")
            if n >= 1 and (n + k) % 2 == 1:
                shift = bounds.b_tail(n - 1, k)
                res.check(b == shift, abs(b - shift), n, k, "shift identity")


def _chain(res: SuiteResult, n_max: int) -> None:
    for n in range(n_max + 1):
        for x in standard_grid(n):
            chain = walk.exact_chain_probability(n, x)
            d = bounds.d_value(n, x)
            res.check(chain == d, abs(chain - d), n, x, "chain != D_n")


def _envelope(res: SuiteResult, n_max: int) -> None:
    by_lattice: dict[int, list[Fraction]] = {}
    for x in standard_grid(n_max):
        by_lattice.setdefault(oracle.lattice_size(x, ENVELOPE_RESOLUTION), []).append(x)
    for N, xs in sorted(by_lattice.items()):
        table = oracle.envelope_value_table(n_max, N)
        for n in range(n_max + 1):
            for x in xs:
                if x > n + 1:
                    continue
                env = oracle.table_value(table, n, x, N)
                gap = abs(env - float(bounds.d_value(n, x)))
                res.check(gap <= ENVELOPE_TOL, gap, n, x, "envelope gap")
                res.details["max_gap"] = max(res.details.get("max_gap", 0.0), gap)


def _hoeffding(res: SuiteResult, n_max: int) -> None:
    for n in range(1, n_max + 1):
        for x in standard_grid(n):
            if not 0 < x <= n:
                continue
            d = float(bounds.d_value(n, x))
            h = bounds.hoeffding_bound(n, x)
            res.check(d <= h + HOEFFDING_SLACK, d - h, n, x, "exceeds Hoeffding")


def _analysis(res: SuiteResult, n_max: int) -> None:
    table = BoundTable()
    for n in range(n_max + 1):
        reports = [analysis.check_dnelyg_inequalities(n, table=table),
                   analysis.check_global_shape(n, table=table)]
        if n >= 2:
            reports.append(analysis.check_piecewise_convexity(n, table=table))
            reports.append(analysis.check_c1_junctions(n, table=table))
        if n >= 1:
            reports.append(analysis.compare_hoeffding(n))
        for rep in reports:
            res.check(rep.passed, rep.worst_violation, n, rep.witnesses[0][1] if rep.witnesses else "-",
                      rep.name)


def _supermartingale(res: SuiteResult, n_max: int, seed: int = 20240501,
                     steps: int = 1000, trees: int = 200) -> None:
    rng = random.Random(seed)
    for i in range(steps):
        step = oracle.random_conditional_step(rng)
        comp = oracle.supermartingale_compensator(step)
        mean = comp.mean
        res.check(mean == 0, abs(mean), 1, i, "compensated mean")
        for (v, p), (w, r) in zip(step.support, comp.support):
            res.check(p == r and abs(w) <= 1 and w - v >= 0, max(abs(w) - 1, v - w, 0), 1, i, "pointwise")
    levels = [Fraction(k, 4) for k in range(-2, 13)]
    for i in range(trees):
        depth = 1 + i % max(n_max, 1)
        tree = oracle.random_tree(rng, depth)
        comp = {node: oracle.supermartingale_compensator(s) for node, s in tree.items()}
        for x in levels:
            before = oracle.evaluate_tree(tree, depth, x)
            after = oracle.evaluate_tree(comp, depth, x)
            res.check(after >= before, before - after, depth, x, "domination")
    compensated = {id(s): oracle.supermartingale_compensator(s) for s in oracle.STEP_ALPHABET}
    exhaustive = 0
    for depth in range(1, max(n_max, 1) + 1):
        for tree in oracle.all_trees(oracle.STEP_ALPHABET, depth):
            comp = {node: compensated[id(s)] for node, s in tree.items()}
            exhaustive += 1
            for x in levels:
                before = oracle.evaluate_tree(tree, depth, x)
                after = oracle.evaluate_tree(comp, depth, x)
                res.check(after >= before, before - after, depth, x, "domination (exhaustive)")
    res.details["exhaustive_trees"] = exhaustive


def candidate_steps(x: Fraction) -> set[Fraction]:
    """{+-1, +-1/2, +-1/4, +-{x}, +-(1-{x})}."""
    alpha = x - (x.numerator // x.denominator)
    base = {Fraction(1), Fraction(1, 2), Fraction(1, 4), alpha, 1 - alpha}
    return {s * v for v in base for s in (1, -1)}


def _stopping(res: SuiteResult, n_max: int) -> None:
    for n in range(n_max + 1):
        for x in standard_grid(n):
            cands = candidate_steps(x)
            terminal = oracle.brute_force_strategy_sup(n, x, cands, oracle.TERMINAL)
            running = oracle.brute_force_strategy_sup(n, x, cands, oracle.RUNNING_MAX)
            d = bounds.d_value(n, x)
            res.check(terminal == running, abs(terminal - running), n, x, "terminal != running-max")
            res.check(running <= d and terminal <= d, max(running, terminal) - d, n, x, "exceeds D_n")
            res.check(oracle.verify_stopping_equivalence(n, x, cands), 1, n, x, "stopped strategy")


RUNNERS: dict[str, Callable[[SuiteResult, int], None]] = {
    "closed-vs-recursion": _closed_vs_recursion,
    "chain": _chain,
    "envelope": _envelope,
    "hoeffding": _hoeffding,
    "analysis": _analysis,
    "supermartingale": _supermartingale,
    "stopping": _stopping,
}


def run_suite(name: str, n_max: Optional[int] = None) -> SuiteResult:
    if name not in RUNNERS:
        raise ValueError(f"unknown suite {name!r}")
    limit = DEFAULT_N_MAX[name] if n_max is None else n_max
    if name in HARD_CAP:
        limit = min(limit, HARD_CAP[name])
    res = SuiteResult(name)
    res.details["n_max"] = limit
    try:
        RUNNERS[name](res, limit)
    except Exception as exc:  # a crashing suite is a failed suite
        res.error = f"{type(exc).__name__}: {exc}"
    return res


def run_suites(suite: str = "all", n_max: Optional[int] = None) -> list[SuiteResult]:
    names = SUITES if suite == "all" else (suite,)
    return [run_suite(name, n_max) for name in names]
