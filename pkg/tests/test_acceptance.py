"""Acceptance criteria, one test each; outcomes are summarized at the end of the run."""
import itertools
import math
import time
from fractions import Fraction as F

from maxvisit import bounds, verify
from maxvisit.analysis import (
    check_c1_junctions,
    check_dnelyg_inequalities,
    check_global_shape,
    check_piecewise_convexity,
)
from maxvisit.bounds import (
    BoundTable,
    CaseTag,
    StepDistribution,
    b_tail,
    d_closed_even,
    d_closed_odd,
    d_recursive,
    d_value,
    hoeffding_bound,
)
from maxvisit.cli import main
from maxvisit.oracle import envelope_value_iteration
from maxvisit.verify import standard_grid
from maxvisit.walk import exact_chain_probability, monte_carlo_estimate


def closed(n, x):
    """The closed form selected by the parity of floor(x) + n; boundary values are conventions."""
    if x <= 0 or x > n:
        return d_value(n, x, "closed")
    m = math.floor(x)
    return d_closed_odd(n, x) if (m + n) % 2 == 1 else d_closed_even(n, x)


def rademacher_tail_expression(n, k):
    """2 P{R_n >= k+1} + P{R_n = k} when n+k is even, else 2 P{R_n >= k+1}.

    The law of R_n comes from full sign enumeration for small n and from
    binomial counts beyond that.
    """
    if n <= 14:
        counts = {}
        for signs in itertools.product((-1, 1), repeat=n):
            counts[sum(signs)] = counts.get(sum(signs), 0) + 1
    else:
        counts = {n - 2 * j: math.comb(n, j) for j in range(n + 1)}
    above = sum(c for v, c in counts.items() if v >= k + 1)
    at = counts.get(k, 0) if (n + k) % 2 == 0 else 0
    return F(2 * above + at, 2**n)


def test_criterion_01_three_route_exactness(criterion):
    start = time.perf_counter()
    table = BoundTable()
    bad = []
    count = 0
    for n in range(0, 21):
        for x in standard_grid(n):
            rec = d_recursive(n, x, table)
            count += 1
            if not (rec == closed(n, x) == exact_chain_probability(n, x)):
                bad.append((n, x))
    elapsed = time.perf_counter() - start
    criterion(1, not bad and elapsed < 60, f"{count} points, {len(bad)} mismatches, {elapsed:.1f}s")
    assert not bad
    assert elapsed < 60


def test_criterion_02_integer_identity(criterion):
    bad = [(n, k) for n in range(0, 31) for k in range(0, n + 1)
           if not (d_value(n, k) == b_tail(n, k) == rademacher_tail_expression(n, k))]
    criterion(2, not bad, f"{31 * 32 // 2} (n, k) pairs, {len(bad)} mismatches")
    assert not bad


PINNED = [(1, F(1, 2), F(2, 3)), (2, F(1, 2), F(3, 4)), (2, F(3, 2), F(1, 3)),
          (3, F(1, 2), F(7, 9)), (3, F(3, 2), F(5, 12))] + [(n, F(n), F(1, 2**n)) for n in range(1, 11)]


def test_criterion_03_pinned_values(criterion):
    bad = []
    worst_env = 0.0
    for n, x, expected in PINNED:
        env = envelope_value_iteration(n, x, 1e-3)
        worst_env = max(worst_env, abs(env - float(expected)))
        if d_recursive(n, x) != expected or closed(n, x) != expected or abs(env - float(expected)) > 1e-2:
            bad.append((n, x))
    criterion(3, not bad, f"{len(PINNED)} values, envelope max gap {worst_env:.2e}")
    assert not bad


def test_criterion_04_envelope_agreement(criterion):
    start = time.perf_counter()
    worst, where = 0.0, None
    for n in range(0, 9):
        for x in standard_grid(n):
            gap = abs(envelope_value_iteration(n, x, 1e-3) - float(d_value(n, x)))
            if gap > worst:
                worst, where = gap, (n, x)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-2 and elapsed < 300
    criterion(4, ok, f"max gap {worst:.2e} at {where}, {elapsed:.1f}s")
    assert worst <= 1e-2
    assert elapsed < 300


def test_criterion_05_stopping_equivalence(criterion):
    res = verify.run_suite("stopping", 4)
    assert verify.candidate_steps(F(7, 4)) == {s * v for v in (F(1), F(1, 2), F(1, 4), F(3, 4))
                                                 for s in (1, -1)}
    criterion(5, res.passed, f"{res.checked} checks for n <= 4, worst {res.worst_violation}")
    assert res.passed, res.to_dict()


MC_CASES = [(2, F(1, 2)), (3, F(3, 2)), (8, F(3)), (9, F(7, 2))]
MC_SEED = 7


def test_criterion_06_monte_carlo(criterion):
    start = time.perf_counter()
    zs = []
    for n, x in MC_CASES:
        est = monte_carlo_estimate(n, x, 1_000_000, MC_SEED)
        zs.append((est.estimate - float(d_value(n, x))) / est.standard_error)
    elapsed = time.perf_counter() - start
    ok = all(abs(z) <= 4 for z in zs) and elapsed < 120
    criterion(6, ok, "z = " + ", ".join(f"{z:+.2f}" for z in zs) + f", {elapsed:.1f}s")
    assert all(abs(z) <= 4 for z in zs)
    assert elapsed < 120


def test_criterion_07_hoeffding(criterion):
    worst = 0.0
    count = 0
    for n in range(1, 26):
        for x in standard_grid(n):
            if 0 < x <= n:
                count += 1
                worst = max(worst, float(d_value(n, x)) - hoeffding_bound(n, x))
    ok = worst <= 1e-12
    criterion(7, ok, f"{count} points, max excess {worst:.3e}")
    assert ok


def test_criterion_08_analytic_shape(criterion):
    failed = []
    for n in range(0, 16):
        table = BoundTable()
        reports = [check_dnelyg_inequalities(n, table=table), check_global_shape(n, table=table)]
        if n >= 2:
            reports += [check_piecewise_convexity(n, table=table), check_c1_junctions(n, table=table)]
        for rep in reports:
            exact = rep.name != "c1_junctions"
            if not rep.passed or (exact and rep.worst_violation != 0):
                failed.append((n, rep.name))
    criterion(8, not failed, f"n <= 15, failures {failed}")
    assert not failed


def test_criterion_09_supermartingale(criterion):
    res = verify.run_suite("supermartingale", 3)
    assert res.details["exhaustive_trees"] > 0
    criterion(9, res.passed, f"{res.checked} checks, {res.details['exhaustive_trees']} exhaustive trees")
    assert res.passed, res.to_dict()


def _printed_b_tail(n, k):
    """B(n, k) with the binomial arguments in the printed (swapped) order."""
    if k <= 0:
        return F(1)
    if k > n:
        return F(0)
    return F(sum(math.comb(i // 2, n) for i in range(n - k + 1)), 2**n)


def _swapped_step(real):
    def step(h, rho):
        s = real(h, rho)
        if bounds.classify_case(h, rho) is not CaseTag.EVEN_FLOOR:
            return s
        bad = object.__new__(StepDistribution)
        for name, value in (("up", s.up), ("up_prob", s.down_prob),
                            ("down", s.down), ("down_prob", s.up_prob)):
            object.__setattr__(bad, name, value)
        return bad
    return step


def test_criterion_10_mutation_sensitivity(criterion, monkeypatch, capsys):
    baseline = main(["verify", "--suite", "all", "--n-max", "4"])
    with monkeypatch.context() as m:
        m.setattr(bounds, "b_tail", _printed_b_tail)
        printed = main(["verify", "--suite", "all", "--n-max", "4"])
    with monkeypatch.context() as m:
        m.setattr(bounds, "optimal_step", _swapped_step(bounds.optimal_step))
        swapped = main(["verify", "--suite", "all", "--n-max", "4"])
    capsys.readouterr()
    ok = (baseline, printed, swapped) == (0, 2, 2)
    criterion(10, ok, f"exit codes: baseline {baseline}, printed index {printed}, swapped p3/q3 {swapped}")
    assert baseline == 0
    assert printed == 2
    assert swapped == 2
