"""Sharp maximal inequality for martingales with increments bounded by 1.

``D_n(x)`` is the largest possible probability that such a martingale,
started at 0, reaches ``[x, inf)`` within ``n`` steps.  The package computes
it exactly, simulates the walk that attains it, and cross-checks it against
independent oracles.
"""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    BoundTable,
    CaseTag,
    LevelDecomposition,
    StepDistribution,
    as_rational,
    b_tail,
    classify_case,
    d_closed_even,
    d_closed_odd,
    d_recursive,
    d_value,
    hoeffding_bound,
    optimal_step,
)
from .walk import exact_chain_probability, monte_carlo_estimate, simulate_path  # noqa: E402
