"""Giant component of G(n, p) via the exploration random walk."""

__version__ = "0.1.0"

from .theory import Params, TheoryValues, solve_rho, dual_lambda, sigma2, theory_values  # noqa: E402,F401
from .sampler import RngStream, seed_stream, binomial  # noqa: E402,F401
from .exploration import (  # noqa: E402,F401
    ReplicaSummary,
    Trajectory,
    component_sizes,
    martingale_series,
    run_walk,
    simulate_summary,
    summarize_replica,
)
