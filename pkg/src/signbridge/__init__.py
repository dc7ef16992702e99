"""Learning signed network weights from nodal marginals by generalized Sinkhorn scaling."""
from .diagnostics import ConvergenceTrace, RateEstimate, estimate_rate, residuals, validate_fixture
from .errors import *  # noqa: F401,F403
from .hypergraph import Hyperedge, Hypergraph, adjacency_tensor, problem_from_hypergraph, uniformize
from .problem import BridgeProblem, SolveOptions, generate_feasible, partition, validate
from .solver import (
    BridgeSolution,
    ScalingState,
    Status,
    classical_sinkhorn,
    dual_objective,
    kl_objective,
    mode_update,
    solve_generalized,
    solve_scaling_root,
)
from .tensor import SparseEntry, dense_from_sparse, elementwise_product, signed_marginal

__version__ = "0.1.0"
