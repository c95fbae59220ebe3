"""FISTA for affinely constrained convex quadratic minimization."""

from .affine import (
    AffineMap,
    AffineSubspace,
    NoFixedPointError,
    fixed_point_decompose,
    project_affine,
    project_fixed_set,
    range_complement_check,
)
from .diagnostics import (
    certify_rate,
    certify_strong_convergence,
    check_t_asymptotics,
    residual_decay,
)
from .fista import SolveTrace, TSequence, TSequenceError, fista_run, make_t_sequence, picard_run
from .instances import (
    build_alternating,
    build_diagonal,
    build_friedrichs,
    build_shift,
    default_suite,
    random_dense_problem,
)
from .problem import (
    AffineQuadraticProblem,
    Oracle,
    SmoothnessError,
    alternating_projections,
    build_prox_grad,
    evaluate_objective,
    least_squares,
    project_solution_set,
    quadratic_form,
    solve_oracle,
)

__version__ = "0.1.0"
