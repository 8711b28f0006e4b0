"""HDG solver for Dirichlet boundary control of convection-diffusion PDEs."""

from ._core import (
    Mesh,
    ProblemData,
    Solution,
    __version__,
    build_structured,
    dof_totals,
    make_problem,
    benchmark_problem,
    run_study,
    solve_forward_mms,
    solve_optimality,
    validate,
    verify_identities,
)

__all__ = [
    "Mesh",
    "ProblemData",
    "Solution",
    "__version__",
    "build_structured",
    "dof_totals",
    "make_problem",
    "benchmark_problem",
    "run_study",
    "solve_forward_mms",
    "solve_optimality",
    "validate",
    "verify_identities",
]
