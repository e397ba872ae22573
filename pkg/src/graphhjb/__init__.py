"""Hamilton-Jacobi-Bellman equations on finite weighted graphs.

Operators use the comparison ("I") sign convention: ``u <= v`` with
``u(x) = v(x)`` implies ``I(u, x) <= I(v, x)``, and subsolutions satisfy
``I(u) >= f``. The Hamiltonian ("H") form used for eikonal problems is
related by ``I(u, x) = H(-u, x)``.
"""

from .graph import (
    Boundary,
    Graph,
    KernelFamily,
    TransitionKernel,
    ValidationError,
    bump,
    discrete_gradient,
    path_distance,
    policy_kernel,
)
from .operators import (
    BellmanInf,
    Eikonal,
    Extremal,
    Hamiltonian,
    LinearGenerator,
    LinearOperator,
    MonotoneDifferenceOperator,
    MonotoneProfile,
    PEikonal,
    PucciJMinus,
    hamiltonian_of,
    operator_from_config,
    wrap_hamiltonian,
)
from .solvers import (
    ExitCertificate,
    SolveReport,
    certify_exit_time,
    default_subsolution,
    enumerate_policies,
    perron_gauss_seidel,
    policy_iteration_bellman,
    solve_eikonal,
    solve_linear_exit,
    solve_peikonal,
    value_iteration_bellman,
)
from .stochastic import (
    MCEstimate,
    Trajectory,
    estimate_exit_functional,
    evaluate_policy_mc,
    sample_path,
    verify_dynkin,
)
from .verification import (
    CheckReport,
    check_comparison_conclusion,
    check_constant_monotonicity,
    check_convex_representation,
    check_differences_monotone,
    check_gcp,
    check_max_subsolution,
)

__version__ = "0.1.0"
