"""nlheat: mild solutions of 1-D semilinear heat equations with nonlocal initial data.

The package solves u_t = u_xx + h(t, x, u) on (0, L) with homogeneous
Dirichlet boundary values and an initial condition u(0) = g(u) coupling
the initial state to the whole trajectory (periodic, antiperiodic,
multipoint, integral, mean-value, or fixed).  The solver iterates the
trajectory-level mild map; a smoothing family, a continuation sweep and a
set of sampling hypothesis checkers accompany it, all cross-validated by
independent brute-force oracles.
"""

from .conditions import (
    Antiperiodic,
    Fixed,
    Integral,
    MeanValue,
    Multipoint,
    NonlocalCondition,
    Periodic,
    check_g2,
    evaluate_g,
    lipschitz_estimate,
)
from .halfline import ExtendedTrajectory, extend_periodic, verify_mild_extension
from .lp_space import Domain1D, GridFunction, duality_pairing, lp_norm, upper_semi_inner
from .nemytskii import (
    Claims,
    GrowthData,
    Nonlinearity,
    chafee_infante,
    check_growth,
    check_monotone,
    check_sign,
    damped_cubic,
    forced_linear,
    linear,
    odd_power,
    superpose,
    vainberg_bound,
    zero,
)
from .sampling import SampleSpec, TrajectorySampleSpec
from .semigroup import (
    SineCoefficients,
    SpectralOperator,
    apply_semigroup,
    dst,
    idst,
    phi1_apply,
    smoothing_constant,
)
from .solver import (
    Shell,
    SolverConfig,
    SolveResult,
    approximation_family,
    benilan_gap,
    cauchy_solve,
    continuation_sweep,
    forcing_trajectory,
    sigma_apply,
    solve_nonlocal,
    transversality_check,
    uniqueness_probe,
)
from .trajectory import Trajectory

__version__ = "0.1.0"
