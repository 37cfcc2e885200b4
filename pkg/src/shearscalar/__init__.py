"""Passive-scalar decay in shear flows.

Simulates the advection-diffusion of an x-mean-free scalar in a shear flow
(b(y), 0), mode-by-mode in x, measures the enhanced-dissipation timescale as
a function of the viscosity, and verifies a suite of quotient-norm
inequalities on computed and synthetic fields.
"""

__version__ = "0.1.0"

from .discretize import (
    BoundaryCondition,
    DiffusionOperator,
    Grid,
    build_diffusion,
    h1y_seminorm,
    hminus1y_norm,
)
from .harness import (
    CrossoverReport,
    ExponentFit,
    ResolutionPolicy,
    SweepRecord,
    crossover_check,
    extended_box_run,
    fit_exponent,
    measure_efold,
    measure_tail_rate,
    run_sweep,
)
from .norms import (
    GevreyReport,
    LPDecomposition,
    RatioStatistics,
    SpaceTimeField,
    SyntheticField,
    calibrate_gevrey_d0,
    fractional_poincare_check,
    gevrey_monitor,
    lp_decompose,
    q_norm_finite_difference,
    q_norm_x,
    verify_bracket_inequality,
    verify_interpolation_inequality,
    verify_prop_subelliptic,
    verify_sample_subelliptic,
)
from .oracle import (
    CouetteSpec,
    bump_profile_data,
    couette_exact,
    couette_exact_physical,
    couette_norm_exact,
    expm_mode,
    heat_rate,
)
from .profiles import (
    ShearProfile,
    builtin_profile,
    numeric_vanishing_order,
    predicted_exponent,
    zero_profile,
)
from .solver import (
    ModeField,
    ModeOperator,
    Trajectory,
    build_mode_operator,
    default_initial_data,
    evolve,
    step_crank_nicolson,
    to_physical,
)
