"""Numerical laboratory for first p-Laplace eigenvalues of doubly
rotation-invariant hypersurfaces, reduced to weighted one-dimensional
problems along profile curves in the quarter-plane orbit space."""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    BoundaryOrbit,
    ProfileCurve,
    UVPoint,
    cone_curve,
    cylinder_curve,
    from_uv,
    length_g,
    length_h,
    read_curve_csv,
    sigma0_curve,
    sigma_s_curve,
    to_uv,
    weight_F,
    write_curve_csv,
)
from .eigensolver import (  # noqa: F401
    EigenSolution,
    WeightedRayleighProblem,
    assemble,
    rayleigh_quotient,
    refine_and_extrapolate,
    solve_general_p,
    solve_p2,
)
from .bessel import bessel_j, first_root, lommel_f, phi_sigma, phi_sigma_prime  # noqa: F401
from .cone_analysis import (  # noqa: F401
    PartitionCertificate,
    certify,
    cone_ball_relation_check,
    cone_lambda_p2,
    exp_integral_identity_check,
)
from .perturbation import (  # noqa: F401
    conemin0_integral,
    dini_lower_bound,
    lambda_sigma_s,
    perturbation_report,
    roundoff_curve,
    weights_PQ,
    weights_PQ_ddot0,
    weights_PQ_dot,
)
from .transforms import (  # noqa: F401
    TransformReport,
    canonicalize,
    invert_to_ball,
    monotonicity_suite,
    random_profile_curve,
    reparam_g,
    reparam_h,
    ru_monotonize,
    u_monotonize,
)
from .optimizer import OptimizerConfig, compare_baselines, maximize  # noqa: F401
