"""Balanced metrics on polarized curves.

Numerical realization of the averaging fixed-point iteration between inner
products on a section space and fiber metrics on the polarization, together
with the energy functionals whose convexity and monotonicity drive it, and
the large-power density asymptotics linking the discrete picture to the
K-energy.
"""

__version__ = "0.1.0"

from .errors import DomainError, NumericalError, QuadratureError, ValidationError
from .hermitian import (
    GramMetric,
    Geodesic,
    log_det,
    geodesic_between,
    geodesic_value,
    det_trace_inequality_gap,
    random_hermitian,
    sample_around,
)
from .variety import (
    GeometrySpec,
    QuadratureGrid,
    build_geometry,
    integrate,
    default_resolution,
)
from .metrics import (
    AlgebraicMetric,
    PotentialMetric,
    fs_metric,
    blend_metrics,
    laplacian_half,
    scalar_curvature,
    gradient_identity_residual,
    potential_between,
)
from .duality_maps import (
    hilb,
    density_rho,
    t_operator,
    BalancedResidual,
    balanced_residual,
)
from .functionals import (
    aubin_energy,
    i_functional,
    l_functional,
    z_functional,
    tilde_pair,
    p_potential,
    mabuchi,
    fs_projection_gap,
    hilb_projection_gap,
    l_derivative_residual,
    z_derivative_residual,
    FunctionalReport,
    functional_report,
)
from .balance import (
    IterationConfig,
    IterationTrace,
    run_iteration,
    verify_minimum,
)
from .asymptotics import (
    SpherePotential,
    default_test_potential,
    bergman_residual,
    mabuchi_approximation_gap,
    AsymptoticSweep,
    run_sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
