"""Shape optimization of convex bodies via spectral support-function expansions.

2D bodies are truncated Fourier series of the support function, 3D bodies
truncated real spherical-harmonic expansions.  Convexity, constant-width,
diameter and inclusion constraints discretize into finite systems over the
coefficients; geometric functionals (and Dirichlet-Laplace eigenvalues via
the method of fundamental solutions) come with coefficient-space gradients,
and a deterministic augmented-Lagrangian solver minimizes them.
"""

from .constraints import (
    CoefficientPattern,
    LinearConstraints,
    NonlinearConstraints,
    PolytopeContainer,
    constant_width_pattern,
    convexity_2d,
    convexity_3d,
    diameter_bounds,
    inclusion_constraints,
    rotor_pattern,
)
from .errors import (
    AuditFailure,
    DegenerateEigenvalue,
    InfeasibleStart,
    InvalidArgument,
    InvalidParams,
    NonConvexSample,
    PoleEvaluation,
    RankDeficiency,
    SingularPoint,
    SupportShapeError,
    UnknownProblem,
)
from .fourier2d import FourierSupport2D, boundary_point_2d, eval_2d, radius_of_curvature_2d
from .functionals import (
    GradedValue,
    area_2d,
    area_3d,
    coeff_gradient_from_density_2d,
    coeff_gradient_from_density_3d,
    energy_E,
    perimeter_2d,
    volume_cw_3d,
    volume_general_3d,
    width,
)
from .harmonics import HarmonicBasis, index_lm, lm_index, n_harmonics
from .mfs import (
    EigenResult,
    MfsConfig,
    eigen_gradient_density,
    find_eigenvalues,
    fundamental_solution,
    sigma1,
)
from .nlp import NlpProblem, SolveReport, SolverOptions, audit_gradient, multistart, solve
from .problems import build, canonicalize_2d, reference_table
from .spheregrid import SphereGrid, make_sphere_grid, sphere_normal
from .spherical3d import (
    POLE_MARGIN,
    SphericalSupport3D,
    boundary_point_3d,
    eval_sph,
    surface_jacobian,
)

__version__ = "0.1.0"
