"""Boundary-element fast direct solver for 2D TE scattering.

Pipeline: uniform-arclength Galerkin discretization of the preconditioned
combined-field equation on a smooth closed contour, extraction of the
equal-perimeter-circle circulant counterpart, randomized skeletonization of
the difference, and Woodbury-based direct inversion with FFT circulant
algebra for cheap multi-right-hand-side sweeps.
"""

from .geometry import (
    Circle,
    ContourGeometry,
    Ellipse,
    FourierContour,
    GeometryError,
    UniformMesh,
    arclength_parameterize,
    build_uniform_mesh,
    curvature_stats,
    make_contour,
)
from .quadrature import QuadratureConfig
from .specfun import bessel_jy, green_kernel, hankel1
from .bem import (
    AssemblyError,
    GalerkinMatrix,
    assemble_operator,
    assemble_operators,
    element_pair_integral,
    gram_matrix,
)
from .circulant import (
    CirculantOperator,
    SingularSymbolError,
    assemble_circle_operator,
    compose_system_symbol,
)
from .system import (
    FREE_SPACE_IMPEDANCE,
    PreconditionedSystem,
    assemble_C,
    build_system,
    damped_wavenumber,
)
from .compression import (
    InsufficientDecayError,
    SkeletonFactorization,
    estimate_spectral_norm,
    rank_report,
    skeletonize,
)
from .solver import (
    DirectSolverState,
    WoodburyCoreSingularError,
    factorize,
    reconstruct_apply,
    solve,
    solve_many,
)
from .physics import (
    MediumParameters,
    PlaneWaveExcitation,
    SurfaceCurrentSolution,
    circle_current_at_angles,
    circle_echo_width_series,
    current_l2_error,
    far_field,
    fourier_ordered_spectrum,
    project_excitation,
    reference_circle_current,
)

__version__ = "0.1.0"
