"""Gaussian beams, reflection, and nonlinear interaction in isotropic elastic media."""

from .domain import ConvexDomain, ball, check_convexity, ellipsoid
from .errors import (
    BranchTrackingError,
    ChartInversionError,
    DegenerateConfigError,
    ElastobeamError,
    FieldExpressionError,
    InconsistentDataError,
    MediumError,
    MediumFormatError,
    NonPropagatingError,
    NonTransversalError,
    RankDeficientError,
    RiccatiPositivityError,
    TrappingSuspectedError,
)
from .fields import ConstantField, ExpressionField, GridField
from .medium import (
    IsotropicMedium,
    Moduli,
    ValidationReport,
    WaveMode,
    load_medium,
    medium_from_dict,
    validate_medium,
)
from .geodesics import (
    BoundaryEvent,
    FermiChart,
    GeodesicPath,
    ParallelFrame,
    build_fermi_chart,
    default_e_init,
    estimate_diameter,
    fermi_forward,
    fermi_inverse,
    parallel_transport,
    trace_geodesic,
)
from .riccati import DCoefficient, RiccatiEvolution, build_D_along_ray, evolve_yz
from .beams import (
    GaussianBeam,
    beam_phase,
    chi,
    elastic_operator,
    evaluate_beam,
    make_beam,
    p_amplitude,
    pde_residual,
    s_amplitude,
)
from .reflection import (
    ReflectionCoefficients,
    ReflectionNode,
    SnellResult,
    assemble_MP,
    iterate_reflections,
    snell_reflect,
    solve_p_incidence,
    solve_s_incidence,
    traction_matrix,
    vertical_root,
)
from .interaction import (
    InteractionConfig,
    SSPBeamTriple,
    amplitude_A,
    build_ssp_beam_triple,
    build_ssp_directions,
    combination_ratio,
    divergence_identity_check,
    inplane_closed_form,
    interaction_density,
    normal_dot_G,
    oscillatory_interaction_integral,
    perp_closed_form,
    quadratic_source_G,
)
from .recovery import (
    AlphaFit,
    PsiFit,
    RecoveredModuli,
    SweepSample,
    assemble_parameters,
    end_to_end_recover,
    fit_alpha_sweep,
    fit_psi_sweep,
    inplane_angle_of_opening,
    inplane_psi_for_alpha,
)

__version__ = "0.1.0"
