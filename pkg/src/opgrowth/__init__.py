"""Operator growth numerics in the energy eigenbasis.

Builds model Hamiltonians and observables, runs the thermal Lanczos
recursion over Liouville space, converts between Lanczos coefficients and
correlation-function moments, propagates the Krylov chain in time, and
classifies matrix-element decay to predict the growth rate against the
universal bound alpha <= pi / beta.
"""

from .analysis import (
    GrowthReport,
    build_report,
    continuum_moments,
    growth_rate_bound,
    negative_polylog,
    polylog_moments,
    predict_alpha,
)
from .core import (
    DimensionMismatchError,
    EigenbasisOperator,
    LiouvilleVector,
    Spectrum,
    ThermalEnsemble,
    ZeroNormError,
    liouville_apply,
    normalize,
    strip_diagonal,
    thermal_inner,
)
from .dynamics import (
    BoundaryReflectionError,
    KrylovWavefunction,
    correlation_function,
    krylov_complexity,
    moments_direct,
    propagate_chain,
)
from .lanczos import (
    GrowthFit,
    LanczosSequence,
    MomentSequence,
    MomentPositivityError,
    default_fit_window,
    detect_rate_jump,
    growth_fit,
    lanczos_from_moments,
    lanczos_run,
    lanczos_run_with_basis,
    moments_from_lanczos,
)
from .models import (
    AnharmonicConfig,
    BoundaryLeakError,
    StructureSpec,
    anharmonic_solve,
    bohr_sommerfeld_energy,
    box_position_1d,
    box_position_2d,
    gaussian_decay_estimate,
    harmonic_position,
    harmonic_power,
    random_ensemble,
    semiclassical_action_slope,
    semiclassical_decay_integrand,
    semiclassical_log_element,
    semiclassical_operator,
    uq_binomial,
    uq_binomial_exact,
    uq_element,
)
from .spinchain import (
    ChainConfig,
    EmptySectorError,
    InsufficientStatisticsError,
    StructureFunctionFit,
    build_hamiltonian,
    diagonalize_to_eigenbasis,
    extract_structure_function,
    flip_flop_operator,
    sector_basis,
    translation_operator,
    truncate_operator,
)

__version__ = "0.1.0"
