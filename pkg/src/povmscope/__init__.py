"""povmscope: characterize a qubit measurement from its own outcome statistics.

The package reconstructs the response range of an unknown POVM -- the
ellipsoid of outcome distributions it can produce -- directly from measured
statistics, recovers the gauge-invariant (Q, t) representation, and compares
it against conventional detector tomography on simulated data with shot
noise and preparation errors.
"""

from .calibrate import (
    MUB_FRAME,
    SIC_FRAME,
    FrameConvention,
    StudyResult,
    align_frame,
    povm_element_fidelity,
    state_tomography,
    tomography_study,
)
from .errors import (
    DegenerateDataError,
    DegenerateHullError,
    FitError,
    FrameError,
    InfeasibleError,
    InvalidInputError,
    LiftError,
    NonphysicalStateError,
    NotPsdError,
    PovmScopeError,
    UndefinedFidelityError,
)
from .linalg import (
    FitDiagnostics,
    HullResult,
    OptimizerConfig,
    convex_hull,
    minimize_constrained,
    pinv,
    psd_sqrt,
    svd,
)
from .metrics import (
    ViolationStats,
    affine_residual,
    fidelity_q,
    fidelity_t,
    l_value,
    violation_stats,
)
from .qubit import (
    Povm,
    PovmElement,
    QTRep,
    bloch_to_density,
    build_standard,
    conjugate_povm,
    density_to_bloch,
    povm_from_json,
    povm_from_matrices,
    povm_to_json,
    qt_from_json,
    qt_from_povm,
    qt_to_json,
    state_fidelity,
    validate_povm,
)
from .selfchar import (
    EllipsoidFit,
    ReducedData,
    boundary,
    center_data,
    fit_ellipsoid,
    lift_to_qt,
    qdsc_run,
    reduce_data,
)
from .simulate import (
    CountsMatrix,
    ErrorModel,
    ProbeSet,
    ProbMatrix,
    born_matrix,
    born_probabilities,
    circle_states,
    icosahedron_states,
    inject_preparation_error,
    probe_grid,
    random_states,
    sample_counts,
)
from .tomography import TomographyProblem, qdt_fit, qdt_to_qt

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
