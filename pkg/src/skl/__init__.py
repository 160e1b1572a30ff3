"""Krylov subspace structure lab for self-adjoint multiplication operators.

The operator is multiplication by the spectral variable on L^2(mu) with
cyclic vector g = 1; measures are discretized into nodes and weights.
"""
from .errors import (
    EmptyTruncationError,
    EvaluationError,
    MeasureError,
    NotInRangeError,
    NumericalDegeneration,
    SchemaError,
    SklError,
)
from .krylov import (
    SolvabilityReport,
    SubspaceFrame,
    complement_frame,
    core_condition_gap,
    frame_from_vectors,
    graph_complement_frame,
    krylov_frame,
    solve_krylov,
)
from .measure import (
    AcPart,
    Atom,
    DiscretizedSpace,
    SpectralMeasure,
    atomic,
    discretize,
    gaussian,
    integrate,
    lognormal,
    refine,
    truncate,
    uniform,
)
from .metrics import (
    SeparationReport,
    WeakGapEstimate,
    dw_estimate,
    dw_to_zero,
    kint_indicator,
    probe_frame,
    separation_range,
    weak_norm,
)
from .moments import (
    carleman,
    classify_vector,
    closed_form_moments,
    compute_moments,
    hankel_psd_check,
)
from .orthopoly import determinacy_series_test, eval_orthonormal, jacobi_matrix, stieltjes_recurrence
from .truncation import lspace_frame, monotone_norm_check, run_truncation_study

__version__ = "0.1.0"
