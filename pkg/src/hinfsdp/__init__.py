"""H-infinity norms of discrete-time LTI systems by a covariance-lifted SDP.

The norm, full-spectrum or restricted to a frequency band, is the optimal
value of a small semidefinite program over the limiting covariance of the
stacked state and input. A rank-one optimum of that program yields a
worst-case sinusoidal input, which is returned as a checkable certificate.
"""

from .certificate import (
    AnalysisResult,
    RankOneCertificate,
    RankOnePiece,
    analyze,
    extract_input,
    rank_one_split,
    select_best,
    unitary_dilation,
    unitary_dilation_band,
)
from .exceptions import (
    DegenerateCertificateError,
    DegenerateDilationError,
    ExtractionError,
    HinfError,
    InputError,
    NotPSDError,
    NumericalError,
    SolverError,
    StabilityError,
)
from .lti import (
    FrequencyBand,
    Sinusoid,
    StateSpace,
    freq_response,
    gain,
    load_system,
    random_stable,
    shift_middle,
    simulate,
    trajectory,
)
from .oracle import grid_norm, verify_certificate
from .problems import build_dual, build_dual_gkyp, build_dual_kyp, build_primal
from .solver import Settings, SolverSolution, Status, solve, solve_dual_lmi

__version__ = "0.1.0"

__all__ = [
    "AnalysisResult",
    "RankOneCertificate",
    "RankOnePiece",
    "analyze",
    "extract_input",
    "rank_one_split",
    "select_best",
    "unitary_dilation",
    "unitary_dilation_band",
    "DegenerateCertificateError",
    "DegenerateDilationError",
    "ExtractionError",
    "HinfError",
    "InputError",
    "NotPSDError",
    "NumericalError",
    "SolverError",
    "StabilityError",
    "FrequencyBand",
    "Sinusoid",
    "StateSpace",
    "freq_response",
    "gain",
    "load_system",
    "random_stable",
    "shift_middle",
    "simulate",
    "trajectory",
    "grid_norm",
    "verify_certificate",
    "build_dual",
    "build_dual_gkyp",
    "build_dual_kyp",
    "build_primal",
    "Settings",
    "SolverSolution",
    "Status",
    "solve",
    "solve_dual_lmi",
]
