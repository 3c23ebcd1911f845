"""C-numerical ranges, local and constrained variants, via gradient flows on unitary groups."""

__version__ = "0.1.0"

from .linalg import (  # noqa: E402
    DimensionError,
    DomainError,
    SizeError,
    c_spectrum,
    haar_random_unitary,
    hs_inner,
)
from .flows import FlowConfig, FlowResult, LambdaSchedule, ascend, radius, transfer  # noqa: E402
from .geometry import BoundaryCurve, star_center, trace_boundary  # noqa: E402
from .local import LocalUnitary, PureState, DensityMatrix, ascend_local, entanglement_distance  # noqa: E402
from .reversal import search_reversal, solve_reversal_angles  # noqa: E402
from .constrained import (  # noqa: E402
    ascend_invariance_lagrange,
    ascend_orthogonality,
    ascend_projected,
    stabilizer_algebra,
)

__all__ = [
    "DimensionError",
    "DomainError",
    "SizeError",
    "c_spectrum",
    "haar_random_unitary",
    "hs_inner",
    "FlowConfig",
    "FlowResult",
    "LambdaSchedule",
    "ascend",
    "radius",
    "transfer",
    "BoundaryCurve",
    "star_center",
    "trace_boundary",
    "LocalUnitary",
    "PureState",
    "DensityMatrix",
    "ascend_local",
    "entanglement_distance",
    "search_reversal",
    "solve_reversal_angles",
    "ascend_invariance_lagrange",
    "ascend_orthogonality",
    "ascend_projected",
    "stabilizer_algebra",
]
