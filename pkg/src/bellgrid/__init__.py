"""Three-setting generalized Bell inequality for N qubits on GHZ-Werner correlations."""

from .bounds import (
    BoundsReport,
    SettingGrid,
    ViolationWindow,
    classify,
    ee_closed_form,
    ee_direct,
    ee_inner_product,
    plane_infinite_threshold,
    t_max,
    three_setting_bound,
    violation_window,
)
from .lhv import (
    ConvexLHVModel,
    DeterministicStrategy,
    ProjectionDecomposition,
    factored_inner_product,
    lhv_inner_product,
    max_lhv_inner_product,
    mixture_inner_product,
    projection_decomposition,
    trig_identity_suite,
)
from .tensor import (
    CorrelationTensor,
    DirectionSet,
    evaluate,
    ghz_werner_tensor,
    statevector_correlation_oracle,
    sum_squared_components,
)

__version__ = "0.1.0"
