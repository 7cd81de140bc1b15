"""Numerical laboratory for L_p(X)-quantized spaces and p-convex tensor norms."""

from .measure import (
    CopiedSpace,
    DegenerateSubsetError,
    InsufficientResolutionError,
    MeasurableSubset,
    MeasureSpace,
    copy_isometries,
    disjoint_family,
    normalized_indicator,
)
from .lpcore import (
    LpFunctional,
    LpOperator,
    LpVector,
    NormEstimate,
    lp_norm,
    operator_norm,
    proper_projection,
    span_projection,
)
from .banach import PolytopeGauge, PolytopeNorm, WeightedLr, ball_sup, norm_from_dict
from .quantization import (
    QuantizedSpace,
    bar_diamond,
    canonical_diamond,
    diamond,
    induced,
    j_map,
    max_space,
    min_space,
    near_L_check,
    q_map,
    standard_extension,
    vector_valued,
)
from .tensor import pconvex_tensor_space, tensor_norm, universal_factorization_check
from .inflation import InflationStructure, resolution_trace, verify_inflation
from .propsuite import (
    check_contractibility,
    check_metric_mapping,
    check_p_convexity,
    check_tensor_p_convexity,
    find_remark22_witness,
    hadamard_witness,
)

__version__ = "0.1.0"
