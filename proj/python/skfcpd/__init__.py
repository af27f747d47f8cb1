"""Online changepoint detection for temporally correlated sequences."""

from ._skfcpd import (
    ChangepointPosterior,
    ConditioningError,
    DataError,
    DetectionEvent,
    Detector,
    EstimationResult,
    InvalidInput,
    InvalidParameter,
    KernelFamily,
    KernelSpec,
    SegmentSums,
    ScreeningResult,
    covering,
    dense_covariance,
    detect,
    estimate,
    integrated_marginal_loglik,
    logit_transform,
    screening_test,
    segment_sums,
)

__all__ = [
    "ChangepointPosterior",
    "ConditioningError",
    "DataError",
    "DetectionEvent",
    "Detector",
    "EstimationResult",
    "InvalidInput",
    "InvalidParameter",
    "KernelFamily",
    "KernelSpec",
    "SegmentSums",
    "ScreeningResult",
    "covering",
    "dense_covariance",
    "detect",
    "estimate",
    "integrated_marginal_loglik",
    "logit_transform",
    "screening_test",
    "segment_sums",
]
