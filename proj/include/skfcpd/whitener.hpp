#pragma once

#include <cstddef>

#include "skfcpd/temporal_model.hpp"

namespace skfcpd {

/// Smallest admissible one-step predictive variance.
inline constexpr double kPredictiveVarianceFloor = 1e-12;

/// Filtered mean of one Kalman run plus its last one-step prediction.
struct WhitenerState {
    StateVector mean = StateVector::Zero();
    double predicted = 0.0;
};

/// Two Kalman filters over one candidate segment: one fed the constant 1 at
/// every step, one fed the data. Their innovations standardized by sqrt(Q)
/// are the entries of U*1 and U*y with K^{-1} = U^T U, so the running sums
/// below equal 1'K^{-1}1, y'K^{-1}y, y'K^{-1}1 and log|K| of the segment.
///
/// The filtered covariance and Q do not depend on the data and are shared by
/// both runs. The data run whitens y - shift (shift = first observation of the
/// segment); the quadratic form is shift invariant and this keeps it from
/// cancelling catastrophically when the level is large relative to the noise.
struct SegmentAccumulator {
    std::size_t start = 0;
    int state_dim = 1;
    double nugget = 0.0;
    double shift = 0.0;

    WhitenerState ones;
    WhitenerState data;
    StateMatrix cov = StateMatrix::Zero();
    double pred_var = 0.0;
    double last_u = 0.0;
    double last_v = 0.0;

    double s_uu = 0.0;
    double s_vv = 0.0;  // centered
    double s_uv = 0.0;  // centered
    double log_det = 0.0;
    std::size_t length = 0;

    /// y'K^{-1}y for the uncentered data.
    double raw_s_vv() const { return s_vv + 2.0 * shift * s_uv + shift * shift * s_uu; }
    /// y'K^{-1}1 for the uncentered data.
    double raw_s_uv() const { return s_uv + shift * s_uu; }
};

/// Starts a segment at observation index `start` holding the single value y.
SegmentAccumulator init_segment(const ObservationModel& model, std::size_t start, double y);

/// Adds one observation after the transition `tr`. A NaN y performs the
/// prediction only, leaving the sums untouched. Throws ConditioningError if Q
/// drops below kPredictiveVarianceFloor.
void advance(SegmentAccumulator& acc, const Transition& tr, double y);

/// y'My = y'K^{-1}y - (y'K^{-1}1)^2 / 1'K^{-1}1, clamped at zero.
double quadratic_form(const SegmentAccumulator& acc);

/// Runs a whole segment through the DLM; convenience for oracles and the
/// likelihood. Values may contain NaN for missing observations, but the first
/// value must be observed.
SegmentAccumulator whiten(const DlmSystem& system, std::span<const double> values, std::size_t start = 1);

}  // namespace skfcpd
