#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "skfcpd/detector.hpp"
#include "skfcpd/temporal_model.hpp"
#include "skfcpd/whitener.hpp"

namespace skfcpd {

struct DetectorConfig {
    KernelSpec kernel;
    HazardFunction hazard = HazardFunction::constant(0.01);
    /// Candidates supported by fewer observations are excluded from the MAP.
    std::size_t min_segment_for_report = 2;
    bool truncate_at_detection = true;
    /// Lower clamp for a single predictive log density.
    double log_prob_floor = -1e4;
    /// Observations processed before detections are reported (training
    /// window). MAP moves during warm-up neither emit events nor truncate.
    std::size_t warmup = 0;
    /// Attach a full posterior snapshot to every DetectionEvent.
    bool snapshot_events = false;

    void validate() const;
};

/// Log predictive density of the newest observation of a segment, from the
/// accumulator states before and after it was added (after.length >= 2).
///
/// For n' >= 3 this is the ratio of integrated marginals with mean and
/// variance integrated under pi(mu, sigma^2) ~ 1/sigma^2; for n' = 2 the mean
/// is integrated first and the variance afterwards. Both branches are exact
/// ratios of the same integrated marginal, so the values telescope to
/// log p(y_{i:n}) for every candidate.
///
/// A vanishing quadratic form (repeated values) carries no scale
/// information: if the old form vanishes the n' = 2 expression is used, and
/// if the new form also vanishes the density is neutral (0).
double predictive_log_density(const SegmentAccumulator& before, const SegmentAccumulator& after,
                              double log_prob_floor = -1e4);

/// Trial version: advances a copy of `before` with y.
double predictive_log_density(const SegmentAccumulator& before, const Transition& tr, double y,
                              double log_prob_floor = -1e4);

/// Density of an observation that opens a new segment. The improper prior
/// leaves it defined only up to a constant, fixed here at log 1 = 0.
inline double new_segment_log_density(double /*y*/) { return 0.0; }

/// Online changepoint detector for temporally correlated segments: one pair
/// of Kalman whitening filters per candidate changepoint, O(1) work per
/// candidate and observation.
class SkfDetector final : public OnlineDetector {
public:
    explicit SkfDetector(DetectorConfig config);

    std::optional<DetectionEvent> step(double t, double y) override;
    std::size_t map_index() const override { return map_; }
    std::size_t steps() const override { return steps_; }
    std::string name() const override { return "skf"; }

    /// Posterior after the latest step (O(live candidates)).
    ChangepointPosterior posterior() const;
    std::size_t live_candidates() const { return candidates_.size(); }
    /// Last detected changepoint; candidates before it have been dropped.
    std::size_t truncation_index() const { return truncated_at_; }
    /// Running log normalizer; adding it to the normalized log joints gives
    /// the unnormalized ones.
    double log_evidence() const { return log_evidence_; }
    const DetectorConfig& config() const { return config_; }

private:
    struct Candidate {
        SegmentAccumulator acc;
        double time = 0.0;
        double log_stay = 0.0;  // log(1 - H(t_i))
        double log_joint = 0.0; // normalized
        double log_q = std::numeric_limits<double>::quiet_NaN();  // NaN while the quadratic form is degenerate
    };

    /// Advances one candidate and returns its predictive log density.
    double grow(Candidate& c, const Transition& tr, double y);
    /// lgamma(a) - lgamma(a - 1/2) - log(pi)/2 with a = (length - 1)/2.
    double gamma_term(std::size_t length);

    void renormalize();
    std::size_t select_map() const;
    std::size_t candidate_position(std::size_t index) const;

    DetectorConfig config_;
    ObservationModel obs_;
    std::vector<Candidate> candidates_;
    std::size_t steps_ = 0;
    std::size_t map_ = 0;
    std::size_t truncated_at_ = 1;
    double last_time_ = 0.0;
    double pending_gap_ = 0.0;
    double log_evidence_ = 0.0;
    std::vector<double> gamma_terms_;
};

}  // namespace skfcpd
