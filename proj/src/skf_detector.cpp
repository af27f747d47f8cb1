#include "skfcpd/skf_detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "skfcpd/errors.hpp"

namespace skfcpd {

namespace {

// Relative size below which a quadratic form is treated as exactly zero.
constexpr double kDegenerateQuadForm = 1e-12;

struct SumsSnapshot {
    std::size_t length;
    double s_uu;
    double s_vv;
    double s_uv;
};

SumsSnapshot snapshot(const SegmentAccumulator& acc) { return {acc.length, acc.s_uu, acc.s_vv, acc.s_uv}; }

double quad_form(double s_uu, double s_vv, double s_uv) {
    const double q = s_vv - s_uv * s_uv / s_uu;
    return q > 0.0 ? q : 0.0;
}

bool degenerate(double q, double s_vv) { return !(s_vv > 0.0) || q <= kDegenerateQuadForm * s_vv; }

double predictive_core(const SumsSnapshot& before, const SegmentAccumulator& after, double floor) {
    const std::size_t len = after.length;
    if (len < 2 || before.length + 1 != len) {
        throw InvalidInput("predictive density needs consecutive accumulator states with n' >= 2");
    }
    const double q_new = quad_form(after.s_uu, after.s_vv, after.s_uv);
    if (degenerate(q_new, after.s_vv)) return 0.0;

    const double base = -0.5 * std::log(after.pred_var) - 0.5 * std::log(after.s_uu / before.s_uu);
    const double q_old = quad_form(before.s_uu, before.s_vv, before.s_uv);
    double value;
    if (len == 2 || degenerate(q_old, before.s_vv)) {
        value = base - 0.5 * std::log(q_new);
    } else {
        const double a = 0.5 * static_cast<double>(len - 1);
        value = std::lgamma(a) - std::lgamma(a - 0.5) - 0.5 * std::log(std::numbers::pi) + base -
                a * std::log(q_new) + (a - 0.5) * std::log(q_old);
    }
    if (!std::isfinite(value)) throw ConditioningError("predictive density is not finite");
    return std::max(value, floor);
}

}  // namespace

double predictive_log_density(const SegmentAccumulator& before, const SegmentAccumulator& after,
                              double log_prob_floor) {
    return predictive_core(snapshot(before), after, log_prob_floor);
}

double predictive_log_density(const SegmentAccumulator& before, const Transition& tr, double y,
                              double log_prob_floor) {
    if (!std::isfinite(y)) throw InvalidInput("predictive density of a missing value");
    SegmentAccumulator after = before;
    advance(after, tr, y);
    return predictive_core(snapshot(before), after, log_prob_floor);
}

void DetectorConfig::validate() const {
    kernel.validate();
    if (min_segment_for_report < 1) throw InvalidParameter("min_segment_for_report must be >= 1");
    if (!(log_prob_floor < 0.0)) throw InvalidParameter("log_prob_floor must be negative");
}

SkfDetector::SkfDetector(DetectorConfig config) : config_(std::move(config)) {
    config_.validate();
    obs_ = observation_model(config_.kernel);
}

std::optional<DetectionEvent> SkfDetector::step(double t, double y) {
    if (!std::isfinite(t)) throw InvalidInput("observation time must be finite");
    if (steps_ > 0) {
        if (!(t - last_time_ >= TimeGrid::kMinSpacing)) {
            throw InvalidInput("observation times must be strictly increasing");
        }
        pending_gap_ += t - last_time_;
    }
    last_time_ = t;
    ++steps_;
    const std::size_t n = steps_;

    // Missing value: nothing is learned; the pending gap carries the
    // predict-only propagation into the next observed step.
    if (!std::isfinite(y)) return std::nullopt;

    const double hazard = config_.hazard.at(t);
    if (candidates_.empty()) {
        candidates_.push_back({init_segment(obs_, n, y), t, std::log1p(-hazard), 0.0});
        log_evidence_ = new_segment_log_density(y);
        map_ = n;
        truncated_at_ = n;
        pending_gap_ = 0.0;
        return std::nullopt;
    }

    const Transition tr = transition(config_.kernel, pending_gap_);
    pending_gap_ = 0.0;

    // Growth: the previous joints are normalized, so their logsumexp is 0.
    for (Candidate& c : candidates_) c.log_joint += grow(c, tr, y) + c.log_stay;
    // Changepoint at t_n.
    candidates_.push_back({init_segment(obs_, n, y), t, std::log1p(-hazard),
                           new_segment_log_density(y) + std::log(hazard)});
    renormalize();

    const std::size_t new_map = select_map();
    if (n <= config_.warmup || new_map == map_) {
        map_ = new_map;
        return std::nullopt;
    }

    DetectionEvent event;
    event.step = n;
    event.time = t;
    event.changepoint = new_map;
    const std::size_t pos = candidate_position(new_map);
    event.changepoint_time = candidates_[pos].time;
    event.map_weight = std::exp(candidates_[pos].log_joint);
    if (config_.snapshot_events) event.snapshot = posterior();

    map_ = new_map;
    if (config_.truncate_at_detection) {
        candidates_.erase(candidates_.begin(), candidates_.begin() + static_cast<std::ptrdiff_t>(pos));
        truncated_at_ = new_map;
        renormalize();
    }
    return event;
}

double SkfDetector::gamma_term(std::size_t length) {
    if (length < gamma_terms_.size()) return gamma_terms_[length];
    while (gamma_terms_.size() <= length) {
        const double a = 0.5 * (static_cast<double>(gamma_terms_.size()) - 1.0);
        gamma_terms_.push_back(a > 0.5 ? std::lgamma(a) - std::lgamma(a - 0.5) - 0.5 * std::log(std::numbers::pi) : 0.0);
    }
    return gamma_terms_[length];
}

// Same value as predictive_core; the previous log quadratic form is carried
// per candidate and log Q comes from the log-determinant increment.
double SkfDetector::grow(Candidate& c, const Transition& tr, double y) {
    const double old_s_uu = c.acc.s_uu;
    const double old_log_det = c.acc.log_det;
    const double old_log_q = c.log_q;
    advance(c.acc, tr, y);
    const std::size_t len = c.acc.length;
    const double q_new = quad_form(c.acc.s_uu, c.acc.s_vv, c.acc.s_uv);
    if (degenerate(q_new, c.acc.s_vv)) {
        c.log_q = std::numeric_limits<double>::quiet_NaN();
        return 0.0;
    }
    c.log_q = std::log(q_new);
    const double base = -0.5 * (c.acc.log_det - old_log_det) - 0.5 * std::log(c.acc.s_uu / old_s_uu);
    double value;
    if (len == 2 || std::isnan(old_log_q)) {
        value = base - 0.5 * c.log_q;
    } else {
        const double a = 0.5 * static_cast<double>(len - 1);
        value = gamma_term(len) + base - a * c.log_q + (a - 0.5) * old_log_q;
    }
    if (!std::isfinite(value)) throw ConditioningError("predictive density is not finite");
    return std::max(value, config_.log_prob_floor);
}

void SkfDetector::renormalize() {
    double top = -std::numeric_limits<double>::infinity();
    for (const Candidate& c : candidates_) top = std::max(top, c.log_joint);
    double sum = 0.0;
    for (const Candidate& c : candidates_) sum += std::exp(c.log_joint - top);
    const double lse = top + std::log(sum);
    for (Candidate& c : candidates_) c.log_joint -= lse;
    log_evidence_ += lse;
}

std::size_t SkfDetector::select_map() const {
    const std::size_t n = steps_;
    std::size_t best = candidates_.front().acc.start;
    double best_val = -std::numeric_limits<double>::infinity();
    for (const Candidate& c : candidates_) {
        if (n - c.acc.start + 1 < config_.min_segment_for_report) continue;
        if (c.log_joint > best_val) {
            best_val = c.log_joint;
            best = c.acc.start;
        }
    }
    return best;
}

std::size_t SkfDetector::candidate_position(std::size_t index) const {
    auto it = std::lower_bound(candidates_.begin(), candidates_.end(), index,
                               [](const Candidate& c, std::size_t i) { return c.acc.start < i; });
    return static_cast<std::size_t>(it - candidates_.begin());
}

ChangepointPosterior SkfDetector::posterior() const {
    ChangepointPosterior p;
    p.step = steps_;
    p.candidates.reserve(candidates_.size());
    p.candidate_times.reserve(candidates_.size());
    p.log_joint.reserve(candidates_.size());
    p.weights.reserve(candidates_.size());
    for (const Candidate& c : candidates_) {
        p.candidates.push_back(c.acc.start);
        p.candidate_times.push_back(c.time);
        p.log_joint.push_back(c.log_joint + log_evidence_);
        p.weights.push_back(std::exp(c.log_joint));
    }
    p.map_index = map_;
    if (!candidates_.empty()) {
        const std::size_t pos = candidate_position(map_);
        if (pos < candidates_.size() && candidates_[pos].acc.start == map_) p.map_weight = p.weights[pos];
    }
    return p;
}

}  // namespace skfcpd
