#include "skfcpd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "skfcpd/errors.hpp"

namespace skfcpd {

namespace {

constexpr double kVarianceFloor = 1e-12;

void check_time(std::size_t steps, double last, double t) {
    if (!std::isfinite(t)) throw InvalidInput("observation time must be finite");
    if (steps > 0 && !(t > last)) throw InvalidInput("observation times must be strictly increasing");
}

std::pair<double, double> mean_and_variance(std::span<const double> values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : values) {
        if (std::isfinite(v)) {
            sum += v;
            ++n;
        }
    }
    if (n < 2) throw InvalidInput("training window needs at least two observed values");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) {
        if (std::isfinite(v)) ss += (v - mean) * (v - mean);
    }
    return {mean, ss / static_cast<double>(n - 1)};
}

}  // namespace

void NigParams::validate() const {
    if (!std::isfinite(mean) || !(kappa > 0.0) || !(alpha > 0.0) || !(beta > 0.0)) {
        throw InvalidParameter("normal-inverse-gamma parameters must have kappa, alpha, beta > 0");
    }
}

NigParams NigParams::from_training(std::span<const double> values) {
    const auto [mean, var] = mean_and_variance(values);
    return {mean, 1.0, 1.0, std::max(var, kVarianceFloor)};
}

NigParams NigParams::updated(double y) const {
    const double d = y - mean;
    return {(kappa * mean + y) / (kappa + 1.0), kappa + 1.0, alpha + 0.5, beta + 0.5 * kappa * d * d / (kappa + 1.0)};
}

double NigParams::log_predictive(double y) const {
    const double nu = 2.0 * alpha;
    const double scale2 = beta * (kappa + 1.0) / (alpha * kappa);
    const double z2 = (y - mean) * (y - mean) / (nu * scale2);
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi * scale2) -
           0.5 * (nu + 1.0) * std::log1p(z2);
}

BocpdDetector::BocpdDetector(BocpdConfig config) : config_(std::move(config)) {
    config_.prior.validate();
    if (config_.min_segment_for_report < 1) throw InvalidParameter("min_segment_for_report must be >= 1");
}

std::optional<DetectionEvent> BocpdDetector::step(double t, double y) {
    check_time(steps_, last_time_, t);
    last_time_ = t;
    ++steps_;
    const std::size_t n = steps_;
    if (!std::isfinite(y)) return std::nullopt;

    const double hazard = config_.hazard.at(t);
    const double new_segment = config_.prior.log_predictive(y);
    if (candidates_.empty()) {
        candidates_.push_back({n, t, std::log1p(-hazard), 0.0, config_.prior.updated(y)});
        map_ = n;
        return std::nullopt;
    }
    for (Candidate& c : candidates_) {
        c.log_joint += c.params.log_predictive(y) + c.log_stay;
        c.params = c.params.updated(y);
    }
    candidates_.push_back({n, t, std::log1p(-hazard), new_segment + std::log(hazard), config_.prior.updated(y)});
    renormalize();

    const std::size_t new_map = select_map();
    if (n <= config_.warmup || new_map == map_) {
        map_ = new_map;
        return std::nullopt;
    }
    auto it = std::find_if(candidates_.begin(), candidates_.end(), [&](const Candidate& c) { return c.start == new_map; });
    DetectionEvent event;
    event.step = n;
    event.time = t;
    event.changepoint = new_map;
    event.changepoint_time = it->time;
    event.map_weight = std::exp(it->log_joint);
    map_ = new_map;
    if (config_.truncate_at_detection) {
        candidates_.erase(candidates_.begin(), it);
        renormalize();
    }
    return event;
}

void BocpdDetector::renormalize() {
    double top = -std::numeric_limits<double>::infinity();
    for (const Candidate& c : candidates_) top = std::max(top, c.log_joint);
    double sum = 0.0;
    for (const Candidate& c : candidates_) sum += std::exp(c.log_joint - top);
    const double lse = top + std::log(sum);
    for (Candidate& c : candidates_) c.log_joint -= lse;
}

std::size_t BocpdDetector::select_map() const {
    std::size_t best = candidates_.front().start;
    double best_val = -std::numeric_limits<double>::infinity();
    for (const Candidate& c : candidates_) {
        if (steps_ - c.start + 1 < config_.min_segment_for_report) continue;
        if (c.log_joint > best_val) {
            best_val = c.log_joint;
            best = c.start;
        }
    }
    return best;
}

ChangepointPosterior BocpdDetector::posterior() const {
    ChangepointPosterior p;
    p.step = steps_;
    for (const Candidate& c : candidates_) {
        p.candidates.push_back(c.start);
        p.candidate_times.push_back(c.time);
        p.log_joint.push_back(c.log_joint);
        p.weights.push_back(std::exp(c.log_joint));
        if (c.start == map_) p.map_weight = p.weights.back();
    }
    p.map_index = map_;
    return p;
}

std::optional<NigParams> BocpdDetector::candidate_params(std::size_t index) const {
    for (const Candidate& c : candidates_) {
        if (c.start == index) return c.params;
    }
    return std::nullopt;
}

void CusumConfig::validate() const {
    if (!(sd > 0.0) || !std::isfinite(sd)) throw InvalidParameter("CUSUM standardization needs sd > 0");
    if (!(drift >= 0.0) || !(threshold > 0.0)) throw InvalidParameter("CUSUM needs drift >= 0 and threshold > 0");
}

CusumConfig CusumConfig::from_training(std::span<const double> values, double drift, double threshold) {
    const auto [mean, var] = mean_and_variance(values);
    CusumConfig c;
    c.mean = mean;
    c.sd = std::sqrt(var);
    c.drift = drift;
    c.threshold = threshold;
    return c;
}

CusumDetector::CusumDetector(CusumConfig config) : config_(config) { config_.validate(); }

std::optional<DetectionEvent> CusumDetector::step(double t, double y) {
    check_time(steps_, last_time_, t);
    last_time_ = t;
    ++steps_;
    const std::size_t n = steps_;
    if (n <= config_.warmup) {
        upper_zero_at_ = lower_zero_at_ = n;
        return std::nullopt;
    }
    if (!std::isfinite(y)) return std::nullopt;

    const double z = (y - config_.mean) / config_.sd;
    upper_ = std::max(0.0, upper_ + z - config_.drift);
    lower_ = std::max(0.0, lower_ - z - config_.drift);
    if (upper_ == 0.0) upper_zero_at_ = n;
    if (lower_ == 0.0) lower_zero_at_ = n;
    if (std::max(upper_, lower_) < config_.threshold) return std::nullopt;

    DetectionEvent event;
    event.step = n;
    event.time = t;
    event.changepoint = (upper_ >= lower_ ? upper_zero_at_ : lower_zero_at_) + 1;
    event.map_weight = 1.0;
    last_changepoint_ = event.changepoint;
    upper_ = lower_ = 0.0;
    upper_zero_at_ = lower_zero_at_ = n;
    return event;
}

}  // namespace skfcpd
