#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace skfcpd {

/// Prior probability that a changepoint occurs at a given time: either a
/// constant or a table of values aligned to observation times.
class HazardFunction {
public:
    static constexpr double kMin = 1e-12;
    static constexpr double kMax = 1.0 - 1e-12;

    HazardFunction() = default;
    static HazardFunction constant(double h);
    /// `times` must be strictly increasing; lookups are exact to 1e-9.
    static HazardFunction series(std::vector<double> times, std::vector<double> values);

    bool is_constant() const { return times_.empty(); }
    double constant_value() const { return constant_; }
    /// Hazard at time t, clamped to [kMin, kMax]. Throws InvalidInput when a
    /// tabulated hazard has no entry at t.
    double at(double t) const;

private:
    double constant_ = 0.01;
    std::vector<double> times_;
    std::vector<double> values_;
};

/// Normalized posterior over the most recent changepoint after one step.
struct ChangepointPosterior {
    std::size_t step = 0;
    std::vector<std::size_t> candidates;  // 1-based start indices, ascending
    std::vector<double> candidate_times;
    std::vector<double> log_joint;        // log p(y_{1:n}, C_n = t_i) up to one shared constant
    std::vector<double> weights;          // normalized, sums to one
    std::size_t map_index = 0;
    double map_weight = 0.0;

    std::size_t run_length() const { return step - map_index + 1; }
};

struct DetectionEvent {
    std::size_t step = 0;             // index of the observation that triggered it
    double time = 0.0;
    std::size_t changepoint = 0;      // estimated most recent changepoint (index)
    double changepoint_time = 0.0;
    double map_weight = 0.0;
    std::optional<ChangepointPosterior> snapshot;
};

/// Shared streaming interface for SKF and the baseline detectors.
class OnlineDetector {
public:
    virtual ~OnlineDetector() = default;

    /// Feeds the observation at time t (NaN = missing). Times must be
    /// strictly increasing.
    virtual std::optional<DetectionEvent> step(double t, double y) = 0;
    /// Current estimate of the most recent changepoint (1-based index).
    virtual std::size_t map_index() const = 0;
    virtual std::size_t steps() const = 0;
    virtual std::string name() const = 0;
};

struct RunOptions {
    bool stop_at_first_detection = false;
    bool keep_map_path = true;
};

struct RunResult {
    std::vector<DetectionEvent> events;
    std::vector<std::size_t> changepoints;  // ordered distinct event changepoints
    std::vector<std::size_t> map_path;      // MAP changepoint after each step
};

/// Streams a whole series through a detector.
RunResult run(OnlineDetector& detector, std::span<const double> times, std::span<const double> values,
              const RunOptions& options = {});

}  // namespace skfcpd
