#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "skfcpd/temporal_model.hpp"
#include "skfcpd/whitener.hpp"

namespace skfcpd {

/// One change-free training sequence. NaN values are missing.
struct TrainingSeries {
    TimeGrid grid;
    std::vector<double> values;
};

/// Training sequences sharing (range, nugget); mean and variance are
/// integrated out separately for each one.
struct TrainingSet {
    std::vector<TrainingSeries> series;

    void validate() const;
    std::size_t total_length() const;
};

/// log p(y | range, nugget) of one whitened segment with (mu, sigma^2)
/// integrated under pi ~ 1/sigma^2. Requires at least two observations.
/// Quadratic forms are floored at 1e-300 so flat data stays finite.
double integrated_log_marginal(const SegmentAccumulator& acc);

/// Sum of integrated_log_marginal over the training set.
double integrated_marginal_loglik(const KernelSpec& kernel, const TrainingSet& data);

struct EstimatorSettings {
    KernelFamily family = KernelFamily::Matern12;
    double log_range_min = -2.302585092994046;   // log 0.1
    double log_range_max = 6.907755278982137;    // log 1e3
    double log_nugget_min = -9.210340371976184;  // log 1e-4
    double log_nugget_max = 4.605170185988092;   // log 1e2
    int grid_points = 8;
    int restarts = 5;
    double tolerance = 1e-6;
    int max_iterations = 500;
    /// Extra (range, nugget) points evaluated and used as starts.
    std::vector<std::pair<double, double>> extra_starts;
    bool record_trace = false;
};

struct TracePoint {
    double range;
    double nugget;
    double loglik;
};

struct EstimationResult {
    double range = 0.0;
    double nugget = 0.0;
    double loglik = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    int restarts = 0;
    bool range_at_bound = false;
    bool nugget_at_bound = false;
    std::vector<TracePoint> trace;

    KernelSpec kernel(KernelFamily family) const { return {family, range, nugget}; }
};

/// Maximizes the pooled integrated likelihood over (log range, log nugget):
/// coarse log grid, then Nelder-Mead restarted from the best grid cells.
EstimationResult estimate(const TrainingSet& data, const EstimatorSettings& settings = {});

/// Minimal 2-D Nelder-Mead used by estimate(); exposed for testing.
struct SimplexResult {
    double x = 0.0;
    double y = 0.0;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

template <typename F>
SimplexResult nelder_mead_2d(F&& objective, double x0, double y0, double step, double tolerance, int max_iterations);

}  // namespace skfcpd

#include "skfcpd/detail/nelder_mead.hpp"
