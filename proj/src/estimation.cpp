#include "skfcpd/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "skfcpd/errors.hpp"

namespace skfcpd {

namespace {

constexpr double kQuadFormFloor = 1e-300;

double series_loglik(const KernelSpec& kernel, const ObservationModel& obs, const TrainingSeries& s) {
    std::size_t k = 0;
    while (k < s.values.size() && !std::isfinite(s.values[k])) ++k;
    if (k == s.values.size()) throw InvalidInput("training series has no observed values");

    SegmentAccumulator acc = init_segment(obs, k + 1, s.values[k]);
    double cached_gap = -1.0;
    Transition tr;
    for (std::size_t j = k + 1; j < s.values.size(); ++j) {
        const double gap = s.grid.spacing(j);
        if (gap != cached_gap) {
            tr = transition(kernel, gap);
            cached_gap = gap;
        }
        advance(acc, tr, s.values[j]);
    }
    return integrated_log_marginal(acc);
}

}  // namespace

void TrainingSet::validate() const {
    if (series.empty()) throw InvalidInput("training set is empty");
    for (const auto& s : series) {
        if (s.values.size() != s.grid.size()) throw InvalidInput("training series length does not match its grid");
        const auto observed = std::count_if(s.values.begin(), s.values.end(), [](double v) { return std::isfinite(v); });
        if (observed < 4) throw InvalidInput("each training series needs at least 4 observed values");
    }
}

std::size_t TrainingSet::total_length() const {
    std::size_t n = 0;
    for (const auto& s : series) n += s.values.size();
    return n;
}

double integrated_log_marginal(const SegmentAccumulator& acc) {
    if (acc.length < 2) throw InvalidInput("integrated marginal needs at least two observations");
    const double a = 0.5 * static_cast<double>(acc.length - 1);
    const double q = std::max(quadratic_form(acc), kQuadFormFloor);
    return -0.5 * acc.log_det - 0.5 * std::log(acc.s_uu) - a * std::log(q) + std::lgamma(a) -
           a * std::log(std::numbers::pi);
}

double integrated_marginal_loglik(const KernelSpec& kernel, const TrainingSet& data) {
    kernel.validate();
    const ObservationModel obs = observation_model(kernel);
    double total = 0.0;
    for (const auto& s : data.series) total += series_loglik(kernel, obs, s);
    return total;
}

EstimationResult estimate(const TrainingSet& data, const EstimatorSettings& settings) {
    data.validate();
    if (settings.grid_points < 1 || settings.restarts < 1) throw InvalidParameter("grid and restarts must be >= 1");
    if (!(settings.log_range_min < settings.log_range_max) || !(settings.log_nugget_min < settings.log_nugget_max)) {
        throw InvalidParameter("empty search box");
    }

    EstimationResult result;
    double best = -std::numeric_limits<double>::infinity();
    double best_lr = 0.0;
    double best_ln = 0.0;

    auto clamp_lr = [&](double v) { return std::clamp(v, settings.log_range_min, settings.log_range_max); };
    auto clamp_ln = [&](double v) { return std::clamp(v, settings.log_nugget_min, settings.log_nugget_max); };

    auto loglik_at = [&](double lr, double ln) {
        lr = clamp_lr(lr);
        ln = clamp_ln(ln);
        const KernelSpec kernel{settings.family, std::exp(lr), std::exp(ln)};
        double ll;
        try {
            ll = integrated_marginal_loglik(kernel, data);
        } catch (const ConditioningError&) {
            ll = -std::numeric_limits<double>::infinity();
        }
        if (!std::isfinite(ll)) ll = -std::numeric_limits<double>::infinity();
        ++result.evaluations;
        if (settings.record_trace) result.trace.push_back({kernel.range, kernel.nugget, ll});
        if (ll > best) {
            best = ll;
            best_lr = lr;
            best_ln = ln;
        }
        return ll;
    };

    struct Start {
        double lr, ln, ll;
    };
    std::vector<Start> grid;
    const int g = settings.grid_points;
    const double wr = (settings.log_range_max - settings.log_range_min) / g;
    const double wn = (settings.log_nugget_max - settings.log_nugget_min) / g;
    for (int i = 0; i < g; ++i) {
        for (int j = 0; j < g; ++j) {
            const double lr = settings.log_range_min + (i + 0.5) * wr;
            const double ln = settings.log_nugget_min + (j + 0.5) * wn;
            grid.push_back({lr, ln, loglik_at(lr, ln)});
        }
    }
    std::stable_sort(grid.begin(), grid.end(), [](const Start& a, const Start& b) { return a.ll > b.ll; });

    std::vector<Start> starts;
    for (int k = 0; k < settings.restarts && k < static_cast<int>(grid.size()); ++k) starts.push_back(grid[k]);
    for (const auto& [range, nugget] : settings.extra_starts) {
        if (!(range > 0.0) || !(nugget > 0.0)) throw InvalidParameter("extra starts must be positive");
        const double lr = std::log(range);
        const double ln = std::log(nugget);
        starts.push_back({lr, ln, loglik_at(lr, ln)});
    }

    const double step = 0.5 * std::min(wr, wn);
    bool best_run_converged = false;
    double best_run_value = -std::numeric_limits<double>::infinity();
    for (const Start& s : starts) {
        if (!std::isfinite(s.ll)) continue;
        const SimplexResult r = nelder_mead_2d([&](double lr, double ln) { return -loglik_at(lr, ln); }, s.lr,
                                               s.ln, step, settings.tolerance, settings.max_iterations);
        result.iterations += r.iterations;
        ++result.restarts;
        if (-r.value > best_run_value) {
            best_run_value = -r.value;
            best_run_converged = r.converged;
        }
    }

    if (!std::isfinite(best)) throw EstimationFailed("no finite likelihood evaluation in the search box");
    result.range = std::exp(best_lr);
    result.nugget = std::exp(best_ln);
    result.loglik = best;
    result.converged = best_run_converged;
    constexpr double kBoundTol = 1e-3;
    result.range_at_bound = best_lr - settings.log_range_min < kBoundTol || settings.log_range_max - best_lr < kBoundTol;
    result.nugget_at_bound =
        best_ln - settings.log_nugget_min < kBoundTol || settings.log_nugget_max - best_ln < kBoundTol;
    return result;
}

}  // namespace skfcpd
