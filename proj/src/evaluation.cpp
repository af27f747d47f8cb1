#include "skfcpd/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>

#include "skfcpd/errors.hpp"
#include "skfcpd/estimation.hpp"

namespace skfcpd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kSkfRepetitions = 15;
constexpr int kDenseRepetitions = 3;

double log_sum_exp(std::span<const double> v) {
    double top = -std::numeric_limits<double>::infinity();
    for (double x : v) top = std::max(top, x);
    if (!std::isfinite(top)) return top;
    double s = 0.0;
    for (double x : v) s += std::exp(x - top);
    return top + std::log(s);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::optional<std::size_t> first_detection(OnlineDetector& det, const TimeGrid& grid, std::span<const double> values) {
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (det.step(grid[k], values[k])) return k + 1;
    }
    return std::nullopt;
}

}  // namespace

Summary Summary::of(std::span<const double> values) {
    Summary s;
    s.count = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

DelayOutcome detection_delay(std::size_t tau, std::size_t n, std::optional<std::size_t> first) {
    if (!first) return {DelayOutcome::Kind::Missed, static_cast<double>(n > tau ? n - tau : 0)};
    if (*first < tau) return {DelayOutcome::Kind::FalseAlarm, 0.0};
    return {DelayOutcome::Kind::Detected, static_cast<double>(*first - tau)};
}

double covering(const Segmentation& truth, const Segmentation& detected) {
    if (truth.size() != detected.size()) throw InvalidInput("covering needs segmentations of the same length");
    if (truth.size() == 0) throw InvalidInput("covering of empty segmentations");
    const auto a = truth.segments();
    const auto b = detected.segments();
    double total = 0.0;
    for (const auto& [a0, a1] : a) {
        double best = 0.0;
        for (const auto& [b0, b1] : b) {
            const std::size_t lo = std::max(a0, b0);
            const std::size_t hi = std::min(a1, b1);
            if (hi < lo) continue;
            const double inter = static_cast<double>(hi - lo + 1);
            const double uni = static_cast<double>(std::max(a1, b1) - std::min(a0, b0) + 1);
            best = std::max(best, inter / uni);
        }
        total += static_cast<double>(a1 - a0 + 1) * best;
    }
    return total / static_cast<double>(truth.size());
}

double ConfusionCounts::precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }

double ConfusionCounts::recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }

double ConfusionCounts::f1() const {
    if (tp == 0) return 0.0;
    const double p = precision();
    const double r = recall();
    return 2.0 * p * r / (p + r);
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
}

std::vector<int> predicted_positive(std::span<const double> times, std::span<const double> detections, double window) {
    std::vector<int> out(times.size(), 0);
    for (std::size_t j = 0; j < times.size(); ++j) {
        for (double d : detections) {
            if (d <= times[j] && times[j] <= d + window) {
                out[j] = 1;
                break;
            }
        }
    }
    return out;
}

WindowEvaluation window_confusion(std::span<const double> times, std::span<const int> labels,
                                  std::span<const double> detections, const WindowConfig& config) {
    if (times.size() != labels.size()) throw InvalidInput("times and labels differ in length");
    WindowEvaluation out;
    std::size_t j = 0;
    while (j < times.size()) {
        if (labels[j] == 0) {
            const bool covered = std::any_of(detections.begin(), detections.end(),
                                             [&](double d) { return d <= times[j] && times[j] <= d + config.window; });
            covered ? ++out.counts.fp : ++out.counts.tn;
            ++j;
            continue;
        }
        const double day0 = times[j];
        ++out.positive_runs;
        std::optional<double> credited;
        for (; j < times.size() && labels[j] != 0; ++j) {
            std::optional<double> earliest;
            for (double d : detections) {
                if (d <= times[j] && times[j] <= d + config.window && d <= day0 + config.lateness) {
                    earliest = earliest ? std::min(*earliest, d) : d;
                }
            }
            if (earliest) {
                ++out.counts.tp;
                credited = credited ? std::min(*credited, *earliest) : *earliest;
            } else {
                ++out.counts.fn;
            }
        }
        if (credited) out.delays.push_back(std::max(0.0, *credited - day0));
    }
    return out;
}

DenseOracleResult dense_oracle_run(const KernelSpec& kernel, const HazardFunction& hazard,
                                   std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size()) throw InvalidInput("times and values differ in length");
    const std::size_t n = values.size();
    DenseOracleResult out;
    if (n == 0) return out;
    const TimeGrid grid(std::vector<double>(times.begin(), times.end()));
    const Eigen::MatrixXd full = dense_covariance(kernel, grid);

    // log_m[i] holds the integrated marginal of y_{i..m} at the current step m.
    std::vector<double> log_m;
    std::vector<double> joint;
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t len = m + 1;
        // Reversed ordering: the leading k x k block is the segment ending at m
        // of length k, so one factorization serves every candidate.
        Eigen::MatrixXd rev(len, len);
        for (std::size_t a = 0; a < len; ++a) {
            for (std::size_t b = 0; b < len; ++b) rev(a, b) = full(m - a, m - b);
        }
        Eigen::LLT<Eigen::MatrixXd> llt(rev);
        if (llt.info() != Eigen::Success) throw ConditioningError("dense oracle covariance is not positive definite");
        Eigen::VectorXd z(len);
        for (std::size_t a = 0; a < len; ++a) z(a) = values[m - a];
        const Eigen::VectorXd u = llt.matrixL().solve(Eigen::VectorXd::Ones(len));
        const Eigen::VectorXd w = llt.matrixL().solve(z);

        std::vector<double> new_log_m(len);
        double log_det = 0.0, s_uu = 0.0, s_vv = 0.0, s_uv = 0.0;
        for (std::size_t k = 1; k <= len; ++k) {
            const std::size_t a = k - 1;
            log_det += 2.0 * std::log(llt.matrixLLT()(a, a));
            s_uu += u(a) * u(a);
            s_vv += w(a) * w(a);
            s_uv += u(a) * w(a);
            double lm = -0.5 * log_det - 0.5 * std::log(s_uu);
            if (k >= 2) {
                const double sh = 0.5 * static_cast<double>(k - 1);
                const double q = std::max(s_vv - s_uv * s_uv / s_uu, 1e-300);
                lm += -sh * std::log(q) + std::lgamma(sh) - sh * std::log(std::numbers::pi);
            }
            new_log_m[len - k] = lm;  // start index (0-based) = m - k + 1
        }

        std::vector<double> next(len);
        if (m == 0) {
            next[0] = 0.0;
        } else {
            for (std::size_t i = 0; i < m; ++i) {
                next[i] = joint[i] + (new_log_m[i] - log_m[i]) + std::log1p(-hazard.at(times[i]));
            }
            next[m] = std::log(hazard.at(times[m])) + log_sum_exp(joint);
        }
        const double lse = log_sum_exp(next);
        for (double& x : next) x -= lse;
        joint = std::move(next);
        log_m = std::move(new_log_m);

        std::size_t best = 0;
        double best_val = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < len; ++i) {
            if (len - i < 2 && len > 1) continue;
            if (joint[i] > best_val) {
                best_val = joint[i];
                best = i;
            }
        }
        out.map_path.push_back(best + 1);
    }
    out.log_joint = std::move(joint);
    return out;
}

StepTiming skf_step_timing(const KernelSpec& kernel, std::span<const double> values, double hazard) {
    DetectorConfig cfg;
    cfg.kernel = kernel;
    cfg.hazard = HazardFunction::constant(hazard);
    cfg.truncate_at_detection = false;
    SkfDetector det(cfg);
    StepTiming out;
    out.seconds.reserve(values.size());
    out.candidates.reserve(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        const auto start = Clock::now();
        det.step(static_cast<double>(k + 1), values[k]);
        out.seconds.push_back(seconds_since(start));
        out.candidates.push_back(det.live_candidates());
    }
    return out;
}

std::vector<TimingRow> timing_benchmark(std::span<const std::size_t> sizes, const KernelSpec& kernel,
                                        std::uint64_t seed, std::size_t dense_max_n) {
    std::vector<TimingRow> rows;
    for (std::size_t n : sizes) {
        const TimeGrid grid = TimeGrid::regular(n);
        std::mt19937_64 rng(derive_seed(seed, n));
        const auto values = sample_gp({0.0, 1.0, kernel}, grid, rng);

        TimingRow row;
        row.n = n;
        DetectorConfig cfg;
        cfg.kernel = kernel;
        cfg.hazard = HazardFunction::constant(1e-6);
        cfg.truncate_at_detection = false;
        // Best of several repetitions damps scheduler noise; the short SKF run
        // gets more of them.
        row.skf_seconds = kInf;
        for (int rep = 0; rep < kSkfRepetitions; ++rep) {
            const auto start = Clock::now();
            SkfDetector det(cfg);
            for (std::size_t k = 0; k < n; ++k) det.step(grid[k], values[k]);
            row.skf_seconds = std::min(row.skf_seconds, seconds_since(start));
        }
        row.dense_seconds = n <= dense_max_n ? kInf : kNaN;
        for (int rep = 0; n <= dense_max_n && rep < kDenseRepetitions; ++rep) {
            const auto start = Clock::now();
            dense_oracle_run(kernel, HazardFunction::constant(1e-6), grid.times(), values);
            row.dense_seconds = std::min(row.dense_seconds, seconds_since(start));
        }
        rows.push_back(row);
    }
    return rows;
}

std::string to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::Skf: return "skf";
        case DetectorKind::Bocpd: return "bocpd";
        case DetectorKind::Cusum: return "cusum";
    }
    return "unknown";
}

DetectorKind parse_detector_kind(std::string_view name) {
    if (name == "skf") return DetectorKind::Skf;
    if (name == "bocpd") return DetectorKind::Bocpd;
    if (name == "cusum") return DetectorKind::Cusum;
    throw InvalidParameter("unknown detector '" + std::string(name) + "'");
}

std::vector<DetectorKind> parse_detector_list(std::string_view csv) {
    std::vector<DetectorKind> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = std::min(csv.find(',', pos), csv.size());
        const auto item = csv.substr(pos, comma - pos);
        if (!item.empty()) out.push_back(parse_detector_kind(item));
        pos = comma + 1;
    }
    if (out.empty()) throw InvalidParameter("empty detector list");
    return out;
}

TrainingFit fit_training(const TimeGrid& grid, std::span<const double> training, KernelFamily family) {
    if (grid.size() != training.size()) throw InvalidInput("training grid and values differ in length");
    TrainingSet set;
    set.series.push_back({grid, std::vector<double>(training.begin(), training.end())});
    EstimatorSettings settings;
    settings.family = family;
    const EstimationResult est = estimate(set, settings);
    TrainingFit fit;
    fit.kernel = est.kernel(family);
    fit.prior = NigParams::from_training(training);
    fit.cusum = CusumConfig::from_training(training, 0.5, 4.0);
    return fit;
}

std::unique_ptr<OnlineDetector> make_detector(DetectorKind kind, const TrainingFit& fit, double knob,
                                              std::size_t warmup, bool truncate, double cusum_drift) {
    switch (kind) {
        case DetectorKind::Skf: {
            DetectorConfig cfg;
            cfg.kernel = fit.kernel;
            cfg.hazard = HazardFunction::constant(knob);
            cfg.truncate_at_detection = truncate;
            cfg.warmup = warmup;
            return std::make_unique<SkfDetector>(cfg);
        }
        case DetectorKind::Bocpd: {
            BocpdConfig cfg;
            cfg.hazard = HazardFunction::constant(knob);
            cfg.prior = fit.prior;
            cfg.truncate_at_detection = truncate;
            cfg.warmup = warmup;
            return std::make_unique<BocpdDetector>(cfg);
        }
        case DetectorKind::Cusum: {
            CusumConfig cfg = fit.cusum;
            cfg.threshold = knob;
            cfg.drift = cusum_drift;
            cfg.warmup = warmup;
            return std::make_unique<CusumDetector>(cfg);
        }
    }
    throw InvalidParameter("unknown detector kind");
}

std::pair<double, double> knob_bounds(DetectorKind kind) {
    if (kind == DetectorKind::Cusum) return {0.25, 100.0};
    return {1e-12, 0.5};
}

CalibrationResult calibrate_to_arl(const std::function<double(double)>& arl_of, double lo, double hi,
                                   const CalibrationSettings& settings) {
    if (!(lo > 0.0) || !(hi > lo)) throw CalibrationFailed("calibration bounds must satisfy 0 < lo < hi");
    const double tol = settings.rel_tolerance * settings.target;
    CalibrationResult best;
    double best_gap = std::numeric_limits<double>::infinity();
    auto record = [&](double knob, double arl, int it) {
        const double gap = std::abs(arl - settings.target);
        if (gap < best_gap) {
            best_gap = gap;
            best = {knob, arl, it};
        }
        return gap <= tol;
    };

    double a_lo = arl_of(lo);
    if (record(lo, a_lo, 0)) return best;
    double a_hi = arl_of(hi);
    if (record(hi, a_hi, 0)) return best;
    if ((a_lo - settings.target) * (a_hi - settings.target) > 0.0) {
        throw CalibrationFailed("knob bounds do not bracket the target ARL (" + format_metric(a_lo) + ", " +
                                format_metric(a_hi) + ")");
    }
    double l = std::log(lo), h = std::log(hi);
    for (int it = 1; it <= settings.max_iterations; ++it) {
        const double mid = 0.5 * (l + h);
        const double a_mid = arl_of(std::exp(mid));
        if (record(std::exp(mid), a_mid, it)) return best;
        if ((a_mid - settings.target) * (a_lo - settings.target) > 0.0) {
            l = mid;
            a_lo = a_mid;
        } else {
            h = mid;
        }
    }
    throw CalibrationFailed("ARL calibration did not reach tolerance; closest " + format_metric(best.arl));
}

NoChangeBatch make_no_change_batch(const GpSegmentModel& model, std::size_t training, std::size_t horizon,
                                   std::size_t reps, std::uint64_t seed) {
    if (training < 4 || horizon <= training) throw InvalidParameter("no-change batch needs 4 <= training < horizon");
    NoChangeBatch batch;
    batch.grid = TimeGrid::regular(horizon);
    batch.training = training;
    const TimeGrid train_grid = batch.grid.slice(0, training);
    for (std::size_t r = 0; r < reps; ++r) {
        std::mt19937_64 rng(derive_seed(seed, 1, r));
        auto values = sample_gp(model, batch.grid, rng);
        batch.fits.push_back(fit_training(train_grid, std::span(values).first(training), model.kernel.family));
        batch.series.push_back(std::move(values));
    }
    return batch;
}

double batch_arl(DetectorKind kind, const NoChangeBatch& batch, double knob, double cusum_drift) {
    if (batch.series.empty()) throw InvalidInput("empty no-change batch");
    const double censored = static_cast<double>(batch.grid.size() - batch.training);
    double total = 0.0;
    for (std::size_t r = 0; r < batch.series.size(); ++r) {
        auto det = make_detector(kind, batch.fits[r], knob, batch.training, true, cusum_drift);
        const auto first = first_detection(*det, batch.grid, batch.series[r]);
        total += first ? static_cast<double>(*first - batch.training) : censored;
    }
    return total / static_cast<double>(batch.series.size());
}

std::vector<DetectorCalibration> calibrate_detectors(std::span<const DetectorKind> kinds, const NoChangeBatch& batch,
                                                     const CalibrationSettings& settings, double cusum_drift) {
    std::vector<DetectorCalibration> out;
    for (DetectorKind kind : kinds) {
        const auto [lo, hi] = knob_bounds(kind);
        auto arl = [&](double knob) { return batch_arl(kind, batch, knob, cusum_drift); };
        out.push_back({kind, calibrate_to_arl(arl, lo, hi, settings)});
    }
    return out;
}

GpSegmentModel shifted_model(const GpSegmentModel& pre, ShiftKind shift, double post_value) {
    GpSegmentModel post = pre;
    switch (shift) {
        case ShiftKind::Mean: post.mean = post_value; break;
        case ShiftKind::Variance: post.signal_variance = post_value; break;
        case ShiftKind::Range: post.kernel.range = post_value; break;
    }
    post.validate();
    return post;
}

namespace {

const DetectorCalibration& find_calibration(std::span<const DetectorCalibration> cals, DetectorKind kind) {
    for (const auto& c : cals) {
        if (c.kind == kind) return c;
    }
    throw InvalidParameter("no calibration for detector " + to_string(kind));
}

}  // namespace

std::vector<DetectorCalibration> calibrate_single_change(const SingleChangeConfig& c) {
    const auto batch = make_no_change_batch(c.pre_model(), c.tau - 1, c.arl_horizon, c.calibration_reps, c.seed);
    CalibrationSettings s;
    s.target = c.target_arl;
    s.rel_tolerance = c.calibration_tolerance;
    return calibrate_detectors(c.detectors, batch, s, c.cusum_drift);
}

std::vector<SingleChangeRow> run_single_change(const SingleChangeConfig& c,
                                               std::span<const DetectorCalibration> calibrations) {
    if (c.tau < 5 || c.tau > c.n) throw InvalidParameter("single-change experiment needs 5 <= tau <= n");
    Scenario scenario;
    scenario.shift = c.shift;
    scenario.pre = c.pre_model();
    scenario.post = shifted_model(scenario.pre, c.shift, c.post_value);
    scenario.changepoints = {c.tau};
    scenario.grid = TimeGrid::regular(c.n);
    const std::size_t training = c.tau - 1;
    const TimeGrid train_grid = scenario.grid.slice(0, training);

    std::vector<SingleChangeRow> rows;
    for (DetectorKind kind : c.detectors) {
        SingleChangeRow row;
        row.kind = kind;
        const auto& cal = find_calibration(calibrations, kind);
        row.knob = cal.result.knob;
        row.arl = cal.result.arl;
        rows.push_back(row);
    }
    std::vector<std::vector<double>> counted(rows.size());
    std::vector<std::size_t> misses(rows.size(), 0), false_alarms(rows.size(), 0);

    for (std::size_t r = 0; r < c.reps; ++r) {
        const auto sim = simulate_scenario(scenario, derive_seed(c.seed, 2, r));
        const auto fit = fit_training(train_grid, std::span(sim.values).first(training), c.family);
        for (std::size_t d = 0; d < rows.size(); ++d) {
            auto det = make_detector(rows[d].kind, fit, rows[d].knob, training, true, c.cusum_drift);
            const auto outcome = detection_delay(c.tau, c.n, first_detection(*det, scenario.grid, sim.values));
            switch (outcome.kind) {
                case DelayOutcome::Kind::FalseAlarm:
                    ++false_alarms[d];
                    rows[d].delays.push_back(kNaN);
                    continue;
                case DelayOutcome::Kind::Missed: ++misses[d]; break;
                case DelayOutcome::Kind::Detected: break;
            }
            counted[d].push_back(outcome.delay);
            rows[d].delays.push_back(outcome.delay);
        }
    }
    for (std::size_t d = 0; d < rows.size(); ++d) {
        rows[d].add = Summary::of(counted[d]);
        rows[d].miss_rate = static_cast<double>(misses[d]) / static_cast<double>(c.reps);
        rows[d].false_alarm_rate = static_cast<double>(false_alarms[d]) / static_cast<double>(c.reps);
    }
    return rows;
}

std::vector<DetectorCalibration> calibrate_multi_change(const MultiChangeConfig& c) {
    const auto batch = make_no_change_batch(c.pre_model(), c.training(), c.arl_horizon, c.calibration_reps, c.seed);
    CalibrationSettings s;
    s.target = c.target_arl;
    s.rel_tolerance = c.calibration_tolerance;
    return calibrate_detectors(c.detectors, batch, s, c.cusum_drift);
}

std::vector<MultiChangeRow> run_multi_change(const MultiChangeConfig& c,
                                             std::span<const DetectorCalibration> calibrations) {
    Scenario scenario;
    scenario.shift = c.shift;
    scenario.pre = c.pre_model();
    scenario.post = shifted_model(scenario.pre, c.shift, c.post_value);
    scenario.changepoints = c.changepoints;
    scenario.grid = TimeGrid::regular(c.n);
    const std::size_t training = c.training();
    if (training < 4) throw InvalidParameter("multi-change experiment needs at least 4 training points");
    const TimeGrid train_grid = scenario.grid.slice(0, training);

    std::vector<MultiChangeRow> rows;
    for (DetectorKind kind : c.detectors) {
        MultiChangeRow row;
        row.kind = kind;
        const auto& cal = find_calibration(calibrations, kind);
        row.knob = cal.result.knob;
        row.arl = cal.result.arl;
        rows.push_back(row);
    }
    std::vector<std::vector<double>> counts(rows.size());
    for (std::size_t r = 0; r < c.reps; ++r) {
        const auto sim = simulate_scenario(scenario, derive_seed(c.seed, 3, r));
        const auto fit = fit_training(train_grid, std::span(sim.values).first(training), c.family);
        for (std::size_t d = 0; d < rows.size(); ++d) {
            auto det = make_detector(rows[d].kind, fit, rows[d].knob, training, true, c.cusum_drift);
            RunOptions opts;
            opts.keep_map_path = false;
            const auto res = run(*det, scenario.grid.times(), sim.values, opts);
            const auto detected = Segmentation::from_detections(c.n, res.changepoints);
            rows[d].coverings.push_back(covering(sim.truth, detected));
            counts[d].push_back(static_cast<double>(detected.changepoints().size()));
        }
    }
    for (std::size_t d = 0; d < rows.size(); ++d) {
        rows[d].covering = Summary::of(rows[d].coverings);
        rows[d].detections = Summary::of(counts[d]);
    }
    return rows;
}

std::string format_metric(double value) {
    if (std::isnan(value)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

std::string MetricTable::to_csv() const {
    std::ostringstream os;
    for (std::size_t k = 0; k < columns.size(); ++k) os << (k ? "," : "") << columns[k];
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << row[k];
        os << '\n';
    }
    return os.str();
}

MetricTable single_change_table(const SingleChangeConfig& c, std::span<const SingleChangeRow> rows) {
    MetricTable t;
    t.columns = {"kernel", "shift", "post_value", "detector", "knob", "arl", "add", "add_sd", "reps", "miss_rate",
                 "false_alarm_rate"};
    for (const auto& r : rows) {
        t.rows.push_back({to_string(c.family), to_string(c.shift), format_metric(c.post_value), to_string(r.kind),
                          format_metric(r.knob), format_metric(r.arl), format_metric(r.add.mean),
                          format_metric(r.add.sd), std::to_string(r.add.count), format_metric(r.miss_rate),
                          format_metric(r.false_alarm_rate)});
    }
    return t;
}

MetricTable multi_change_table(const MultiChangeConfig& c, std::span<const MultiChangeRow> rows) {
    MetricTable t;
    t.columns = {"kernel", "shift", "post_value", "detector", "knob", "arl", "covering", "covering_sd", "reps",
                 "mean_detections"};
    for (const auto& r : rows) {
        t.rows.push_back({to_string(c.family), to_string(c.shift), format_metric(c.post_value), to_string(r.kind),
                          format_metric(r.knob), format_metric(r.arl), format_metric(r.covering.mean),
                          format_metric(r.covering.sd), std::to_string(r.covering.count),
                          format_metric(r.detections.mean)});
    }
    return t;
}

}  // namespace skfcpd
