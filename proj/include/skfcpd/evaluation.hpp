#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skfcpd/baselines.hpp"
#include "skfcpd/detector.hpp"
#include "skfcpd/segmentation.hpp"
#include "skfcpd/skf_detector.hpp"
#include "skfcpd/temporal_model.hpp"

namespace skfcpd {

// ---------------------------------------------------------------- metrics

struct Summary {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation, 0 for fewer than two values
    std::size_t count = 0;

    static Summary of(std::span<const double> values);
};

struct DelayOutcome {
    enum class Kind { Detected, FalseAlarm, Missed };
    Kind kind = Kind::Missed;
    /// (first detection - tau)+ when detected; n - tau when missed; 0 for a
    /// false alarm.
    double delay = 0.0;
};

/// Delay of the first detection step relative to the change at index tau.
DelayOutcome detection_delay(std::size_t tau, std::size_t n, std::optional<std::size_t> first_detection);

/// (1/n) sum_i |A_i| max_j J(A_i, A'_j) over truth segments A_i and detected
/// segments A'_j, with J the Jaccard index.
double covering(const Segmentation& truth, const Segmentation& detected);

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    double precision() const;
    double recall() const;
    /// 0 when tp = 0.
    double f1() const;
    ConfusionCounts& operator+=(const ConfusionCounts& other);
};

struct WindowConfig {
    double window = 7.0;    // predicted positive on [d, d + window] after a detection at d
    double lateness = 14.0; // detections after day0 + lateness earn no true positives
};

struct WindowEvaluation {
    ConfusionCounts counts;
    /// One entry per positive run credited with a detection: days from the
    /// run's first day to the earliest crediting detection (>= 0).
    std::vector<double> delays;
    std::size_t positive_runs = 0;
};

/// Scores time-stamped detections against 0/1 labels. Each maximal run of
/// positive labels defines day 0 as its first time.
WindowEvaluation window_confusion(std::span<const double> times, std::span<const int> labels,
                                  std::span<const double> detection_times, const WindowConfig& config = {});

/// Times flagged positive by a set of detections.
std::vector<int> predicted_positive(std::span<const double> times, std::span<const double> detection_times,
                                    double window);

// ------------------------------------------------------------ dense oracle

struct DenseOracleResult {
    std::vector<double> log_joint;      // normalized, candidates 1..n
    std::vector<std::size_t> map_path;  // MAP (length >= 2) after each step
};

/// Untruncated changepoint recursion where every segment marginal is
/// evaluated from a dense Cholesky factorization (O(n^3) per step).
DenseOracleResult dense_oracle_run(const KernelSpec& kernel, const HazardFunction& hazard,
                                   std::span<const double> times, std::span<const double> values);

struct TimingRow {
    std::size_t n = 0;
    double skf_seconds = 0.0;
    double dense_seconds = 0.0;  // NaN when the oracle was skipped
};

/// Wall times of a full untruncated SKF run and of the dense oracle on the
/// same simulated no-change series. The oracle is skipped above dense_max_n.
std::vector<TimingRow> timing_benchmark(std::span<const std::size_t> sizes, const KernelSpec& kernel,
                                        std::uint64_t seed, std::size_t dense_max_n = 400);

/// Per-step wall time and live-candidate count of an untruncated SKF run.
struct StepTiming {
    std::vector<double> seconds;
    std::vector<std::size_t> candidates;
};
StepTiming skf_step_timing(const KernelSpec& kernel, std::span<const double> values, double hazard = 1e-6);

// ------------------------------------------------------------- detectors

enum class DetectorKind { Skf, Bocpd, Cusum };

std::string to_string(DetectorKind kind);
DetectorKind parse_detector_kind(std::string_view name);
std::vector<DetectorKind> parse_detector_list(std::string_view csv);

/// Everything a detector learns from a change-free training window.
struct TrainingFit {
    KernelSpec kernel;
    NigParams prior;
    CusumConfig cusum;
};

/// Estimates (range, nugget) for the given family, the BOCPD prior and the
/// CUSUM standardization from the same window.
TrainingFit fit_training(const TimeGrid& grid, std::span<const double> training, KernelFamily family);

/// Builds a detector whose tuning knob is the constant hazard (SKF, BOCPD)
/// or the CUSUM threshold.
std::unique_ptr<OnlineDetector> make_detector(DetectorKind kind, const TrainingFit& fit, double knob,
                                              std::size_t warmup, bool truncate = true, double cusum_drift = 0.5);

/// Bisection range of the knob (geometric for the hazard).
std::pair<double, double> knob_bounds(DetectorKind kind);

// ------------------------------------------------------------ calibration

struct CalibrationSettings {
    double target = 50.0;
    double rel_tolerance = 0.10;
    int max_iterations = 60;
};

struct CalibrationResult {
    double knob = 0.0;
    double arl = 0.0;
    int iterations = 0;
};

/// Bisection on log(knob) until |ARL - target| <= rel_tolerance * target.
/// `arl_of` must be deterministic. Throws CalibrationFailed if the bounds do
/// not bracket the target or the tolerance is not met.
CalibrationResult calibrate_to_arl(const std::function<double(double)>& arl_of, double lo, double hi,
                                   const CalibrationSettings& settings);

/// Change-free replicates with a per-replicate training fit.
struct NoChangeBatch {
    TimeGrid grid;
    std::size_t training = 0;
    std::vector<std::vector<double>> series;
    std::vector<TrainingFit> fits;
};

NoChangeBatch make_no_change_batch(const GpSegmentModel& model, std::size_t training, std::size_t horizon,
                                   std::size_t reps, std::uint64_t seed);

/// Mean of (first detection - training) over the batch, censored at the
/// horizon.
double batch_arl(DetectorKind kind, const NoChangeBatch& batch, double knob, double cusum_drift = 0.5);

struct DetectorCalibration {
    DetectorKind kind = DetectorKind::Skf;
    CalibrationResult result;
};

std::vector<DetectorCalibration> calibrate_detectors(std::span<const DetectorKind> kinds, const NoChangeBatch& batch,
                                                     const CalibrationSettings& settings, double cusum_drift = 0.5);

// ------------------------------------------------------------ experiments

GpSegmentModel shifted_model(const GpSegmentModel& pre, ShiftKind shift, double post_value);

struct SingleChangeConfig {
    KernelFamily family = KernelFamily::Matern52;
    double range = 4.0;
    double nugget = 0.1;
    ShiftKind shift = ShiftKind::Mean;
    double post_value = 2.0;
    std::size_t n = 100;
    std::size_t tau = 50;  // first post-change index; the tau - 1 earlier points train
    std::size_t reps = 100;
    std::size_t calibration_reps = 200;
    std::size_t arl_horizon = 300;
    double target_arl = 50.0;
    double calibration_tolerance = 0.02;
    double cusum_drift = 0.5;
    std::uint64_t seed = 1;
    std::vector<DetectorKind> detectors{DetectorKind::Skf, DetectorKind::Bocpd, DetectorKind::Cusum};

    GpSegmentModel pre_model() const { return {0.0, 1.0, {family, range, nugget}}; }
};

struct SingleChangeRow {
    DetectorKind kind = DetectorKind::Skf;
    double knob = 0.0;
    double arl = 0.0;
    Summary add;  // missed replicates contribute n - tau
    double miss_rate = 0.0;
    double false_alarm_rate = 0.0;
    std::vector<double> delays;  // per replicate, NaN for false alarms
};

/// Calibrations for every detector in the config (one no-change batch).
std::vector<DetectorCalibration> calibrate_single_change(const SingleChangeConfig& config);

std::vector<SingleChangeRow> run_single_change(const SingleChangeConfig& config,
                                               std::span<const DetectorCalibration> calibrations);

struct MultiChangeConfig {
    KernelFamily family = KernelFamily::Matern52;
    double range = 4.0;
    double nugget = 0.1;
    ShiftKind shift = ShiftKind::Mean;
    double post_value = 8.0;
    std::vector<std::size_t> changepoints{33, 66, 98, 130};
    std::size_t n = 150;
    std::size_t reps = 100;
    std::size_t calibration_reps = 200;
    std::size_t arl_horizon = 300;
    double target_arl = 50.0;
    double calibration_tolerance = 0.02;
    double cusum_drift = 0.5;
    std::uint64_t seed = 1;
    std::vector<DetectorKind> detectors{DetectorKind::Skf, DetectorKind::Bocpd, DetectorKind::Cusum};

    GpSegmentModel pre_model() const { return {0.0, 1.0, {family, range, nugget}}; }
    std::size_t training() const { return changepoints.empty() ? n / 3 : changepoints.front() - 1; }
};

struct MultiChangeRow {
    DetectorKind kind = DetectorKind::Skf;
    double knob = 0.0;
    double arl = 0.0;
    Summary covering;
    Summary detections;
    std::vector<double> coverings;
};

std::vector<DetectorCalibration> calibrate_multi_change(const MultiChangeConfig& config);

std::vector<MultiChangeRow> run_multi_change(const MultiChangeConfig& config,
                                             std::span<const DetectorCalibration> calibrations);

// ---------------------------------------------------------- metric tables

/// Column-ordered table of preformatted cells.
struct MetricTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const;
};

/// Fixed-precision formatting shared by every metric table.
std::string format_metric(double value);

MetricTable single_change_table(const SingleChangeConfig& config, std::span<const SingleChangeRow> rows);
MetricTable multi_change_table(const MultiChangeConfig& config, std::span<const MultiChangeRow> rows);

}  // namespace skfcpd
