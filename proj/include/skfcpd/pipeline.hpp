#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skfcpd/detector.hpp"
#include "skfcpd/estimation.hpp"
#include "skfcpd/evaluation.hpp"
#include "skfcpd/temporal_model.hpp"

namespace skfcpd {

// ------------------------------------------------------------------- CSV

struct SeriesRecord {
    std::string entity;
    double time = 0.0;  // day count for ISO dates
    double value = 0.0; // NaN for NA
    std::optional<int> label;
};

struct SeriesTable {
    std::vector<SeriesRecord> records;
    bool has_labels = false;
    bool iso_dates = false;
};

/// Days since 1970-01-01 for YYYY-MM-DD; nullopt when `text` is not a date.
std::optional<double> parse_iso_date(std::string_view text);
std::string format_iso_date(double days);

/// Parses `entity,time,value[,label]`. Times are all ISO dates or all
/// numeric. Throws DataError with the offending line number.
SeriesTable parse_series_csv(std::istream& in);
SeriesTable parse_series_csv_file(const std::string& path);
std::string serialize_series_csv(const SeriesTable& table);

/// `time,hazard` table; times may be ISO dates.
HazardFunction parse_hazard_csv(std::istream& in);
HazardFunction parse_hazard_csv_file(const std::string& path);

struct EntitySeries {
    std::string id;
    std::vector<double> times;
    std::vector<double> values;
    std::vector<int> labels;  // empty when the table has none
};

/// Groups by entity (sorted by id) and sorts each entity by time. Duplicate
/// times within an entity are a DataError.
std::vector<EntitySeries> group_by_entity(const SeriesTable& table);

// ----------------------------------------------------------------- logit

double logit(double p);

/// Logit after clamping into the entity's observed extremes within (0, 1).
/// NaN stays NaN; values outside [0, 1] are a DataError.
std::vector<double> logit_transform(std::span<const double> probabilities);

// ------------------------------------------------------------- screening

struct ScreeningConfig {
    double alpha = 0.05;
    double recency = 7.0;  // days after a changepoint during which it may be screened

    void validate() const;
};

struct ScreeningResult {
    bool pass = false;
    double statistic = 0.0;
    double critical = 0.0;
    double df = 0.0;
    double mean_pre = 0.0;
    double mean_post = 0.0;
    std::string diagnostic;  // set when the test could not be carried out
};

/// One-sided test of H0: mu_pre = mu_post against mu_pre < mu_post. The
/// joined series is fitted by generalized least squares with a level and a
/// post-segment step under the kernel (correlation across the split
/// included); the step's t statistic with the residual scale has n - 2
/// degrees of freedom under H0. Missing values are skipped.
ScreeningResult screening_test(std::span<const double> pre_times, std::span<const double> pre_values,
                               std::span<const double> post_times, std::span<const double> post_values,
                               const KernelSpec& kernel, double alpha);

// -------------------------------------------------------------- pipeline

struct PipelineConfig {
    KernelFamily family = KernelFamily::Matern12;
    /// Fixed kernel; when absent (range, nugget) are estimated on the pooled
    /// training windows.
    std::optional<KernelSpec> kernel;
    double hazard = 0.01;
    std::optional<HazardFunction> hazard_series;
    /// Per-step alarm rate targeted on the training windows; overrides
    /// `hazard` when set.
    std::optional<double> target_alarm_rate;
    std::size_t training = 0;  // n0 points per entity
    bool probability_input = true;
    bool screen = true;
    ScreeningConfig screening;
    WindowConfig window;
    std::size_t min_segment_for_report = 2;

    void validate() const;
};

struct PipelineDetection {
    std::size_t index = 0;        // 1-based index in the entity's series
    double time = 0.0;            // changepoint time
    double detected_at = 0.0;     // time of the observation that produced it
    double map_weight = 0.0;
    bool screened = false;
    double statistic = 0.0;
};

struct PositiveWindow {
    double start = 0.0;
    double end = 0.0;
};

struct EntityResult {
    std::string id;
    std::vector<PipelineDetection> detections;
    std::vector<PositiveWindow> windows;
    std::optional<WindowEvaluation> evaluation;
};

struct PipelineResult {
    KernelSpec kernel;
    bool estimated = false;
    std::optional<EstimationResult> estimate;
    double hazard = 0.0;  // NaN when a series hazard is used
    std::vector<EntityResult> entities;
    std::vector<std::string> warnings;
    std::optional<ConfusionCounts> counts;
    std::optional<Summary> delay;
};

/// Transformed values of every entity (logit when configured).
std::vector<EntitySeries> transform_entities(std::span<const EntitySeries> entities, const PipelineConfig& config);

/// Pooled (range, nugget) fit over the first `training` points of every
/// entity (all points when 0); entities with fewer than 4 observed values in
/// that window are left out.
EstimationResult estimate_training_kernel(std::span<const EntitySeries> transformed, std::size_t training,
                                          KernelFamily family);

/// Constant hazard whose per-step alarm rate on the change-free training
/// windows matches `target_rate` within 10%.
CalibrationResult calibrate_training_hazard(std::span<const EntitySeries> transformed, const KernelSpec& kernel,
                                            std::size_t training, double target_rate);

/// Estimation, detection on the post-training points, screening of recent
/// changepoints, 7-day windows and label metrics.
PipelineResult run_pipeline(std::span<const EntitySeries> entities, const PipelineConfig& config);

/// Stable-key JSON document {config, entities, metrics?}.
std::string pipeline_json(const PipelineResult& result, const PipelineConfig& config, bool iso_dates);

// ------------------------------------------------------ threshold baseline

struct ThresholdEvaluation {
    double threshold = 0.0;
    ConfusionCounts counts;
};

/// Fixed-threshold classifier: every post-training exceedance opens a
/// positive window. Scores one threshold over all entities.
ThresholdEvaluation evaluate_threshold(std::span<const EntitySeries> transformed, std::size_t training,
                                       double threshold, const WindowConfig& window);

/// Threshold maximizing pooled F1 over all distinct post-training values.
ThresholdEvaluation best_threshold_classifier(std::span<const EntitySeries> transformed, std::size_t training,
                                              const WindowConfig& window);

// ----------------------------------------------------- synthetic cohort

struct SyntheticCohortConfig {
    std::size_t entities = 200;
    std::size_t length = 150;
    std::size_t training = 100;
    double positive_fraction = 0.05;
    std::size_t shift_days = 10;
    double shift = 2.0;             // logit-scale level shift
    double baseline_mean = -3.0;    // mean of the per-entity logit baseline
    double baseline_sd = 1.0;
    double noise_sd = 0.5;
    KernelSpec kernel{KernelFamily::Matern12, 12.0, 0.1};
    std::uint64_t seed = 1;
};

/// Daily probability sequences with per-entity baselines; a fraction of
/// entities carry one positive-labelled level shift after the training part.
std::vector<EntitySeries> synthetic_cohort(const SyntheticCohortConfig& config);

}  // namespace skfcpd
