#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "skfcpd/detector.hpp"

namespace skfcpd {

/// Normal-inverse-gamma hyperparameters for i.i.d. Gaussian segments.
struct NigParams {
    double mean = 0.0;
    double kappa = 1.0;
    double alpha = 1.0;
    double beta = 1.0;

    void validate() const;
    /// Prior centred on a training window: (mean, 1, 1, sample variance).
    static NigParams from_training(std::span<const double> values);

    NigParams updated(double y) const;
    /// Student-t predictive of the next observation.
    double log_predictive(double y) const;
};

struct BocpdConfig {
    HazardFunction hazard = HazardFunction::constant(0.01);
    NigParams prior;
    std::size_t min_segment_for_report = 2;
    bool truncate_at_detection = true;
    std::size_t warmup = 0;
};

/// Bayesian online changepoint detection with i.i.d. Gaussian segments,
/// same candidate bookkeeping and detection rule as SkfDetector.
class BocpdDetector final : public OnlineDetector {
public:
    explicit BocpdDetector(BocpdConfig config);

    std::optional<DetectionEvent> step(double t, double y) override;
    std::size_t map_index() const override { return map_; }
    std::size_t steps() const override { return steps_; }
    std::string name() const override { return "bocpd"; }

    ChangepointPosterior posterior() const;
    /// Posterior hyperparameters of the candidate starting at `index`.
    std::optional<NigParams> candidate_params(std::size_t index) const;

private:
    struct Candidate {
        std::size_t start;
        double time;
        double log_stay;
        double log_joint;
        NigParams params;  // posterior given the candidate's data so far
    };

    void renormalize();
    std::size_t select_map() const;

    BocpdConfig config_;
    std::vector<Candidate> candidates_;
    std::size_t steps_ = 0;
    std::size_t map_ = 0;
    double last_time_ = 0.0;
};

struct CusumConfig {
    double drift = 0.5;
    double threshold = 4.0;
    double mean = 0.0;
    double sd = 1.0;
    std::size_t warmup = 0;

    void validate() const;
    /// Standardization from a training window (sample mean and sd).
    static CusumConfig from_training(std::span<const double> values, double drift, double threshold);
};

/// Two-sided Gaussian CUSUM on standardized observations. An alarm fires when
/// max(S+, S-) reaches the threshold; both statistics then reset to zero.
class CusumDetector final : public OnlineDetector {
public:
    explicit CusumDetector(CusumConfig config);

    std::optional<DetectionEvent> step(double t, double y) override;
    std::size_t map_index() const override { return last_changepoint_; }
    std::size_t steps() const override { return steps_; }
    std::string name() const override { return "cusum"; }

    double upper() const { return upper_; }
    double lower() const { return lower_; }

private:
    CusumConfig config_;
    double upper_ = 0.0;
    double lower_ = 0.0;
    std::size_t upper_zero_at_ = 0;  // last step at which S+ was zero
    std::size_t lower_zero_at_ = 0;
    std::size_t steps_ = 0;
    std::size_t last_changepoint_ = 1;
    double last_time_ = 0.0;
};

}  // namespace skfcpd
