#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "skfcpd/segmentation.hpp"

namespace skfcpd {

enum class KernelFamily { Matern12, Matern52 };

std::string to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

/// Stationary correlation model of one segment: Matern family, range and
/// nugget (noise-to-signal variance ratio).
struct KernelSpec {
    KernelFamily family = KernelFamily::Matern12;
    double range = 1.0;
    double nugget = 0.0;

    void validate() const;
    int state_dim() const { return family == KernelFamily::Matern12 ? 1 : 3; }
    /// Unit-variance correlation at lag |d|, without the nugget.
    double correlation(double d) const;
};

/// Strictly increasing observation times; spacing may be irregular.
class TimeGrid {
public:
    static constexpr double kMinSpacing = 1e-9;

    TimeGrid() = default;
    explicit TimeGrid(std::vector<double> times);

    /// t_k = start + k * step for k = 0..n-1.
    static TimeGrid regular(std::size_t n, double start = 1.0, double step = 1.0);

    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }
    double operator[](std::size_t k) const { return times_[k]; }
    std::span<const double> times() const { return times_; }
    /// t_k - t_{k-1}, for k >= 1.
    double spacing(std::size_t k) const { return times_[k] - times_[k - 1]; }
    TimeGrid slice(std::size_t first, std::size_t count) const;

private:
    std::vector<double> times_;
};

// State vectors are stored at the largest supported dimension; Matern-1/2
// only uses the leading entry.
using StateVector = Eigen::Vector3d;
using StateMatrix = Eigen::Matrix3d;

/// One step of the latent-state recursion theta_k = G theta_{k-1} + w_k.
struct Transition {
    StateMatrix G = StateMatrix::Zero();
    StateMatrix W = StateMatrix::Zero();
};

/// Observation side of the DLM: y_k = F theta_k + noise with F = e_1.
struct ObservationModel {
    int state_dim = 1;
    StateMatrix initial_cov = StateMatrix::Zero();
    double nugget = 0.0;
};

/// State-space realization of a kernel on a specific grid, unit signal
/// variance. transitions[k] maps the state at grid point k to k + 1.
struct DlmSystem {
    ObservationModel observation;
    std::vector<Transition> transitions;

    std::size_t size() const { return transitions.size() + 1; }
};

/// Stationary covariance of the latent state (B_0 of the DLM).
StateMatrix stationary_covariance(const KernelSpec& kernel);

/// Exact discretization of the latent process over a gap of length `spacing`.
Transition transition(const KernelSpec& kernel, double spacing);

ObservationModel observation_model(const KernelSpec& kernel);

DlmSystem build_dlm(const KernelSpec& kernel, const TimeGrid& grid);

/// K = R + eta I on the grid.
Eigen::MatrixXd dense_covariance(const KernelSpec& kernel, const TimeGrid& grid);

/// Generative model of one segment.
struct GpSegmentModel {
    double mean = 0.0;
    double signal_variance = 1.0;
    KernelSpec kernel;

    void validate() const;
};

/// Draw from MN(mean 1, signal_variance K) by dense Cholesky.
std::vector<double> sample_gp(const GpSegmentModel& model, const TimeGrid& grid, std::mt19937_64& rng);

enum class ShiftKind { Mean, Variance, Range };

std::string to_string(ShiftKind kind);
ShiftKind parse_shift_kind(std::string_view name);

/// Piecewise GP scenario. Segments alternate pre, post, pre, ... and are
/// sampled independently of one another.
struct Scenario {
    ShiftKind shift = ShiftKind::Mean;
    GpSegmentModel pre;
    GpSegmentModel post;
    std::vector<std::size_t> changepoints;
    TimeGrid grid;
};

struct SimulatedSeries {
    std::vector<double> values;
    Segmentation truth;
};

SimulatedSeries simulate_scenario(const Scenario& scenario, std::uint64_t seed);

/// Stable per-replicate seed derivation (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

}  // namespace skfcpd
