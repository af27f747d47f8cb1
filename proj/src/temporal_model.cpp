#include "skfcpd/temporal_model.hpp"

#include <algorithm>
#include <cmath>

#include "skfcpd/errors.hpp"

namespace skfcpd {

namespace {

double matern52_rate(double range) { return std::sqrt(5.0) / range; }

}  // namespace

std::string to_string(KernelFamily family) {
    return family == KernelFamily::Matern12 ? "matern12" : "matern52";
}

KernelFamily parse_kernel_family(std::string_view name) {
    if (name == "matern12" || name == "exponential" || name == "exp") return KernelFamily::Matern12;
    if (name == "matern52") return KernelFamily::Matern52;
    throw InvalidParameter("unknown kernel family '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
    if (!(range > 0.0) || !std::isfinite(range)) {
        throw InvalidParameter("kernel range must be positive and finite");
    }
    if (!(nugget >= 0.0) || !std::isfinite(nugget)) {
        throw InvalidParameter("kernel nugget must be nonnegative and finite");
    }
}

double KernelSpec::correlation(double d) const {
    const double a = std::abs(d);
    if (family == KernelFamily::Matern12) return std::exp(-a / range);
    const double x = matern52_rate(range) * a;
    return (1.0 + x + x * x / 3.0) * std::exp(-x);
}

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    for (std::size_t k = 0; k < times_.size(); ++k) {
        if (!std::isfinite(times_[k])) throw InvalidGrid("time grid contains a non-finite value");
        if (k > 0 && !(times_[k] - times_[k - 1] >= kMinSpacing)) {
            throw InvalidGrid("time grid must be strictly increasing with spacing >= 1e-9 (index " +
                              std::to_string(k) + ")");
        }
    }
}

TimeGrid TimeGrid::regular(std::size_t n, double start, double step) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = start + step * static_cast<double>(k);
    return TimeGrid(std::move(t));
}

TimeGrid TimeGrid::slice(std::size_t first, std::size_t count) const {
    if (first + count > times_.size()) throw InvalidInput("time grid slice out of range");
    return TimeGrid(std::vector<double>(times_.begin() + static_cast<std::ptrdiff_t>(first),
                                        times_.begin() + static_cast<std::ptrdiff_t>(first + count)));
}

StateMatrix stationary_covariance(const KernelSpec& kernel) {
    StateMatrix p = StateMatrix::Zero();
    if (kernel.family == KernelFamily::Matern12) {
        p(0, 0) = 1.0;
        return p;
    }
    // Covariance of (f, f', f'') for the unit-variance Matern-5/2 process.
    const double lam = matern52_rate(kernel.range);
    const double k2 = lam * lam / 3.0;
    p << 1.0, 0.0, -k2,
         0.0, k2, 0.0,
         -k2, 0.0, lam * lam * lam * lam;
    return p;
}

Transition transition(const KernelSpec& kernel, double spacing) {
    if (!(spacing > 0.0)) throw InvalidGrid("transition spacing must be positive");
    Transition tr;
    if (kernel.family == KernelFamily::Matern12) {
        tr.G(0, 0) = std::exp(-spacing / kernel.range);
        tr.W(0, 0) = -std::expm1(-2.0 * spacing / kernel.range);
        return tr;
    }
    // The companion matrix A of (lambda + D)^3 satisfies (A + lambda I)^3 = 0,
    // so exp(A d) = exp(-lambda d) (I + d N + d^2 N^2 / 2) with N = A + lambda I.
    const double lam = matern52_rate(kernel.range);
    StateMatrix n;
    n << lam, 1.0, 0.0,
         0.0, lam, 1.0,
         -lam * lam * lam, -3.0 * lam * lam, -2.0 * lam;
    const double d = spacing;
    tr.G = std::exp(-lam * d) * (StateMatrix::Identity() + d * n + 0.5 * d * d * (n * n));
    const StateMatrix p = stationary_covariance(kernel);
    StateMatrix w = p - tr.G * p * tr.G.transpose();
    tr.W = 0.5 * (w + w.transpose());
    return tr;
}

ObservationModel observation_model(const KernelSpec& kernel) {
    kernel.validate();
    ObservationModel obs;
    obs.state_dim = kernel.state_dim();
    obs.initial_cov = stationary_covariance(kernel);
    obs.nugget = kernel.nugget;
    return obs;
}

DlmSystem build_dlm(const KernelSpec& kernel, const TimeGrid& grid) {
    kernel.validate();
    if (grid.empty()) throw InvalidGrid("time grid is empty");
    DlmSystem sys;
    sys.observation = observation_model(kernel);
    sys.transitions.reserve(grid.size() - 1);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        sys.transitions.push_back(transition(kernel, grid.spacing(k)));
    }
    return sys;
}

Eigen::MatrixXd dense_covariance(const KernelSpec& kernel, const TimeGrid& grid) {
    kernel.validate();
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        k(a, a) = 1.0 + kernel.nugget;
        for (Eigen::Index b = 0; b < a; ++b) {
            const double c = kernel.correlation(grid[static_cast<std::size_t>(a)] - grid[static_cast<std::size_t>(b)]);
            k(a, b) = c;
            k(b, a) = c;
        }
    }
    return k;
}

void GpSegmentModel::validate() const {
    kernel.validate();
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
        throw InvalidParameter("signal variance must be positive");
    }
    if (!std::isfinite(mean)) throw InvalidParameter("segment mean must be finite");
}

std::vector<double> sample_gp(const GpSegmentModel& model, const TimeGrid& grid, std::mt19937_64& rng) {
    model.validate();
    if (grid.empty()) return {};
    const Eigen::MatrixXd k = model.signal_variance * dense_covariance(model.kernel, grid);
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) {
        throw ConditioningError("Cholesky factorization of the GP covariance failed");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(static_cast<Eigen::Index>(grid.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    const Eigen::VectorXd draw = llt.matrixL() * z;
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = model.mean + draw(static_cast<Eigen::Index>(i));
    return out;
}

std::string to_string(ShiftKind kind) {
    switch (kind) {
        case ShiftKind::Mean: return "mean";
        case ShiftKind::Variance: return "variance";
        case ShiftKind::Range: return "range";
    }
    return "mean";
}

ShiftKind parse_shift_kind(std::string_view name) {
    if (name == "mean" || name == "mean-shift") return ShiftKind::Mean;
    if (name == "variance" || name == "variance-shift") return ShiftKind::Variance;
    if (name == "range" || name == "range-shift" || name == "correlation") return ShiftKind::Range;
    throw InvalidParameter("unknown shift kind '" + std::string(name) + "'");
}

SimulatedSeries simulate_scenario(const Scenario& scenario, std::uint64_t seed) {
    const std::size_t n = scenario.grid.size();
    Segmentation truth(n, scenario.changepoints);  // validates indices
    scenario.pre.validate();
    scenario.post.validate();

    std::mt19937_64 rng(seed);
    SimulatedSeries out;
    out.values.reserve(n);
    std::size_t seg_no = 0;
    for (const auto& [first, last] : truth.segments()) {
        const GpSegmentModel& model = (seg_no % 2 == 0) ? scenario.pre : scenario.post;
        const auto part = sample_gp(model, scenario.grid.slice(first - 1, last - first + 1), rng);
        out.values.insert(out.values.end(), part.begin(), part.end());
        ++seg_no;
    }
    out.truth = std::move(truth);
    return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(master) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

}  // namespace skfcpd
