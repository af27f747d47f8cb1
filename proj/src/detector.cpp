#include "skfcpd/detector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skfcpd/errors.hpp"

namespace skfcpd {

HazardFunction HazardFunction::constant(double h) {
    if (!(h > 0.0) || !(h < 1.0)) throw InvalidParameter("constant hazard must lie in (0, 1)");
    HazardFunction out;
    out.constant_ = h;
    return out;
}

HazardFunction HazardFunction::series(std::vector<double> times, std::vector<double> values) {
    if (times.size() != values.size()) throw InvalidInput("hazard times and values differ in length");
    if (times.empty()) throw InvalidInput("hazard series is empty");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (k > 0 && !(times[k] > times[k - 1])) throw InvalidInput("hazard times must be strictly increasing");
        if (!(values[k] >= 0.0 && values[k] <= 1.0)) throw InvalidInput("hazard values must lie in [0, 1]");
    }
    HazardFunction out;
    out.times_ = std::move(times);
    out.values_ = std::move(values);
    return out;
}

double HazardFunction::at(double t) const {
    double h = constant_;
    if (!times_.empty()) {
        auto it = std::lower_bound(times_.begin(), times_.end(), t - 1e-9);
        if (it == times_.end() || std::abs(*it - t) > 1e-9) {
            throw InvalidInput("hazard series has no value at time " + std::to_string(t));
        }
        h = values_[static_cast<std::size_t>(it - times_.begin())];
    }
    return std::clamp(h, kMin, kMax);
}

RunResult run(OnlineDetector& detector, std::span<const double> times, std::span<const double> values,
              const RunOptions& options) {
    if (times.size() != values.size()) throw InvalidInput("times and values differ in length");
    RunResult out;
    if (options.keep_map_path) out.map_path.reserve(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        auto event = detector.step(times[k], values[k]);
        if (options.keep_map_path) out.map_path.push_back(detector.map_index());
        if (event) {
            if (std::find(out.changepoints.begin(), out.changepoints.end(), event->changepoint) ==
                out.changepoints.end()) {
                out.changepoints.push_back(event->changepoint);
            }
            out.events.push_back(std::move(*event));
            if (options.stop_at_first_detection) break;
        }
    }
    std::sort(out.changepoints.begin(), out.changepoints.end());
    return out;
}

}  // namespace skfcpd
