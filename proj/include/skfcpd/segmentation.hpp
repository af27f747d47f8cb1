#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace skfcpd {

/// Partition of observation indices 1..n into contiguous segments.
///
/// A changepoint is the 1-based index of the first observation of a new
/// segment, so valid changepoints lie in 2..n and are strictly increasing.
class Segmentation {
public:
    Segmentation() = default;
    Segmentation(std::size_t n, std::vector<std::size_t> changepoints);

    /// Builds a segmentation from an unsorted list that may contain
    /// duplicates or out-of-range indices; those are dropped.
    static Segmentation from_detections(std::size_t n, std::vector<std::size_t> changepoints);

    std::size_t size() const { return n_; }
    const std::vector<std::size_t>& changepoints() const { return changepoints_; }

    /// Inclusive [first, last] index pairs, one per segment.
    std::vector<std::pair<std::size_t, std::size_t>> segments() const;

    bool operator==(const Segmentation&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> changepoints_;
};

}  // namespace skfcpd
