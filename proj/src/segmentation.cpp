#include "skfcpd/segmentation.hpp"

#include <algorithm>
#include <string>

#include "skfcpd/errors.hpp"

namespace skfcpd {

Segmentation::Segmentation(std::size_t n, std::vector<std::size_t> changepoints)
    : n_(n), changepoints_(std::move(changepoints)) {
    if (n_ == 0) throw InvalidInput("segmentation length must be positive");
    std::size_t prev = 1;
    for (std::size_t c : changepoints_) {
        if (c <= prev || c > n_) {
            throw InvalidInput("changepoints must be strictly increasing within 2..n (got " + std::to_string(c) +
                               ")");
        }
        prev = c;
    }
}

Segmentation Segmentation::from_detections(std::size_t n, std::vector<std::size_t> changepoints) {
    std::sort(changepoints.begin(), changepoints.end());
    changepoints.erase(std::unique(changepoints.begin(), changepoints.end()), changepoints.end());
    std::erase_if(changepoints, [n](std::size_t c) { return c < 2 || c > n; });
    return Segmentation(n, std::move(changepoints));
}

std::vector<std::pair<std::size_t, std::size_t>> Segmentation::segments() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(changepoints_.size() + 1);
    std::size_t first = 1;
    for (std::size_t c : changepoints_) {
        out.emplace_back(first, c - 1);
        first = c;
    }
    out.emplace_back(first, n_);
    return out;
}

}  // namespace skfcpd
