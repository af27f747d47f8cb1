#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace skfcpd {

// Minimizes objective(x, y). Non-finite values are treated as +inf.
template <typename F>
SimplexResult nelder_mead_2d(F&& objective, double x0, double y0, double step, double tolerance,
                             int max_iterations) {
    struct Vertex {
        double x, y, f;
    };
    auto eval = [&](double x, double y) {
        const double v = objective(x, y);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    std::array<Vertex, 3> s{{{x0, y0, 0.0}, {x0 + step, y0, 0.0}, {x0, y0 + step, 0.0}}};
    for (auto& v : s) v.f = eval(v.x, v.y);

    SimplexResult out;
    for (int it = 0; it < max_iterations; ++it) {
        std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
        const double diameter = std::max(std::hypot(s[1].x - s[0].x, s[1].y - s[0].y),
                                         std::hypot(s[2].x - s[0].x, s[2].y - s[0].y));
        out.iterations = it;
        if (diameter < tolerance) {
            out.converged = true;
            break;
        }
        const double cx = 0.5 * (s[0].x + s[1].x);
        const double cy = 0.5 * (s[0].y + s[1].y);
        const Vertex r{2.0 * cx - s[2].x, 2.0 * cy - s[2].y, 0.0};
        const double fr = eval(r.x, r.y);
        if (fr < s[0].f) {
            const double ex = 3.0 * cx - 2.0 * s[2].x;
            const double ey = 3.0 * cy - 2.0 * s[2].y;
            const double fe = eval(ex, ey);
            s[2] = fe < fr ? Vertex{ex, ey, fe} : Vertex{r.x, r.y, fr};
            continue;
        }
        if (fr < s[1].f) {
            s[2] = {r.x, r.y, fr};
            continue;
        }
        // Contraction, outside if the reflection improved on the worst point.
        const bool outside = fr < s[2].f;
        const double kx = outside ? 0.5 * (cx + r.x) : 0.5 * (cx + s[2].x);
        const double ky = outside ? 0.5 * (cy + r.y) : 0.5 * (cy + s[2].y);
        const double fk = eval(kx, ky);
        if (fk < std::min(fr, s[2].f)) {
            s[2] = {kx, ky, fk};
            continue;
        }
        for (int k = 1; k < 3; ++k) {
            s[k].x = 0.5 * (s[0].x + s[k].x);
            s[k].y = 0.5 * (s[0].y + s[k].y);
            s[k].f = eval(s[k].x, s[k].y);
        }
    }
    const auto best = std::min_element(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    out.x = best->x;
    out.y = best->y;
    out.value = best->f;
    return out;
}

}  // namespace skfcpd
