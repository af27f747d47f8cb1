#include "skfcpd/whitener.hpp"

#include <cmath>
#include <string>

#include "skfcpd/errors.hpp"

namespace skfcpd {

namespace {

[[noreturn, gnu::cold, gnu::noinline]] void throw_pred_var(double q) {
    throw ConditioningError("one-step predictive variance " + std::to_string(q) + " is below the floor");
}

inline void check_pred_var(double q) {
    if (!(q >= kPredictiveVarianceFloor)) [[unlikely]] throw_pred_var(q);
}

void accumulate(SegmentAccumulator& acc, double q, double u, double v) {
    acc.pred_var = q;
    acc.last_u = u;
    acc.last_v = v;
    acc.s_uu += u * u;
    acc.s_vv += v * v;
    acc.s_uv += u * v;
    acc.log_det += std::log(q);
    ++acc.length;
}

// bb = G C G' + W for symmetric C, filled symmetrically.
void predict_covariance(const Transition& tr, const StateMatrix& cov, StateMatrix& bb) {
    StateMatrix gc;
    gc.noalias() = tr.G * cov;
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            bb(i, j) = bb(j, i) = gc(i, 0) * tr.G(j, 0) + gc(i, 1) * tr.G(j, 1) + gc(i, 2) * tr.G(j, 2) + tr.W(i, j);
        }
    }
}

}  // namespace

SegmentAccumulator init_segment(const ObservationModel& model, std::size_t start, double y) {
    if (!std::isfinite(y)) throw InvalidInput("a segment must start at an observed value");
    SegmentAccumulator acc;
    acc.start = start;
    acc.state_dim = model.state_dim;
    acc.nugget = model.nugget;
    acc.shift = y;

    // Prior predictive: f = 0, Q = F B0 F' + eta. The centered datum is 0.
    const StateMatrix& b = model.initial_cov;
    const double q = b(0, 0) + model.nugget;
    check_pred_var(q);
    const double sq = std::sqrt(q);
    acc.ones.predicted = 0.0;
    acc.data.predicted = 0.0;

    if (acc.state_dim == 1) {
        const double gain = b(0, 0) / q;
        acc.ones.mean(0) = gain;
        acc.data.mean(0) = 0.0;
        acc.cov(0, 0) = b(0, 0) * model.nugget / q;
    } else {
        const StateVector gain = b.col(0) / q;
        acc.ones.mean = gain;
        acc.data.mean.setZero();
        StateMatrix a = StateMatrix::Identity();
        a.col(0) -= gain;
        acc.cov = a * b * a.transpose() + model.nugget * gain * gain.transpose();
    }
    accumulate(acc, q, 1.0 / sq, 0.0);
    return acc;
}

void advance(SegmentAccumulator& acc, const Transition& tr, double y) {
    const bool observed = std::isfinite(y);
    if (acc.state_dim == 1) {
        const double g = tr.G(0, 0);
        const double bu = g * acc.ones.mean(0);
        const double bv = g * acc.data.mean(0);
        const double bb = g * g * acc.cov(0, 0) + tr.W(0, 0);
        if (!observed) {
            acc.ones.mean(0) = bu;
            acc.data.mean(0) = bv;
            acc.cov(0, 0) = bb;
            return;
        }
        const double q = bb + acc.nugget;
        check_pred_var(q);
        const double sq = std::sqrt(q);
        const double eu = 1.0 - bu;
        const double ev = (y - acc.shift) - bv;
        const double gain = bb / q;
        acc.ones.predicted = bu;
        acc.data.predicted = bv;
        acc.ones.mean(0) = bu + gain * eu;
        acc.data.mean(0) = bv + gain * ev;
        acc.cov(0, 0) = bb * acc.nugget / q;
        accumulate(acc, q, eu / sq, ev / sq);
        return;
    }

    const StateVector bu = tr.G * acc.ones.mean;
    const StateVector bv = tr.G * acc.data.mean;
    StateMatrix bb;
    predict_covariance(tr, acc.cov, bb);
    if (!observed) {
        acc.ones.mean = bu;
        acc.data.mean = bv;
        acc.cov = bb;
        return;
    }
    const double q = bb(0, 0) + acc.nugget;
    check_pred_var(q);
    const double sq = std::sqrt(q);
    const double eu = 1.0 - bu(0);
    const double ev = (y - acc.shift) - bv(0);
    const StateVector gain = bb.col(0) / q;
    acc.ones.predicted = bu(0);
    acc.data.predicted = bv(0);
    acc.ones.mean = bu + gain * eu;
    acc.data.mean = bv + gain * ev;
    // Joseph form with the unit observation row reduces to bb - c c'/q with
    // c the first column of bb; filled symmetrically.
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) acc.cov(i, j) = acc.cov(j, i) = bb(i, j) - gain(i) * bb(j, 0);
    }
    accumulate(acc, q, eu / sq, ev / sq);
}

double quadratic_form(const SegmentAccumulator& acc) {
    const double q = acc.s_vv - acc.s_uv * acc.s_uv / acc.s_uu;
    return q > 0.0 ? q : 0.0;
}

SegmentAccumulator whiten(const DlmSystem& system, std::span<const double> values, std::size_t start) {
    if (values.empty()) throw InvalidInput("cannot whiten an empty segment");
    if (values.size() != system.size()) throw InvalidInput("segment length does not match the DLM grid");
    SegmentAccumulator acc = init_segment(system.observation, start, values[0]);
    for (std::size_t k = 1; k < values.size(); ++k) advance(acc, system.transitions[k - 1], values[k]);
    return acc;
}

}  // namespace skfcpd
