#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "skfcpd/errors.hpp"
#include "skfcpd/estimation.hpp"
#include "skfcpd/evaluation.hpp"
#include "skfcpd/pipeline.hpp"
#include "skfcpd/skf_detector.hpp"
#include "skfcpd/whitener.hpp"

namespace py = pybind11;
using namespace skfcpd;

namespace {

HazardFunction make_hazard(double hazard, const std::optional<std::vector<double>>& hazard_times,
                           const std::optional<std::vector<double>>& hazard_values) {
    if (hazard_times.has_value() != hazard_values.has_value()) {
        throw InvalidParameter("hazard_times and hazard_values go together");
    }
    if (hazard_times) return HazardFunction::series(*hazard_times, *hazard_values);
    return HazardFunction::constant(hazard);
}

DetectorConfig make_config(const KernelSpec& kernel, double hazard, const std::optional<std::vector<double>>& ht,
                           const std::optional<std::vector<double>>& hv, std::size_t min_segment, bool truncate,
                           std::size_t warmup) {
    DetectorConfig cfg;
    cfg.kernel = kernel;
    cfg.hazard = make_hazard(hazard, ht, hv);
    cfg.min_segment_for_report = min_segment;
    cfg.truncate_at_detection = truncate;
    cfg.warmup = warmup;
    return cfg;
}

struct SegmentSums {
    double s_uu, s_vv, s_uv, log_det;
    std::size_t length;
};

}  // namespace

PYBIND11_MODULE(_skfcpd, m) {
    m.doc() = "Kalman-whitened online changepoint detection";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidParameter>(m, "InvalidParameter", base.ptr());
    py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
    py::register_exception<InvalidGrid>(m, "InvalidGrid", base.ptr());
    py::register_exception<ConditioningError>(m, "ConditioningError", base.ptr());
    py::register_exception<EstimationFailed>(m, "EstimationFailed", base.ptr());
    py::register_exception<CalibrationFailed>(m, "CalibrationFailed", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());

    py::enum_<KernelFamily>(m, "KernelFamily")
        .value("MATERN12", KernelFamily::Matern12)
        .value("MATERN52", KernelFamily::Matern52);

    py::class_<KernelSpec>(m, "KernelSpec")
        .def(py::init([](const std::string& family, double range, double nugget) {
                 KernelSpec k{parse_kernel_family(family), range, nugget};
                 k.validate();
                 return k;
             }),
             py::arg("family") = "matern12", py::arg("range") = 1.0, py::arg("nugget") = 0.0)
        .def_readwrite("family", &KernelSpec::family)
        .def_readwrite("range", &KernelSpec::range)
        .def_readwrite("nugget", &KernelSpec::nugget)
        .def("correlation", &KernelSpec::correlation, py::arg("lag"))
        .def("__repr__", [](const KernelSpec& k) {
            return "KernelSpec(" + to_string(k.family) + ", range=" + std::to_string(k.range) +
                   ", nugget=" + std::to_string(k.nugget) + ")";
        });

    py::class_<ChangepointPosterior>(m, "ChangepointPosterior")
        .def_readonly("step", &ChangepointPosterior::step)
        .def_readonly("candidates", &ChangepointPosterior::candidates)
        .def_readonly("candidate_times", &ChangepointPosterior::candidate_times)
        .def_readonly("log_joint", &ChangepointPosterior::log_joint)
        .def_readonly("weights", &ChangepointPosterior::weights)
        .def_readonly("map_index", &ChangepointPosterior::map_index)
        .def_readonly("map_weight", &ChangepointPosterior::map_weight)
        .def_property_readonly("run_length", &ChangepointPosterior::run_length);

    py::class_<DetectionEvent>(m, "DetectionEvent")
        .def_readonly("step", &DetectionEvent::step)
        .def_readonly("time", &DetectionEvent::time)
        .def_readonly("changepoint", &DetectionEvent::changepoint)
        .def_readonly("changepoint_time", &DetectionEvent::changepoint_time)
        .def_readonly("map_weight", &DetectionEvent::map_weight);

    py::class_<SkfDetector>(m, "Detector")
        .def(py::init([](const KernelSpec& kernel, double hazard, std::optional<std::vector<double>> hazard_times,
                         std::optional<std::vector<double>> hazard_values, std::size_t min_segment, bool truncate,
                         std::size_t warmup) {
                 return SkfDetector(make_config(kernel, hazard, hazard_times, hazard_values, min_segment, truncate, warmup));
             }),
             py::arg("kernel"), py::arg("hazard") = 0.01, py::arg("hazard_times") = py::none(),
             py::arg("hazard_values") = py::none(), py::arg("min_segment") = 2, py::arg("truncate") = true,
             py::arg("warmup") = 0)
        .def("step", &SkfDetector::step, py::arg("t"), py::arg("y"),
             "Feed one observation; returns a DetectionEvent when the MAP changepoint moves.")
        .def("posterior", &SkfDetector::posterior)
        .def_property_readonly("map_index", &SkfDetector::map_index)
        .def_property_readonly("steps", &SkfDetector::steps)
        .def_property_readonly("live_candidates", &SkfDetector::live_candidates)
        .def_property_readonly("log_evidence", &SkfDetector::log_evidence);

    m.def(
        "detect",
        [](const std::vector<double>& times, const std::vector<double>& values, const KernelSpec& kernel, double hazard,
           std::optional<std::vector<double>> hazard_times, std::optional<std::vector<double>> hazard_values,
           std::size_t min_segment, bool truncate, std::size_t warmup) {
            if (times.size() != values.size()) throw InvalidInput("times and values differ in length");
            SkfDetector det(make_config(kernel, hazard, hazard_times, hazard_values, min_segment, truncate, warmup));
            std::vector<DetectionEvent> events;
            for (std::size_t k = 0; k < times.size(); ++k) {
                if (auto e = det.step(times[k], values[k])) events.push_back(*e);
            }
            return events;
        },
        py::arg("times"), py::arg("values"), py::arg("kernel"), py::arg("hazard") = 0.01,
        py::arg("hazard_times") = py::none(), py::arg("hazard_values") = py::none(), py::arg("min_segment") = 2,
        py::arg("truncate") = true, py::arg("warmup") = 0, "Run the detector over a whole series.");

    py::class_<SegmentSums>(m, "SegmentSums")
        .def_readonly("s_uu", &SegmentSums::s_uu)
        .def_readonly("s_vv", &SegmentSums::s_vv)
        .def_readonly("s_uv", &SegmentSums::s_uv)
        .def_readonly("log_det", &SegmentSums::log_det)
        .def_readonly("length", &SegmentSums::length);

    m.def(
        "segment_sums",
        [](const KernelSpec& kernel, const std::vector<double>& times, const std::vector<double>& values) {
            const SegmentAccumulator acc = whiten(build_dlm(kernel, TimeGrid(times)), values);
            return SegmentSums{acc.s_uu, acc.raw_s_vv(), acc.raw_s_uv(), acc.log_det, acc.length};
        },
        py::arg("kernel"), py::arg("times"), py::arg("values"),
        "1'K^-1 1, y'K^-1 y, y'K^-1 1 and log|K| of one segment via Kalman whitening.");

    m.def(
        "dense_covariance",
        [](const KernelSpec& kernel, const std::vector<double>& times) { return dense_covariance(kernel, TimeGrid(times)); },
        py::arg("kernel"), py::arg("times"));

    py::class_<EstimationResult>(m, "EstimationResult")
        .def_readonly("range", &EstimationResult::range)
        .def_readonly("nugget", &EstimationResult::nugget)
        .def_readonly("loglik", &EstimationResult::loglik)
        .def_readonly("converged", &EstimationResult::converged)
        .def_readonly("iterations", &EstimationResult::iterations)
        .def_readonly("range_at_bound", &EstimationResult::range_at_bound)
        .def_readonly("nugget_at_bound", &EstimationResult::nugget_at_bound);

    auto to_set = [](const std::vector<std::vector<double>>& times, const std::vector<std::vector<double>>& values) {
        if (times.size() != values.size()) throw InvalidInput("times and values differ in length");
        TrainingSet set;
        for (std::size_t s = 0; s < times.size(); ++s) set.series.push_back({TimeGrid(times[s]), values[s]});
        return set;
    };

    m.def(
        "integrated_marginal_loglik",
        [to_set](const KernelSpec& kernel, const std::vector<std::vector<double>>& times,
                 const std::vector<std::vector<double>>& values) {
            return integrated_marginal_loglik(kernel, to_set(times, values));
        },
        py::arg("kernel"), py::arg("times"), py::arg("values"));

    m.def(
        "estimate",
        [to_set](const std::vector<std::vector<double>>& times, const std::vector<std::vector<double>>& values,
                 const std::string& family) {
            EstimatorSettings s;
            s.family = parse_kernel_family(family);
            return estimate(to_set(times, values), s);
        },
        py::arg("times"), py::arg("values"), py::arg("family") = "matern12",
        "Maximum integrated-likelihood (range, nugget) over change-free training series.");

    m.def(
        "covering",
        [](std::size_t n, std::vector<std::size_t> truth, std::vector<std::size_t> detected) {
            return covering(Segmentation(n, std::move(truth)), Segmentation::from_detections(n, std::move(detected)));
        },
        py::arg("n"), py::arg("truth"), py::arg("detected"),
        "Covering of the true segmentation by the detected one (1-based changepoint indices).");

    py::class_<ScreeningResult>(m, "ScreeningResult")
        .def_readonly("passed", &ScreeningResult::pass)
        .def_readonly("statistic", &ScreeningResult::statistic)
        .def_readonly("critical", &ScreeningResult::critical)
        .def_readonly("df", &ScreeningResult::df)
        .def_readonly("mean_pre", &ScreeningResult::mean_pre)
        .def_readonly("mean_post", &ScreeningResult::mean_post)
        .def_readonly("diagnostic", &ScreeningResult::diagnostic);

    m.def(
        "screening_test",
        [](const std::vector<double>& pre_times, const std::vector<double>& pre_values,
           const std::vector<double>& post_times, const std::vector<double>& post_values, const KernelSpec& kernel,
           double alpha) { return screening_test(pre_times, pre_values, post_times, post_values, kernel, alpha); },
        py::arg("pre_times"), py::arg("pre_values"), py::arg("post_times"),
          py::arg("post_values"), py::arg("kernel"), py::arg("alpha") = 0.05);

    m.def(
        "logit_transform", [](const std::vector<double>& p) { return logit_transform(p); }, py::arg("probabilities"));
}
