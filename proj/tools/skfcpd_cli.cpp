#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "skfcpd/errors.hpp"
#include "skfcpd/evaluation.hpp"
#include "skfcpd/pipeline.hpp"
#include "skfcpd/skf_detector.hpp"

namespace {

using namespace skfcpd;
using json = nlohmann::ordered_json;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------ arguments

/// Expands `--config FILE` into `--key=value` tokens placed right after the
/// subcommand, so flags given on the command line come later and win.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::optional<std::string> path;
    for (std::size_t k = 1; k < args.size(); ++k) {
        if (args[k] == "--config") {
            if (k + 1 >= args.size()) throw UsageError("--config needs a file");
            path = args[k + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(k), args.begin() + static_cast<std::ptrdiff_t>(k + 2));
            break;
        }
        if (args[k].rfind("--config=", 0) == 0) {
            path = args[k].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(k));
            break;
        }
    }
    if (!path) return args;
    std::ifstream in(*path);
    if (!in) throw UsageError("cannot open config file '" + *path + "'");
    std::vector<std::string> tokens;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw UsageError(*path + ":" + std::to_string(line_no) + ": expected key=value");
        }
        auto strip = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        tokens.push_back("--" + strip(line.substr(0, eq)) + "=" + strip(line.substr(eq + 1)));
    }
    // Subcommand is the first token that does not start with '-'.
    std::size_t at = 1;
    while (at < args.size() && args[at].rfind("-", 0) == 0) ++at;
    at = std::min(at + 1, args.size());
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), tokens.begin(), tokens.end());
    return args;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("SKFCPD_SEED")) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw UsageError("SKFCPD_SEED must be a nonnegative integer");
    }
    return 1;
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stoul(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("invalid index list '" + text + "'");
        }
    }
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) { return parse_index_list(text); }

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
}

json time_json(double t, bool iso) {
    if (iso) return format_iso_date(t);
    return t;
}

struct KernelArgs {
    std::string family = "matern12";
    std::optional<double> range;
    std::optional<double> nugget;

    void add(CLI::App* app, const std::string& default_family, const std::string& range_absent = "estimated",
             const std::string& nugget_absent = "estimated") {
        family = default_family;
        app->add_option("--kernel", family, "Kernel family: matern12 or matern52")->capture_default_str();
        app->add_option("--range", range, "Kernel range; " + range_absent + " when absent");
        app->add_option("--nugget", nugget, "Kernel nugget; " + nugget_absent + " when absent");
    }
    std::optional<KernelSpec> fixed() const {
        if (range.has_value() != nugget.has_value()) throw UsageError("--range and --nugget go together");
        if (!range) return std::nullopt;
        KernelSpec k{parse_kernel_family(family), *range, *nugget};
        k.validate();
        return k;
    }
};

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

// --------------------------------------------------------------- detect

struct DetectArgs {
    std::string input;
    KernelArgs kernel;
    double hazard = 0.01;
    std::string hazard_file;
    std::size_t train = 0;
    bool probability = false;
    bool no_truncate = false;
    std::size_t min_segment = 2;
    std::string output;
    std::string heatmap;
    std::string heatmap_entity;
};

int run_detect(const DetectArgs& a) {
    const SeriesTable table = parse_series_csv_file(a.input);
    PipelineConfig pc;
    pc.probability_input = a.probability;
    const auto entities = transform_entities(group_by_entity(table), pc);

    std::vector<std::string> warnings;
    std::vector<const EntitySeries*> usable;
    for (const auto& e : entities) {
        if (e.values.size() <= a.train) {
            warnings.push_back("entity '" + e.id + "' has no points after the training window; skipped");
            continue;
        }
        usable.push_back(&e);
    }
    std::optional<KernelSpec> kernel = a.kernel.fixed();
    bool estimated = false;
    if (!kernel) {
        if (a.train < 4) throw UsageError("give --range and --nugget, or --train >= 4 to estimate them");
        std::vector<EntitySeries> train;
        for (const auto* e : usable) train.push_back(*e);
        const auto family = parse_kernel_family(a.kernel.family);
        kernel = estimate_training_kernel(train, a.train, family).kernel(family);
        estimated = true;
    }
    const HazardFunction hazard =
        a.hazard_file.empty() ? HazardFunction::constant(a.hazard) : parse_hazard_csv_file(a.hazard_file);

    std::ofstream heat;
    if (!a.heatmap.empty()) {
        heat.open(a.heatmap, std::ios::binary);
        if (!heat) throw DataError("cannot write '" + a.heatmap + "'");
        heat << "step,candidate,weight\n";
    }
    const std::string heat_id = a.heatmap_entity.empty() && !usable.empty() ? usable.front()->id : a.heatmap_entity;

    json doc;
    json cfg;
    cfg["kernel"] = to_string(kernel->family);
    cfg["range"] = kernel->range;
    cfg["nugget"] = kernel->nugget;
    cfg["estimated"] = estimated;
    if (a.hazard_file.empty()) {
        cfg["hazard"] = a.hazard;
    } else {
        cfg["hazard"] = "series";
    }
    cfg["training"] = a.train;
    cfg["truncate"] = !a.no_truncate;
    cfg["min_segment"] = a.min_segment;
    doc["config"] = cfg;
    json ents = json::array();
    for (const EntitySeries* e : usable) {
        DetectorConfig dc;
        dc.kernel = *kernel;
        dc.hazard = hazard;
        dc.truncate_at_detection = !a.no_truncate;
        dc.min_segment_for_report = a.min_segment;
        dc.warmup = a.train;
        SkfDetector det(dc);
        json cps = json::array();
        json path = json::array();
        const bool dump = heat.is_open() && e->id == heat_id;
        for (std::size_t j = 0; j < e->values.size(); ++j) {
            if (auto ev = det.step(e->times[j], e->values[j])) {
                json c;
                c["time"] = time_json(e->times[ev->changepoint - 1], table.iso_dates);
                c["map_weight"] = ev->map_weight;
                c["screened"] = false;
                cps.push_back(c);
            }
            path.push_back(time_json(e->times[det.map_index() - 1], table.iso_dates));
            if (dump) {
                const auto post = det.posterior();
                for (std::size_t k = 0; k < post.candidates.size(); ++k) {
                    heat << (j + 1) << ',' << post.candidates[k] << ','
                         << format_metric(post.weights[k]) << '\n';
                }
            }
        }
        json je;
        je["id"] = e->id;
        je["changepoints"] = cps;
        je["windows"] = json::array();
        je["map_path"] = path;
        ents.push_back(je);
    }
    doc["entities"] = ents;
    print_warnings(warnings);
    write_text(a.output, doc.dump(2) + "\n");
    return kOk;
}

// ------------------------------------------------------------- simulate

// Simulation defaults: range 4 for Matern-5/2 and 12 for Matern-1/2, nugget 0.1.
KernelSpec simulation_kernel(const std::string& family) {
    const KernelFamily f = parse_kernel_family(family);
    return {f, f == KernelFamily::Matern52 ? 4.0 : 12.0, 0.1};
}

struct SimulateArgs {
    std::string scenario = "mean-shift";
    KernelArgs kernel;
    double post_mean = 2.0;
    double post_var = 9.0;
    double post_range = 1.0;
    std::optional<std::size_t> n;
    std::string cps = "50";
    std::size_t reps = 100;
    std::size_t entities = 200;
    std::size_t train = 100;
    double positive_fraction = 0.05;
    std::optional<std::uint64_t> seed;
    std::string output;
};

int run_simulate(const SimulateArgs& a) {
    const std::uint64_t seed = resolve_seed(a.seed);
    std::filesystem::create_directories(a.output);
    const auto dir = std::filesystem::path(a.output);
    std::ostringstream truth;

    if (a.scenario == "cohort") {
        SyntheticCohortConfig c;
        c.entities = a.entities;
        if (a.n) c.length = *a.n;
        c.training = a.train;
        c.positive_fraction = a.positive_fraction;
        c.seed = seed;
        if (auto k = a.kernel.fixed()) c.kernel = *k;
        const auto cohort = synthetic_cohort(c);
        SeriesTable table;
        table.has_labels = true;
        truth << "entity,changepoint\n";
        for (const auto& e : cohort) {
            for (std::size_t k = 0; k < e.values.size(); ++k) {
                table.records.push_back({e.id, e.times[k], e.values[k], e.labels[k]});
                if (e.labels[k] == 1 && (k == 0 || e.labels[k - 1] == 0)) truth << e.id << ',' << (k + 1) << '\n';
            }
        }
        write_text((dir / "series.csv").string(), serialize_series_csv(table));
        write_text((dir / "truth.csv").string(), truth.str());
        return kOk;
    }

    Scenario sc;
    const KernelSpec k = a.kernel.fixed().value_or(simulation_kernel(a.kernel.family));
    sc.pre = {0.0, 1.0, k};
    const std::size_t n = a.n.value_or(100);
    sc.grid = TimeGrid::regular(n);
    if (a.scenario == "no-change") {
        sc.post = sc.pre;
    } else {
        sc.shift = parse_shift_kind(a.scenario);
        const double value = sc.shift == ShiftKind::Mean ? a.post_mean : sc.shift == ShiftKind::Variance ? a.post_var : a.post_range;
        sc.post = shifted_model(sc.pre, sc.shift, value);
        sc.changepoints = parse_index_list(a.cps);
    }
    SeriesTable table;
    truth << "entity,changepoint\n";
    for (std::size_t r = 0; r < a.reps; ++r) {
        const auto sim = simulate_scenario(sc, derive_seed(seed, 4, r));
        char id[32];
        std::snprintf(id, sizeof id, "rep%04zu", r);
        for (std::size_t j = 0; j < n; ++j) table.records.push_back({id, sc.grid[j], sim.values[j], std::nullopt});
        for (std::size_t c : sim.truth.changepoints()) truth << id << ',' << c << '\n';
    }
    write_text((dir / "series.csv").string(), serialize_series_csv(table));
    write_text((dir / "truth.csv").string(), truth.str());
    return kOk;
}

// ------------------------------------------------------------- estimate

struct EstimateArgs {
    std::string input;
    std::string family = "matern12";
    std::size_t train = 0;
    bool probability = false;
    std::string output;
};

int run_estimate(const EstimateArgs& a) {
    const SeriesTable table = parse_series_csv_file(a.input);
    PipelineConfig pc;
    pc.probability_input = a.probability;
    const auto entities = transform_entities(group_by_entity(table), pc);
    const auto family = parse_kernel_family(a.family);
    const EstimationResult r = estimate_training_kernel(entities, a.train, family);
    json doc;
    doc["kernel"] = to_string(family);
    doc["range"] = r.range;
    doc["nugget"] = r.nugget;
    doc["loglik"] = r.loglik;
    doc["converged"] = r.converged;
    doc["iterations"] = r.iterations;
    doc["evaluations"] = r.evaluations;
    doc["restarts"] = r.restarts;
    doc["range_at_bound"] = r.range_at_bound;
    doc["nugget_at_bound"] = r.nugget_at_bound;
    write_text(a.output, doc.dump(2) + "\n");
    return kOk;
}

// ------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string detectors = "skf,bocpd,cusum";
    std::string scenario = "mean-shift";
    KernelArgs kernel;
    std::optional<double> post_mean;
    double post_var = 9.0;
    double post_range = 1.0;
    std::optional<std::size_t> n;
    std::optional<std::string> cps;
    std::size_t reps = 100;
    std::size_t calibration_reps = 200;
    double target_arl = 50.0;
    double tolerance = 0.02;
    std::size_t horizon = 300;
    double cusum_drift = 0.5;
    std::string sizes = "50,100,200,400";
    std::optional<std::uint64_t> seed;
    std::string output;
};

int run_evaluate(const EvaluateArgs& a) {
    const std::uint64_t seed = resolve_seed(a.seed);
    const KernelSpec k = a.kernel.fixed().value_or(simulation_kernel(a.kernel.family));

    if (a.scenario == "timing") {
        const auto sizes = parse_size_list(a.sizes);
        const auto rows = timing_benchmark(sizes, k, seed);
        MetricTable t;
        t.columns = {"n", "skf_seconds", "dense_seconds", "speedup"};
        for (const auto& r : rows) {
            t.rows.push_back({std::to_string(r.n), format_metric(r.skf_seconds), format_metric(r.dense_seconds),
                              format_metric(r.dense_seconds / r.skf_seconds)});
        }
        write_text(a.output, t.to_csv());
        return kOk;
    }

    const bool multi = a.scenario.rfind("multi-", 0) == 0;
    const ShiftKind shift = parse_shift_kind(multi ? a.scenario.substr(6) : a.scenario);
    auto value_for = [&](double mean_default) {
        switch (shift) {
            case ShiftKind::Mean: return a.post_mean.value_or(mean_default);
            case ShiftKind::Variance: return a.post_var;
            case ShiftKind::Range: return a.post_range;
        }
        return mean_default;
    };
    const auto detectors = parse_detector_list(a.detectors);
    if (multi) {
        MultiChangeConfig c;
        c.family = k.family;
        c.range = k.range;
        c.nugget = k.nugget;
        c.shift = shift;
        c.post_value = value_for(8.0);
        if (a.n) c.n = *a.n;
        if (a.cps) c.changepoints = parse_index_list(*a.cps);
        c.reps = a.reps;
        c.calibration_reps = a.calibration_reps;
        c.arl_horizon = a.horizon;
        c.target_arl = a.target_arl;
        c.calibration_tolerance = a.tolerance;
        c.cusum_drift = a.cusum_drift;
        c.seed = seed;
        c.detectors = detectors;
        const auto cal = calibrate_multi_change(c);
        write_text(a.output, multi_change_table(c, run_multi_change(c, cal)).to_csv());
        return kOk;
    }
    SingleChangeConfig c;
    c.family = k.family;
    c.range = k.range;
    c.nugget = k.nugget;
    c.shift = shift;
    c.post_value = value_for(2.0);
    if (a.n) c.n = *a.n;
    if (a.cps) {
        const auto cps = parse_index_list(*a.cps);
        if (cps.size() != 1) throw UsageError("single-change scenarios take exactly one --cp");
        c.tau = cps.front();
    }
    c.reps = a.reps;
    c.calibration_reps = a.calibration_reps;
    c.arl_horizon = a.horizon;
    c.target_arl = a.target_arl;
    c.calibration_tolerance = a.tolerance;
    c.cusum_drift = a.cusum_drift;
    c.seed = seed;
    c.detectors = detectors;
    const auto cal = calibrate_single_change(c);
    write_text(a.output, single_change_table(c, run_single_change(c, cal)).to_csv());
    return kOk;
}

// ------------------------------------------------------------- pipeline

struct PipelineArgs {
    std::string input;
    KernelArgs kernel;
    double hazard = 0.01;
    std::string hazard_file;
    std::optional<double> target_alarm_rate;
    std::size_t train = 0;
    double alpha = 0.05;
    double recency = 7.0;
    double window = 7.0;
    double lateness = 14.0;
    bool no_screen = false;
    bool raw = false;
    std::size_t min_segment = 2;
    bool baseline = false;
    std::string output;
    std::string metrics;
};

int run_pipeline_cmd(const PipelineArgs& a) {
    const SeriesTable table = parse_series_csv_file(a.input);
    PipelineConfig c;
    c.family = parse_kernel_family(a.kernel.family);
    c.kernel = a.kernel.fixed();
    c.hazard = a.hazard;
    if (!a.hazard_file.empty()) c.hazard_series = parse_hazard_csv_file(a.hazard_file);
    c.target_alarm_rate = a.target_alarm_rate;
    c.training = a.train;
    c.probability_input = !a.raw;
    c.screen = !a.no_screen;
    c.screening.alpha = a.alpha;
    c.screening.recency = a.recency;
    c.window.window = a.window;
    c.window.lateness = a.lateness;
    c.min_segment_for_report = a.min_segment;

    const auto entities = group_by_entity(table);
    const PipelineResult r = run_pipeline(entities, c);
    print_warnings(r.warnings);
    write_text(a.output, pipeline_json(r, c, table.iso_dates));

    if (!a.metrics.empty()) {
        if (!r.counts) throw DataError("--metrics needs a label column");
        MetricTable t;
        t.columns = {"method", "threshold", "precision", "recall", "f1", "tp", "fp", "fn", "tn", "detection_delay"};
        auto row = [&](const std::string& name, double thr, const ConfusionCounts& k, double delay) {
            t.rows.push_back({name, format_metric(thr), format_metric(k.precision()), format_metric(k.recall()),
                              format_metric(k.f1()), std::to_string(k.tp), std::to_string(k.fp), std::to_string(k.fn),
                              std::to_string(k.tn), format_metric(delay)});
        };
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row(c.screen ? "skf_screened" : "skf", nan, *r.counts, r.delay && r.delay->count ? r.delay->mean : nan);
        if (a.baseline) {
            std::vector<EntitySeries> kept;
            for (const auto& e : transform_entities(entities, c)) {
                if (e.values.size() >= c.training + 4) kept.push_back(e);
            }
            const auto b = best_threshold_classifier(kept, c.training, c.window);
            row("threshold", b.threshold, b.counts, nan);
        }
        write_text(a.metrics, t.to_csv());
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        std::vector<std::string> args = expand_config(argc, argv);

        CLI::App app{"Online changepoint detection with sequential Kalman filter marginals"};
        app.require_subcommand(1);
        app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        app.set_help_all_flag("--help-all");
        app.add_option("--config", "Flat key=value file mirroring the flags; flags override it");

        DetectArgs d;
        auto* detect = app.add_subcommand("detect", "Run the SKF detector on every entity");
        detect->add_option("--input", d.input, "CSV entity,time,value[,label]")->required();
        d.kernel.add(detect, "matern12");
        detect->add_option("--hazard", d.hazard, "Constant hazard")->capture_default_str();
        detect->add_option("--hazard-file", d.hazard_file, "CSV time,hazard");
        detect->add_option("--train", d.train, "Leading points per entity that train the kernel and raise no alarms")->capture_default_str();
        detect->add_flag("--probability", d.probability, "Logit-transform probability input");
        detect->add_flag("--no-truncate", d.no_truncate, "Keep every candidate after a detection");
        detect->add_option("--min-segment", d.min_segment, "Shortest segment a detection may report")->capture_default_str();
        detect->add_option("--output", d.output, "JSON output (stdout when absent)");
        detect->add_option("--heatmap", d.heatmap, "CSV step,candidate,weight of the posterior");
        detect->add_option("--heatmap-entity", d.heatmap_entity, "Entity for --heatmap (first by default)");

        SimulateArgs s;
        auto* simulate = app.add_subcommand("simulate", "Write simulated scenarios and their truth");
        simulate->add_option("--scenario", s.scenario, "mean-shift, variance-shift, range-shift, no-change or cohort")
            ->capture_default_str();
        s.kernel.add(simulate, "matern52", "4 (matern52) or 12 (matern12)", "0.1");
        simulate->add_option("--post-mean", s.post_mean)->capture_default_str();
        simulate->add_option("--post-var", s.post_var)->capture_default_str();
        simulate->add_option("--post-range", s.post_range)->capture_default_str();
        simulate->add_option("--n", s.n, "Series length (100, or 150 for the cohort)");
        simulate->add_option("--cp", s.cps, "Comma-separated 1-based changepoints")->capture_default_str();
        simulate->add_option("--reps", s.reps)->capture_default_str();
        simulate->add_option("--entities", s.entities, "Cohort size")->capture_default_str();
        simulate->add_option("--train", s.train, "Cohort training length")->capture_default_str();
        simulate->add_option("--positive-fraction", s.positive_fraction)->capture_default_str();
        simulate->add_option("--seed", s.seed, "Master seed (SKFCPD_SEED when absent)");
        simulate->add_option("--output", s.output, "Output directory")->required();

        EstimateArgs e;
        auto* est = app.add_subcommand("estimate", "Pooled range and nugget estimates");
        est->add_option("--input", e.input)->required();
        est->add_option("--kernel", e.family)->capture_default_str();
        est->add_option("--train", e.train, "Leading points per entity (0 = all)")->capture_default_str();
        est->add_flag("--probability", e.probability, "Logit-transform probability input");
        est->add_option("--output", e.output, "JSON output (stdout when absent)");

        EvaluateArgs v;
        auto* evaluate = app.add_subcommand("evaluate", "Calibrated detector comparison on simulated data");
        evaluate->add_option("--detectors", v.detectors)->capture_default_str();
        evaluate->add_option("--scenario", v.scenario,
                             "mean-shift, variance-shift, range-shift, multi-mean-shift, multi-variance-shift or timing")
            ->capture_default_str();
        v.kernel.add(evaluate, "matern52", "4 (matern52) or 12 (matern12)", "0.1");
        evaluate->add_option("--post-mean", v.post_mean, "Post-change mean (2, or 8 for multi scenarios)");
        evaluate->add_option("--post-var", v.post_var)->capture_default_str();
        evaluate->add_option("--post-range", v.post_range)->capture_default_str();
        evaluate->add_option("--n", v.n, "Series length (100, or 150 for multi scenarios)");
        evaluate->add_option("--cp", v.cps, "Changepoints (50, or 33,66,98,130 for multi scenarios)");
        evaluate->add_option("--reps", v.reps)->capture_default_str();
        evaluate->add_option("--calibration-reps", v.calibration_reps)->capture_default_str();
        evaluate->add_option("--target-arl", v.target_arl)->capture_default_str();
        evaluate->add_option("--tolerance", v.tolerance, "Relative ARL calibration tolerance")->capture_default_str();
        evaluate->add_option("--horizon", v.horizon, "No-change series length for ARL")->capture_default_str();
        evaluate->add_option("--cusum-drift", v.cusum_drift)->capture_default_str();
        evaluate->add_option("--sizes", v.sizes, "Series lengths for the timing scenario")->capture_default_str();
        evaluate->add_option("--seed", v.seed, "Master seed (SKFCPD_SEED when absent)");
        evaluate->add_option("--output", v.output, "Metric CSV (stdout when absent)");

        PipelineArgs p;
        auto* pipe = app.add_subcommand("pipeline", "Detection, screening and positive windows per entity");
        pipe->add_option("--input", p.input)->required();
        p.kernel.add(pipe, "matern12");
        pipe->add_option("--hazard", p.hazard)->capture_default_str();
        pipe->add_option("--hazard-file", p.hazard_file, "CSV time,hazard");
        pipe->add_option("--target-alarm-rate", p.target_alarm_rate, "Calibrate the hazard to this per-step alarm rate");
        pipe->add_option("--train", p.train, "Training points per entity")->required();
        pipe->add_option("--alpha", p.alpha)->capture_default_str();
        pipe->add_option("--recency", p.recency, "Days after a changepoint it may be screened")->capture_default_str();
        pipe->add_option("--window", p.window, "Positive window length in days")->capture_default_str();
        pipe->add_option("--lateness", p.lateness, "Latest credited detection after a positive run starts")
            ->capture_default_str();
        pipe->add_flag("--no-screen", p.no_screen, "Accept every detection without screening");
        pipe->add_flag("--raw", p.raw, "Values are already on the logit scale");
        pipe->add_option("--min-segment", p.min_segment)->capture_default_str();
        pipe->add_flag("--baseline", p.baseline, "Add the best fixed-threshold classifier to --metrics");
        pipe->add_option("--output", p.output, "JSON output (stdout when absent)");
        pipe->add_option("--metrics", p.metrics, "Metric CSV (needs labels)");

        std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
        try {
            app.parse(reversed);
        } catch (const CLI::ParseError& err) {
            const int code = app.exit(err);
            return code == 0 ? kOk : kUsage;
        }

        if (detect->parsed()) return run_detect(d);
        if (simulate->parsed()) return run_simulate(s);
        if (est->parsed()) return run_estimate(e);
        if (evaluate->parsed()) return run_evaluate(v);
        return run_pipeline_cmd(p);
    } catch (const UsageError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kUsage;
    } catch (const InvalidParameter& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kUsage;
    } catch (const DataError& err) {
        std::cerr << "data error: " << err.what() << '\n';
        return kData;
    } catch (const InvalidInput& err) {
        std::cerr << "data error: " << err.what() << '\n';
        return kData;
    } catch (const InvalidGrid& err) {
        std::cerr << "data error: " << err.what() << '\n';
        return kData;
    } catch (const std::filesystem::filesystem_error& err) {
        std::cerr << "data error: " << err.what() << '\n';
        return kData;
    } catch (const std::exception& err) {
        std::cerr << "numerical error: " << err.what() << '\n';
        return kNumerical;
    }
}
