#include "skfcpd/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include "json.hpp"

#include "skfcpd/errors.hpp"
#include "skfcpd/skf_detector.hpp"
#include "skfcpd/whitener.hpp"

namespace skfcpd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

[[noreturn]] void data_error(std::size_t line, const std::string& what) {
    throw DataError("line " + std::to_string(line) + ": " + what);
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return in;
}

std::size_t count_observed(std::span<const double> values) {
    return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](double v) { return std::isfinite(v); }));
}

}  // namespace

std::optional<double> parse_iso_date(std::string_view text) {
    text = trim(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    auto num = [&](std::string_view s, auto& out) {
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc() && ptr == s.data() + s.size();
    };
    if (!num(text.substr(0, 4), y) || !num(text.substr(5, 2), m) || !num(text.substr(8, 2), d)) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return static_cast<double>(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

std::string format_iso_date(double days) {
    const std::chrono::sys_days sd{std::chrono::days{static_cast<long>(std::llround(days))}};
    const std::chrono::year_month_day ymd{sd};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

SeriesTable parse_series_csv(std::istream& in) {
    SeriesTable table;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::optional<bool> iso;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = trim(line);
        if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
        if (view.empty()) continue;
        const auto fields = split(view);
        if (!header_seen) {
            header_seen = true;
            const bool base = fields.size() >= 3 && fields[0] == "entity" && fields[1] == "time" && fields[2] == "value";
            if (!base || fields.size() > 4 || (fields.size() == 4 && fields[3] != "label")) {
                data_error(line_no, "expected header 'entity,time,value[,label]'");
            }
            table.has_labels = fields.size() == 4;
            continue;
        }
        const std::size_t want = table.has_labels ? 4 : 3;
        if (fields.size() != want) data_error(line_no, "expected " + std::to_string(want) + " fields");
        SeriesRecord rec;
        rec.entity = std::string(fields[0]);
        if (rec.entity.empty()) data_error(line_no, "empty entity id");

        const auto date = parse_iso_date(fields[1]);
        const bool this_iso = date.has_value();
        if (iso && *iso != this_iso) data_error(line_no, "mixed ISO-date and numeric times");
        iso = this_iso;
        if (date) {
            rec.time = *date;
        } else {
            const auto t = parse_number(fields[1]);
            if (!t || !std::isfinite(*t)) data_error(line_no, "invalid time '" + std::string(fields[1]) + "'");
            rec.time = *t;
        }

        if (fields[2] == "NA") {
            rec.value = kNaN;
        } else {
            const auto v = parse_number(fields[2]);
            if (!v || !std::isfinite(*v)) data_error(line_no, "invalid value '" + std::string(fields[2]) + "'");
            rec.value = *v;
        }
        if (table.has_labels) {
            if (fields[3] == "0") {
                rec.label = 0;
            } else if (fields[3] == "1") {
                rec.label = 1;
            } else {
                data_error(line_no, "label must be 0 or 1");
            }
        }
        table.records.push_back(std::move(rec));
    }
    if (!header_seen) throw DataError("empty CSV input");
    table.iso_dates = iso.value_or(false);
    return table;
}

SeriesTable parse_series_csv_file(const std::string& path) {
    auto in = open_input(path);
    return parse_series_csv(in);
}

std::string serialize_series_csv(const SeriesTable& table) {
    std::ostringstream os;
    os << "entity,time,value" << (table.has_labels ? ",label" : "") << '\n';
    for (const auto& r : table.records) {
        os << r.entity << ',' << (table.iso_dates ? format_iso_date(r.time) : format_number(r.time)) << ','
           << (std::isfinite(r.value) ? format_number(r.value) : "NA");
        if (table.has_labels) os << ',' << r.label.value_or(0);
        os << '\n';
    }
    return os.str();
}

HazardFunction parse_hazard_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        const auto fields = split(view);
        if (!header_seen) {
            header_seen = true;
            if (fields.size() != 2 || fields[0] != "time" || fields[1] != "hazard") {
                data_error(line_no, "expected header 'time,hazard'");
            }
            continue;
        }
        if (fields.size() != 2) data_error(line_no, "expected 2 fields");
        auto t = parse_iso_date(fields[0]);
        if (!t) t = parse_number(fields[0]);
        const auto h = parse_number(fields[1]);
        if (!t || !h) data_error(line_no, "invalid hazard row");
        if (!(*h >= 0.0 && *h <= 1.0)) data_error(line_no, "hazard must lie in [0, 1]");
        rows.emplace_back(*t, *h);
    }
    if (rows.empty()) throw DataError("hazard file has no rows");
    std::sort(rows.begin(), rows.end());
    std::vector<double> times, values;
    for (const auto& [t, h] : rows) {
        if (!times.empty() && t == times.back()) throw DataError("duplicate hazard time");
        times.push_back(t);
        values.push_back(h);
    }
    return HazardFunction::series(std::move(times), std::move(values));
}

HazardFunction parse_hazard_csv_file(const std::string& path) {
    auto in = open_input(path);
    return parse_hazard_csv(in);
}

std::vector<EntitySeries> group_by_entity(const SeriesTable& table) {
    std::map<std::string, std::vector<const SeriesRecord*>> groups;
    for (const auto& r : table.records) groups[r.entity].push_back(&r);
    std::vector<EntitySeries> out;
    for (auto& [id, recs] : groups) {
        std::stable_sort(recs.begin(), recs.end(), [](const SeriesRecord* a, const SeriesRecord* b) { return a->time < b->time; });
        EntitySeries e;
        e.id = id;
        for (const SeriesRecord* r : recs) {
            if (!e.times.empty() && !(r->time - e.times.back() >= TimeGrid::kMinSpacing)) {
                throw DataError("entity '" + id + "' has duplicate time " + format_number(r->time));
            }
            e.times.push_back(r->time);
            e.values.push_back(r->value);
            if (table.has_labels) e.labels.push_back(r->label.value_or(0));
        }
        out.push_back(std::move(e));
    }
    return out;
}

double logit(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("probability outside [0, 1]");
    return std::log(p / (1.0 - p));
}

std::vector<double> logit_transform(std::span<const double> p) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : p) {
        if (std::isnan(v)) continue;
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("probability outside [0, 1]: " + format_number(v));
        if (v > 0.0 && v < 1.0) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(lo <= hi)) throw DataError("no probability strictly inside (0, 1) to anchor the clamp");
    std::vector<double> out(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) out[k] = std::isnan(p[k]) ? kNaN : logit(std::clamp(p[k], lo, hi));
    return out;
}

void ScreeningConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("screening alpha must lie in (0, 1)");
    if (!(recency >= 0.0)) throw InvalidParameter("screening recency must be >= 0");
}

ScreeningResult screening_test(std::span<const double> pre_times, std::span<const double> pre_values,
                               std::span<const double> post_times, std::span<const double> post_values,
                               const KernelSpec& kernel, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("screening alpha must lie in (0, 1)");
    if (pre_times.size() != pre_values.size() || post_times.size() != post_values.size()) {
        throw InvalidInput("segment times and values differ in length");
    }
    if (!pre_times.empty() && !post_times.empty() && !(post_times.front() > pre_times.back())) {
        throw InvalidInput("post segment must follow the pre segment");
    }
    ScreeningResult r;
    const std::size_t n_pre = count_observed(pre_values);
    const std::size_t n_post = count_observed(post_values);
    if (n_pre < 2 || n_post < 2) {
        r.diagnostic = "each segment needs at least two observed values";
        return r;
    }

    // Joined series from the first observed value; d marks the post segment.
    std::size_t first = 0;
    while (!std::isfinite(pre_values[first])) ++first;
    std::vector<double> times(pre_times.begin() + static_cast<std::ptrdiff_t>(first), pre_times.end());
    times.insert(times.end(), post_times.begin(), post_times.end());
    const double origin = pre_values[first];
    std::vector<double> y, d, sum;
    y.reserve(times.size());
    for (std::size_t k = first; k < pre_values.size(); ++k) y.push_back(pre_values[k] - origin);
    for (double v : post_values) y.push_back(v - origin);
    const std::size_t split = pre_values.size() - first;
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double step = k < split ? 0.0 : 1.0;
        d.push_back(std::isfinite(y[k]) ? step : kNaN);
        sum.push_back(y[k] + step);
    }

    // Gram entries under K^{-1}; the y-d cross term by polarization.
    const DlmSystem sys = build_dlm(kernel, TimeGrid(times));
    const SegmentAccumulator ay = whiten(sys, y);
    const SegmentAccumulator ad = whiten(sys, d);
    const SegmentAccumulator as = whiten(sys, sum);
    const double uu = ay.s_uu, y1 = ay.raw_s_uv(), yy = ay.raw_s_vv();
    const double d1 = ad.raw_s_uv(), dd = ad.raw_s_vv();
    const double yd = 0.5 * (as.raw_s_vv() - yy - dd);
    const double det = uu * dd - d1 * d1;

    r.df = static_cast<double>(n_pre + n_post - 2);
    boost::math::students_t dist(r.df);
    r.critical = boost::math::quantile(dist, 1.0 - alpha);
    if (!(det > 0.0)) {
        r.diagnostic = "segment design is singular under the kernel";
        return r;
    }
    const double level = (dd * y1 - d1 * yd) / det;
    const double step = (uu * yd - d1 * y1) / det;
    r.mean_pre = origin + level;
    r.mean_post = origin + level + step;
    const double scale = (yy - level * y1 - step * yd) / r.df;
    if (!(scale > 1e-12 * std::max(yy, 1e-300)) || !std::isfinite(scale)) {
        r.diagnostic = "pooled scale is zero";
        return r;
    }
    r.statistic = step / std::sqrt(scale * uu / det);
    r.pass = r.statistic > r.critical;
    return r;
}

void PipelineConfig::validate() const {
    if (kernel) kernel->validate();
    if (!kernel && training < 4) throw InvalidParameter("estimating the kernel needs at least 4 training points");
    if (!hazard_series && !target_alarm_rate && !(hazard > 0.0 && hazard < 1.0)) {
        throw InvalidParameter("hazard must lie in (0, 1)");
    }
    if (target_alarm_rate && !(*target_alarm_rate > 0.0 && *target_alarm_rate < 1.0)) {
        throw InvalidParameter("target alarm rate must lie in (0, 1)");
    }
    if (min_segment_for_report < 1) throw InvalidParameter("min_segment_for_report must be >= 1");
    screening.validate();
    if (!(window.window >= 0.0) || !(window.lateness >= 0.0)) throw InvalidParameter("window lengths must be >= 0");
}

std::vector<EntitySeries> transform_entities(std::span<const EntitySeries> entities, const PipelineConfig& config) {
    std::vector<EntitySeries> out(entities.begin(), entities.end());
    if (config.probability_input) {
        for (auto& e : out) {
            try {
                e.values = logit_transform(e.values);
            } catch (const DataError& err) {
                throw DataError("entity '" + e.id + "': " + err.what());
            }
        }
    }
    return out;
}

namespace {

std::size_t count_training_alarms(const EntitySeries& e, const KernelSpec& kernel, std::size_t training, double hazard,
                                  std::size_t& steps) {
    DetectorConfig cfg;
    cfg.kernel = kernel;
    cfg.hazard = HazardFunction::constant(hazard);
    SkfDetector det(cfg);
    std::size_t alarms = 0;
    const std::size_t n = std::min(training, e.values.size());
    for (std::size_t k = 0; k < n; ++k) {
        if (det.step(e.times[k], e.values[k])) ++alarms;
    }
    steps += n > 0 ? n - 1 : 0;
    return alarms;
}

}  // namespace

CalibrationResult calibrate_training_hazard(std::span<const EntitySeries> transformed, const KernelSpec& kernel,
                                            std::size_t training, double target_rate) {
    if (!(target_rate > 0.0 && target_rate < 1.0)) throw InvalidParameter("target alarm rate must lie in (0, 1)");
    auto arl = [&](double hazard) {
        std::size_t steps = 0, alarms = 0;
        for (const auto& e : transformed) alarms += count_training_alarms(e, kernel, training, hazard, steps);
        return alarms == 0 ? static_cast<double>(steps) : static_cast<double>(steps) / static_cast<double>(alarms);
    };
    CalibrationSettings settings;
    settings.target = 1.0 / target_rate;
    const auto [lo, hi] = knob_bounds(DetectorKind::Skf);
    return calibrate_to_arl(arl, lo, hi, settings);
}

EstimationResult estimate_training_kernel(std::span<const EntitySeries> transformed, std::size_t training,
                                          KernelFamily family) {
    TrainingSet set;
    for (const auto& e : transformed) {
        const std::size_t n = training == 0 ? e.values.size() : std::min(training, e.values.size());
        const auto end = e.values.begin() + static_cast<std::ptrdiff_t>(n);
        if (std::count_if(e.values.begin(), end, [](double v) { return std::isfinite(v); }) < 4) continue;
        std::size_t first = 0;
        while (!std::isfinite(e.values[first])) ++first;
        set.series.push_back({TimeGrid(std::vector<double>(e.times.begin() + static_cast<std::ptrdiff_t>(first),
                                                           e.times.begin() + static_cast<std::ptrdiff_t>(n))),
                              std::vector<double>(e.values.begin() + static_cast<std::ptrdiff_t>(first), end)});
    }
    if (set.series.empty()) throw DataError("no entity has 4 observed training values for estimation");
    EstimatorSettings settings;
    settings.family = family;
    return estimate(set, settings);
}

namespace {

EntityResult process_entity(const EntitySeries& e, const KernelSpec& kernel, const HazardFunction& hazard,
                            const PipelineConfig& config) {
    const std::size_t n0 = config.training;
    EntityResult er;
    er.id = e.id;
    DetectorConfig cfg;
    cfg.kernel = kernel;
    cfg.hazard = hazard;
    cfg.min_segment_for_report = config.min_segment_for_report;
    SkfDetector det(cfg);

    std::optional<std::size_t> current;  // position in er.detections awaiting screening
    const std::span<const double> times(e.times);
    const std::span<const double> values(e.values);
    for (std::size_t j = n0; j < e.values.size(); ++j) {
        if (auto ev = det.step(times[j], values[j])) {
            const std::size_t c = n0 + ev->changepoint;  // 1-based in the full series
            er.detections.push_back({c, times[c - 1], times[j], ev->map_weight, false, 0.0});
            current = er.detections.size() - 1;
        }
        if (!current || !std::isfinite(values[j])) continue;
        PipelineDetection& d = er.detections[*current];
        if (times[j] - d.time > config.screening.recency) {
            current.reset();
            continue;
        }
        if (!config.screen) {
            d.screened = true;
            current.reset();
            continue;
        }
        // pre = [n0, c - 1), post = [c - 1, j] in 0-based positions
        const std::size_t pre_end = d.index - 1;
        const auto res = screening_test(times.subspan(n0, pre_end - n0), values.subspan(n0, pre_end - n0),
                                        times.subspan(pre_end, j + 1 - pre_end), values.subspan(pre_end, j + 1 - pre_end),
                                        kernel, config.screening.alpha);
        d.statistic = res.statistic;
        if (res.pass) {
            d.screened = true;
            current.reset();
        }
    }
    std::vector<double> starts;
    for (const auto& d : er.detections) {
        if (!d.screened) continue;
        er.windows.push_back({d.time, d.time + config.window.window});
        starts.push_back(d.time);
    }
    if (!e.labels.empty()) {
        const std::vector<int> labels(e.labels.begin() + static_cast<std::ptrdiff_t>(n0), e.labels.end());
        er.evaluation = window_confusion(times.subspan(n0), labels, starts, config.window);
    }
    return er;
}

}  // namespace

PipelineResult run_pipeline(std::span<const EntitySeries> entities, const PipelineConfig& config) {
    config.validate();
    PipelineResult result;
    const std::vector<EntitySeries> data = transform_entities(entities, config);
    const std::size_t n0 = config.training;

    std::vector<const EntitySeries*> usable;
    for (const auto& e : data) {
        if (!e.labels.empty() && e.labels.size() != e.values.size()) throw DataError("entity '" + e.id + "': label count");
        if (e.values.size() < n0 + 4) {
            result.warnings.push_back("entity '" + e.id + "' has fewer than training + 4 points; skipped");
            continue;
        }
        usable.push_back(&e);
    }

    if (config.kernel) {
        result.kernel = *config.kernel;
    } else {
        std::vector<EntitySeries> train;
        for (const EntitySeries* e : usable) train.push_back(*e);
        result.estimate = estimate_training_kernel(train, n0, config.family);
        result.kernel = result.estimate->kernel(config.family);
        result.estimated = true;
    }

    HazardFunction hazard;
    if (config.hazard_series) {
        hazard = *config.hazard_series;
        result.hazard = kNaN;
    } else if (config.target_alarm_rate) {
        std::vector<EntitySeries> train;
        for (const EntitySeries* e : usable) train.push_back(*e);
        result.hazard = calibrate_training_hazard(train, result.kernel, n0, *config.target_alarm_rate).knob;
        hazard = HazardFunction::constant(result.hazard);
    } else {
        result.hazard = config.hazard;
        hazard = HazardFunction::constant(config.hazard);
    }

    std::vector<EntityResult> slots(usable.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(usable.size());
    auto worker = [&] {
        for (std::size_t k = next++; k < usable.size(); k = next++) {
            try {
                slots[k] = process_entity(*usable[k], result.kernel, hazard, config);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(usable.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }

    // Aggregation follows entity-id order regardless of scheduling.
    ConfusionCounts total;
    std::vector<double> delays;
    bool any_labels = false;
    for (auto& er : slots) {
        if (er.evaluation) {
            any_labels = true;
            total += er.evaluation->counts;
            delays.insert(delays.end(), er.evaluation->delays.begin(), er.evaluation->delays.end());
        }
        result.entities.push_back(std::move(er));
    }
    if (any_labels) {
        result.counts = total;
        result.delay = Summary::of(delays);
    }
    return result;
}

std::string pipeline_json(const PipelineResult& result, const PipelineConfig& config, bool iso_dates) {
    using json = nlohmann::ordered_json;
    auto time_value = [&](double t) -> json {
        if (iso_dates) return format_iso_date(t);
        return t;
    };
    json cfg;
    cfg["kernel"] = to_string(result.kernel.family);
    cfg["range"] = result.kernel.range;
    cfg["nugget"] = result.kernel.nugget;
    cfg["estimated"] = result.estimated;
    if (std::isnan(result.hazard)) {
        cfg["hazard"] = "series";
    } else {
        cfg["hazard"] = result.hazard;
    }
    cfg["training"] = config.training;
    cfg["screening"] = config.screen;
    cfg["alpha"] = config.screening.alpha;
    cfg["recency"] = config.screening.recency;
    cfg["window"] = config.window.window;
    cfg["lateness"] = config.window.lateness;

    json doc;
    doc["config"] = cfg;
    json ents = json::array();
    for (const auto& e : result.entities) {
        json je;
        je["id"] = e.id;
        json cps = json::array();
        for (const auto& d : e.detections) {
            json jd;
            jd["time"] = time_value(d.time);
            jd["map_weight"] = d.map_weight;
            jd["screened"] = d.screened;
            cps.push_back(jd);
        }
        je["changepoints"] = cps;
        json wins = json::array();
        for (const auto& w : e.windows) {
            json jw;
            jw["start"] = time_value(w.start);
            jw["end"] = time_value(w.end);
            wins.push_back(jw);
        }
        je["windows"] = wins;
        ents.push_back(je);
    }
    doc["entities"] = ents;
    if (result.counts) {
        json m;
        m["precision"] = result.counts->precision();
        m["recall"] = result.counts->recall();
        m["f1"] = result.counts->f1();
        m["tp"] = result.counts->tp;
        m["fp"] = result.counts->fp;
        m["fn"] = result.counts->fn;
        m["tn"] = result.counts->tn;
        m["detection_delay"] = result.delay && result.delay->count > 0 ? json(result.delay->mean) : json(nullptr);
        m["detected_runs"] = result.delay ? result.delay->count : 0;
        doc["metrics"] = m;
    }
    return doc.dump(2) + "\n";
}

ThresholdEvaluation evaluate_threshold(std::span<const EntitySeries> transformed, std::size_t training,
                                       double threshold, const WindowConfig& window) {
    ThresholdEvaluation out;
    out.threshold = threshold;
    for (const auto& e : transformed) {
        if (e.labels.empty() || e.values.size() <= training) continue;
        std::vector<double> starts;
        for (std::size_t j = training; j < e.values.size(); ++j) {
            if (std::isfinite(e.values[j]) && e.values[j] >= threshold) starts.push_back(e.times[j]);
        }
        const std::vector<int> labels(e.labels.begin() + static_cast<std::ptrdiff_t>(training), e.labels.end());
        out.counts += window_confusion(std::span(e.times).subspan(training), labels, starts, window).counts;
    }
    return out;
}

ThresholdEvaluation best_threshold_classifier(std::span<const EntitySeries> transformed, std::size_t training,
                                              const WindowConfig& window) {
    std::vector<double> pool;
    for (const auto& e : transformed) {
        for (std::size_t j = training; j < e.values.size(); ++j) {
            if (std::isfinite(e.values[j])) pool.push_back(e.values[j]);
        }
    }
    if (pool.empty()) throw DataError("no post-training values to threshold");
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    ThresholdEvaluation best;
    best.threshold = std::numeric_limits<double>::infinity();
    bool first = true;
    for (double t : pool) {
        const auto ev = evaluate_threshold(transformed, training, t, window);
        if (first || ev.counts.f1() > best.counts.f1()) {
            best = ev;
            first = false;
        }
    }
    return best;
}

std::vector<EntitySeries> synthetic_cohort(const SyntheticCohortConfig& c) {
    if (c.entities == 0 || c.length < c.training + c.shift_days + 15) {
        throw InvalidParameter("synthetic cohort too short for training, shift and margins");
    }
    if (!(c.positive_fraction >= 0.0 && c.positive_fraction <= 1.0)) throw InvalidParameter("positive fraction");
    const auto n_pos = static_cast<std::size_t>(std::llround(c.positive_fraction * static_cast<double>(c.entities)));
    std::vector<std::size_t> order(c.entities);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 pick(derive_seed(c.seed, 8));
    std::shuffle(order.begin(), order.end(), pick);
    std::vector<bool> positive(c.entities, false);
    for (std::size_t k = 0; k < n_pos; ++k) positive[order[k]] = true;

    const TimeGrid grid = TimeGrid::regular(c.length);
    const GpSegmentModel noise{0.0, c.noise_sd * c.noise_sd, c.kernel};
    std::vector<EntitySeries> out;
    for (std::size_t e = 0; e < c.entities; ++e) {
        std::mt19937_64 rng(derive_seed(c.seed, 7, e));
        std::normal_distribution<double> base_dist(c.baseline_mean, c.baseline_sd);
        const double base = base_dist(rng);
        const auto eps = sample_gp(noise, grid, rng);
        std::size_t shift_at = c.length + 1;  // 0-based first shifted index
        if (positive[e]) {
            std::uniform_int_distribution<std::size_t> at(c.training + 10, c.length - c.shift_days - 5);
            shift_at = at(rng);
        }
        EntitySeries s;
        char id[32];
        std::snprintf(id, sizeof id, "e%04zu", e);
        s.id = id;
        for (std::size_t k = 0; k < c.length; ++k) {
            const bool on = k >= shift_at && k < shift_at + c.shift_days;
            const double y = base + eps[k] + (on ? c.shift : 0.0);
            s.times.push_back(grid[k]);
            s.values.push_back(1.0 / (1.0 + std::exp(-y)));
            s.labels.push_back(on ? 1 : 0);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace skfcpd
