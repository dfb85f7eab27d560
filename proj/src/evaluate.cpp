#include "tdad/evaluate.hpp"

#include "tdad/error.hpp"
#include "tdad/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace tdad {

namespace {

bool has_within(const std::vector<Timestamp>& sorted, Timestamp t, Timestamp delta) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), t - delta);
    return it != sorted.end() && *it <= t + delta;
}

// Per-row facts that do not depend on the thresholds.
struct SweepRow {
    double score = 0.0;
    std::optional<double> sensor_max;
    bool matched = false;               // some alarm within delta
    std::vector<std::size_t> alarms;    // indices of alarms within delta
};

std::vector<SweepRow> sweep_rows(const ScoreSeries& op_scores, const ScoreSeries* sensor_scores,
                                 const std::vector<Timestamp>& alarms, Timestamp delta, Timestamp eta,
                                 bool inclusive) {
    std::vector<SweepRow> rows(op_scores.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Timestamp t = op_scores.timestamps[k];
        auto& r = rows[k];
        r.score = op_scores.scores[k];
        if (sensor_scores) r.sensor_max = neighbourhood_max(*sensor_scores, t, eta, inclusive);
        auto it = std::lower_bound(alarms.begin(), alarms.end(), t - delta);
        for (; it != alarms.end() && *it <= t + delta; ++it) {
            r.alarms.push_back(static_cast<std::size_t>(it - alarms.begin()));
        }
        r.matched = !r.alarms.empty();
    }
    return rows;
}

struct Counts {
    std::size_t detected = 0;
    std::size_t matched = 0;
    std::size_t found = 0;
};

PrecisionRecall to_metrics(const Counts& c, std::size_t n_alarms) {
    PrecisionRecall pr;
    if (c.detected == 0) {
        pr.precision_undefined = true;
    } else {
        pr.precision = static_cast<double>(c.matched) / static_cast<double>(c.detected);
    }
    if (n_alarms == 0) {
        pr.recall_undefined = true;
    } else {
        pr.recall = static_cast<double>(c.found) / static_cast<double>(n_alarms);
    }
    return pr;
}

std::vector<Timestamp> sorted_copy(std::vector<Timestamp> v) {
    std::sort(v.begin(), v.end());
    return v;
}

void check_grid(const std::vector<double>& grid, const char* name) {
    if (grid.empty()) throw ConfigError(std::string(name) + " grid is empty");
    if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError(std::string(name) + " grid is not sorted");
}

EvalReport sweep_core(const std::vector<SweepRow>& rows, std::size_t n_alarms, const std::vector<double>& g1,
                      const std::vector<double>& g2, int threads) {
    check_grid(g1, "tau1");
    check_grid(g2, "tau2");
    EvalReport rep;
    rep.tau1_grid = g1;
    rep.tau2_grid = g2;
    rep.surface.resize(g1.size() * g2.size());
    std::vector<Counts> counts(rep.surface.size());

    parallel_for(g1.size(), threads, [&](std::size_t i) {
        std::vector<std::size_t> cand;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (rows[k].score > g1[i]) cand.push_back(k);
        }
        std::vector<char> found(n_alarms);
        for (std::size_t j = 0; j < g2.size(); ++j) {
            Counts c;
            std::fill(found.begin(), found.end(), 0);
            for (std::size_t k : cand) {
                const auto& r = rows[k];
                if (r.sensor_max && *r.sensor_max < g2[j]) continue;
                ++c.detected;
                if (r.matched) ++c.matched;
                for (std::size_t a : r.alarms) {
                    if (!found[a]) {
                        found[a] = 1;
                        ++c.found;
                    }
                }
            }
            const std::size_t idx = i * g2.size() + j;
            counts[idx] = c;
            const auto pr = to_metrics(c, n_alarms);
            rep.surface[idx] = {g1[i], g2[j], pr.precision, pr.recall, f1(pr.precision, pr.recall)};
        }
    });

    std::size_t best = 0;
    for (std::size_t idx = 1; idx < rep.surface.size(); ++idx) {
        if (rep.surface[idx].f1 > rep.surface[best].f1) best = idx;
    }
    rep.tau1 = rep.surface[best].tau1;
    rep.tau2 = rep.surface[best].tau2;
    rep.metrics = to_metrics(counts[best], n_alarms);
    rep.f1 = rep.surface[best].f1;
    rep.detected = counts[best].detected;
    return rep;
}

} // namespace

PrecisionRecall range_precision_recall(const std::vector<Timestamp>& detected, const std::vector<Timestamp>& alarms,
                                       Timestamp delta) {
    if (delta <= 0) throw ConfigError("delta must be > 0");
    const auto d = sorted_copy(detected);
    const auto a = sorted_copy(alarms);
    Counts c;
    c.detected = d.size();
    for (Timestamp t : d) c.matched += has_within(a, t, delta) ? 1 : 0;
    for (Timestamp t : a) c.found += has_within(d, t, delta) ? 1 : 0;
    return to_metrics(c, a.size());
}

double f1(double precision, double recall) {
    if (precision + recall <= 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

void EvalConfig::validate() const {
    if (delta <= 0) throw ConfigError("delta must be > 0");
    if (grid_size < 2 && !(tau1_grid && tau2_grid)) throw ConfigError("grid_size must be >= 2");
    if (tau1_grid) check_grid(*tau1_grid, "tau1");
    if (tau2_grid) check_grid(*tau2_grid, "tau2");
}

std::vector<double> quantile_grid(std::vector<double> values, std::size_t count) {
    if (values.empty()) return {0.0};
    std::sort(values.begin(), values.end());
    const double mx = values.back();
    std::vector<double> grid{0.0, mx + 1e-9 * std::max(1.0, std::abs(mx))};
    const double last = static_cast<double>(values.size() - 1);
    for (std::size_t k = 0; k < count; ++k) {
        const double pos = count > 1 ? last * static_cast<double>(k) / static_cast<double>(count - 1) : 0.0;
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        grid.push_back(values[lo] + frac * (values[hi] - values[lo]));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

EvalReport evaluate_point(const ScoreSeries& op_scores, const ScoreSeries& sensor_scores,
                          const std::vector<Timestamp>& alarms, const DetectorConfig& cfg) {
    const DetectionResult det = detect(op_scores, sensor_scores, cfg);
    EvalReport rep;
    rep.metrics = range_precision_recall(det.detected, alarms, cfg.delta);
    rep.f1 = f1(rep.metrics.precision, rep.metrics.recall);
    rep.tau1 = cfg.tau1;
    rep.tau2 = cfg.tau2;
    rep.detected = det.detected.size();
    rep.tau1_grid = {cfg.tau1};
    rep.tau2_grid = {cfg.tau2};
    rep.surface = {{cfg.tau1, cfg.tau2, rep.metrics.precision, rep.metrics.recall, rep.f1}};
    return rep;
}

EvalReport best_f1_sweep(const ScoreSeries& op_scores, const ScoreSeries& sensor_scores,
                         const std::vector<Timestamp>& alarms, const std::vector<double>& tau1_grid,
                         const std::vector<double>& tau2_grid, Timestamp delta, Timestamp eta, bool inclusive,
                         int threads) {
    if (delta <= 0) throw ConfigError("delta must be > 0");
    const auto a = sorted_copy(alarms);
    const auto rows = sweep_rows(op_scores, &sensor_scores, a, delta, eta, inclusive);
    return sweep_core(rows, a.size(), tau1_grid, tau2_grid, threads);
}

EvalReport best_f1_sweep(const ScoreSeries& op_scores, const ScoreSeries& sensor_scores,
                         const std::vector<Timestamp>& alarms, const EvalConfig& cfg, Timestamp eta, bool inclusive,
                         int threads) {
    cfg.validate();
    const auto g1 = cfg.tau1_grid ? *cfg.tau1_grid : quantile_grid(op_scores.scores, cfg.grid_size);
    const auto g2 = cfg.tau2_grid ? *cfg.tau2_grid : quantile_grid(sensor_scores.scores, cfg.grid_size);
    return best_f1_sweep(op_scores, sensor_scores, alarms, g1, g2, cfg.delta, eta, inclusive, threads);
}

EvalReport single_threshold_sweep(const ScoreSeries& scores, const std::vector<Timestamp>& alarms,
                                  const EvalConfig& cfg) {
    cfg.validate();
    const auto a = sorted_copy(alarms);
    const auto rows = sweep_rows(scores, nullptr, a, cfg.delta, 0, true);
    const auto g1 = cfg.tau1_grid ? *cfg.tau1_grid : quantile_grid(scores.scores, cfg.grid_size);
    return sweep_core(rows, a.size(), g1, {0.0}, 1);
}

nlohmann::json EvalReport::to_json() const {
    return {{"precision", metrics.precision},
            {"recall", metrics.recall},
            {"f1", f1},
            {"precision_undefined", metrics.precision_undefined},
            {"recall_undefined", metrics.recall_undefined},
            {"tau1", tau1},
            {"tau2", tau2},
            {"detected", detected},
            {"tau1_grid", tau1_grid},
            {"tau2_grid", tau2_grid}};
}

void save_surface_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "tau1,tau2,precision,recall,f1\n";
    for (const auto& p : report.surface) {
        out << format_double(p.tau1) << ',' << format_double(p.tau2) << ',' << format_double(p.precision) << ','
            << format_double(p.recall) << ',' << format_double(p.f1) << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace tdad
