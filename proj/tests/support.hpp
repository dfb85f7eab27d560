#pragma once

// Shared fixtures for the unit and acceptance tests: scratch directories,
// hand-rolled random generators and brute-force oracles. The oracles do not
// call into the library code they check.

#include "tdad/timeseries.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace tdad::test {

using Rng = std::mt19937_64;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("tdad-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// --- generators ------------------------------------------------------------

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

// `count` distinct sorted timestamps in [lo, hi].
inline std::vector<Timestamp> random_times(Rng& rng, std::size_t count, Timestamp lo, Timestamp hi) {
    std::vector<Timestamp> out;
    const auto span = static_cast<std::size_t>(hi - lo + 1);
    count = std::min(count, span);
    while (out.size() < count) {
        out.push_back(uniform_int(rng, lo, hi));
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }
    return out;
}

// Scores drawn from a small value set so ties are common.
inline ScoreSeries random_scores(Rng& rng, const std::vector<Timestamp>& times, int levels) {
    ScoreSeries s;
    s.timestamps = times;
    for (std::size_t k = 0; k < times.size(); ++k) {
        s.scores.push_back(levels > 0 ? static_cast<double>(uniform_int(rng, 0, levels)) / levels
                                      : uniform(rng, 0.0, 1.0));
    }
    return s;
}

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double hole_rate = 0.0) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = (r > 0 && coin(rng, hole_rate)) ? kNaN : uniform(rng, -10.0, 10.0);
        }
    }
    return m;
}

inline std::vector<std::string> names(const std::string& prefix, Eigen::Index n) {
    std::vector<std::string> out;
    for (Eigen::Index k = 0; k < n; ++k) out.push_back(prefix + std::to_string(k));
    return out;
}

// Valid raw dataset with holes (never in the first row), occasional constant
// columns and labels inside the span.
inline HeterogeneousDataset random_dataset(Rng& rng) {
    HeterogeneousDataset ds;
    const auto length = uniform_int(rng, 8, 300);
    ds.sensor.start = uniform_int(rng, 0, 1000);
    const auto ds_cols = uniform_int(rng, 1, 6);
    ds.sensor.features = names("s", ds_cols);
    ds.sensor.data = random_matrix(rng, length, ds_cols, uniform(rng, 0.0, 0.3));

    const auto n_op = static_cast<std::size_t>(uniform_int(rng, 2, std::max<std::int64_t>(2, length / 3)));
    ds.op.timestamps = random_times(rng, n_op, ds.sensor.start, ds.sensor.end() - 1);
    if (ds.op.timestamps.front() != ds.sensor.start) ds.op.timestamps.front() = ds.sensor.start;
    const auto do_cols = uniform_int(rng, 1, 6);
    ds.op.features = names("o", do_cols);
    ds.op.data = random_matrix(rng, static_cast<Eigen::Index>(ds.op.timestamps.size()), do_cols,
                               uniform(rng, 0.0, 0.3));
    if (coin(rng, 0.3)) ds.op.data.col(0).setConstant(3.25);

    AlarmLabels labels;
    labels.points = random_times(rng, static_cast<std::size_t>(uniform_int(rng, 0, 5)), ds.sensor.start,
                                 ds.sensor.end() - 1);
    ds.labels = labels;
    return ds;
}

// --- oracles -----------------------------------------------------------------

inline std::int64_t distance(Timestamp a, Timestamp b) { return a > b ? a - b : b - a; }

struct NaivePR {
    double precision = 0.0;
    double recall = 0.0;
    bool precision_undefined = false;
    bool recall_undefined = false;
};

// Pairwise check of every detection against every alarm.
inline NaivePR naive_precision_recall(const std::vector<Timestamp>& detected, const std::vector<Timestamp>& alarms,
                                      Timestamp delta) {
    NaivePR out;
    std::size_t hit_d = 0;
    for (Timestamp d : detected) {
        bool hit = false;
        for (Timestamp a : alarms) hit = hit || distance(d, a) <= delta;
        hit_d += hit ? 1 : 0;
    }
    std::size_t hit_a = 0;
    for (Timestamp a : alarms) {
        bool hit = false;
        for (Timestamp d : detected) hit = hit || distance(d, a) <= delta;
        hit_a += hit ? 1 : 0;
    }
    if (detected.empty()) {
        out.precision_undefined = true;
    } else {
        out.precision = static_cast<double>(hit_d) / static_cast<double>(detected.size());
    }
    if (alarms.empty()) {
        out.recall_undefined = true;
    } else {
        out.recall = static_cast<double>(hit_a) / static_cast<double>(alarms.size());
    }
    return out;
}

inline double naive_f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline std::vector<Timestamp> naive_stage1(const ScoreSeries& op, double tau1) {
    std::vector<Timestamp> out;
    for (std::size_t k = 0; k < op.size(); ++k) {
        if (op.scores[k] > tau1) out.push_back(op.timestamps[k]);
    }
    return out;
}

// Scans every sensor entry for membership in the candidate's neighbourhood.
inline std::optional<double> naive_window_max(const ScoreSeries& sensor, Timestamp t, Timestamp eta,
                                              bool inclusive = true) {
    std::optional<double> best;
    for (std::size_t k = 0; k < sensor.size(); ++k) {
        const auto gap = distance(sensor.timestamps[k], t);
        const bool inside = inclusive ? gap <= eta : gap < eta;
        if (inside && (!best || sensor.scores[k] > *best)) best = sensor.scores[k];
    }
    return best;
}

struct NaiveDetection {
    std::vector<Timestamp> detected;
    std::vector<Timestamp> filtered;
};

inline NaiveDetection naive_stage2(const std::vector<Timestamp>& candidates, const ScoreSeries& sensor, double tau2,
                                   Timestamp eta, bool inclusive = true) {
    NaiveDetection out;
    for (Timestamp t : candidates) {
        const auto m = naive_window_max(sensor, t, eta, inclusive);
        if (m && *m < tau2) {
            out.filtered.push_back(t);
        } else {
            out.detected.push_back(t);
        }
    }
    return out;
}

struct NaiveOptimum {
    double tau1 = 0.0;
    double tau2 = 0.0;
    double f1 = -1.0;
    double precision = 0.0;
    double recall = 0.0;
};

// Full recomputation at every grid point; the first strictly better point wins,
// so ties resolve to the smaller tau1 and then the smaller tau2.
inline NaiveOptimum naive_sweep(const ScoreSeries& op, const ScoreSeries& sensor, const std::vector<Timestamp>& alarms,
                                std::vector<double> g1, std::vector<double> g2, Timestamp delta, Timestamp eta) {
    std::sort(g1.begin(), g1.end());
    std::sort(g2.begin(), g2.end());
    NaiveOptimum best;
    for (double t1 : g1) {
        for (double t2 : g2) {
            const auto det = naive_stage2(naive_stage1(op, t1), sensor, t2, eta);
            const auto pr = naive_precision_recall(det.detected, alarms, delta);
            const double f = naive_f1(pr.precision, pr.recall);
            if (f > best.f1) best = {t1, t2, f, pr.precision, pr.recall};
        }
    }
    return best;
}

// Column forward fill by scanning backwards from each cell.
inline Matrix naive_forward_fill(const Matrix& m) {
    Matrix out = m;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            if (!std::isnan(m(r, c))) continue;
            for (Eigen::Index k = r - 1; k >= 0; --k) {
                if (!std::isnan(m(k, c))) {
                    out(r, c) = m(k, c);
                    break;
                }
            }
        }
    }
    return out;
}

inline bool same_bits(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        const double x = a.data()[k];
        const double y = b.data()[k];
        if (std::isnan(x) != std::isnan(y)) return false;
        if (!std::isnan(x) && x != y) return false;
    }
    return true;
}

// A run configuration small enough to train in a few seconds.
inline nlohmann::json small_run_json() {
    return {
        {"seed", 3},
        {"data",
         {{"synth", {{"duration", 14'400}, {"type_a", 2}, {"type_b", 2}, {"glitches", 1}, {"unplanned_per_day", 0.0}}}}},
        {"mlp", {{"epochs", 20}}},
        {"lstm", {{"epochs", 2}, {"hidden", 8}, {"layers", 1}, {"batch_size", 16}}},
        {"window", {{"size", 30}, {"step", 15}}},
        {"eval", {{"grid_size", 6}}},
        {"bench", {{"seeds", {1}}}},
    };
}

} // namespace tdad::test
