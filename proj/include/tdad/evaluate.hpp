#pragma once

#include "tdad/detector.hpp"
#include "tdad/timeseries.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <vector>

namespace tdad {

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
    bool precision_undefined = false;  // no detections; precision reported as 0
    bool recall_undefined = false;     // no alarms; recall reported as 0

    friend bool operator==(const PrecisionRecall&, const PrecisionRecall&) = default;
};

// A detection counts toward precision if some alarm lies within delta of it
// (inclusive); an alarm counts toward recall if some detection lies within
// delta of it. No one-to-one matching.
PrecisionRecall range_precision_recall(const std::vector<Timestamp>& detected, const std::vector<Timestamp>& alarms,
                                       Timestamp delta);

double f1(double precision, double recall);

struct EvalConfig {
    Timestamp delta = 600;
    std::size_t grid_size = 200;             // quantile points per threshold axis
    std::optional<std::vector<double>> tau1_grid;  // explicit grids override the quantile grids
    std::optional<std::vector<double>> tau2_grid;

    void validate() const;
};

// `count` uniform quantiles (linear interpolation) of `values`, plus 0 and
// max + eps; sorted ascending, duplicates removed.
std::vector<double> quantile_grid(std::vector<double> values, std::size_t count);

struct SurfacePoint {
    double tau1 = 0.0;
    double tau2 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    PrecisionRecall metrics;
    double f1 = 0.0;
    double tau1 = 0.0;
    double tau2 = 0.0;
    std::size_t detected = 0;
    std::vector<double> tau1_grid;
    std::vector<double> tau2_grid;
    std::vector<SurfacePoint> surface;  // row-major over (tau1_grid, tau2_grid)

    nlohmann::json to_json() const;
};

// Metrics of detect() at one threshold pair.
EvalReport evaluate_point(const ScoreSeries& op_scores, const ScoreSeries& sensor_scores,
                          const std::vector<Timestamp>& alarms, const DetectorConfig& cfg);

// Exhaustive search over tau1_grid x tau2_grid for the best F1. Ties go to the
// smaller tau1, then the smaller tau2. Grids must be ascending; throws
// ConfigError on an empty or unsorted grid.
EvalReport best_f1_sweep(const ScoreSeries& op_scores, const ScoreSeries& sensor_scores,
                         const std::vector<Timestamp>& alarms, const std::vector<double>& tau1_grid,
                         const std::vector<double>& tau2_grid, Timestamp delta, Timestamp eta,
                         bool inclusive = true, int threads = 1);

// Same, with grids from cfg (explicit or quantiles of the observed scores).
EvalReport best_f1_sweep(const ScoreSeries& op_scores, const ScoreSeries& sensor_scores,
                         const std::vector<Timestamp>& alarms, const EvalConfig& cfg, Timestamp eta,
                         bool inclusive = true, int threads = 1);

// Best F1 of "score > tau" over a single threshold grid (tau2 fixed at 0).
EvalReport single_threshold_sweep(const ScoreSeries& scores, const std::vector<Timestamp>& alarms,
                                  const EvalConfig& cfg);

void save_surface_csv(const EvalReport& report, const std::filesystem::path& path);

} // namespace tdad
