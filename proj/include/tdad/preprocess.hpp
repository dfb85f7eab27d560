#pragma once

#include "tdad/timeseries.hpp"

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace tdad {

// --- forward fill ----------------------------------------------------------

// Replaces every NaN with the most recent earlier observed value in its column.
// Throws PreprocessError naming the feature when the first row has a hole.
void forward_fill(Matrix& data, const std::vector<std::string>& features);

SensorSeries forward_fill(SensorSeries series);
OperationCycleSeries forward_fill(OperationCycleSeries series);

// --- static feature removal --------------------------------------------------

// Indices of columns whose values never change. With epsilon > 0 a column
// whose population variance is <= epsilon also counts as static.
std::vector<Eigen::Index> static_columns(const Matrix& data, double epsilon = 0.0);

template <typename Series>
struct StaticDrop {
    Series series;
    std::vector<std::string> removed;
};

StaticDrop<SensorSeries> drop_static(SensorSeries series, double epsilon = 0.0);
StaticDrop<OperationCycleSeries> drop_static(OperationCycleSeries series, double epsilon = 0.0);

// Keeps only the named columns, in the order of `series.features`.
SensorSeries remove_features(SensorSeries series, const std::vector<std::string>& removed);
OperationCycleSeries remove_features(OperationCycleSeries series,
                                     const std::vector<std::string>& removed);

// --- min-max normalization -----------------------------------------------

struct FeatureRange {
    std::string feature;
    double min = 0.0;
    double max = 1.0;
};

struct MinMaxParams {
    std::vector<FeatureRange> ranges;

    nlohmann::json to_json() const;
    static MinMaxParams from_json(const nlohmann::json& j);
};

MinMaxParams fit_minmax(const Matrix& data, const std::vector<std::string>& features);
MinMaxParams fit_minmax(const SensorSeries& train);
MinMaxParams fit_minmax(const OperationCycleSeries& train);

// v -> (v - min) / (max - min), unclamped.
void apply_minmax(Matrix& data, const std::vector<std::string>& features, const MinMaxParams& params);
SensorSeries apply_minmax(SensorSeries series, const MinMaxParams& params);
OperationCycleSeries apply_minmax(OperationCycleSeries series, const MinMaxParams& params);

// --- chronological split ---------------------------------------------------

struct SplitSpec {
    Timestamp boundary = 0;
};

// Train receives every record with t < boundary, test the rest. The boundary
// must lie strictly inside the sensor span.
std::pair<HeterogeneousDataset, HeterogeneousDataset>
chronological_split(const HeterogeneousDataset& dataset, SplitSpec spec);

// --- full preprocessing pipeline ---------------------------------------------

struct PreprocessOptions {
    // Absolute split timestamp. When unset, `split_fraction` of the sensor span is used.
    std::optional<Timestamp> split_boundary;
    double split_fraction = 0.5;
    double static_epsilon = 0.0;
};

// Everything needed to transform raw data the same way at scoring time.
struct PreprocessState {
    Timestamp boundary = 0;
    std::vector<std::string> op_removed;
    std::vector<std::string> sensor_removed;
    MinMaxParams op_params;
    MinMaxParams sensor_params;

    nlohmann::json to_json() const;
    static PreprocessState from_json(const nlohmann::json& j);
};

struct PreparedData {
    HeterogeneousDataset train;
    HeterogeneousDataset test;
    PreprocessState state;
};

// Explicit boundary, or sensor start + floor(fraction * sensor length).
Timestamp split_boundary(const SensorSeries& sensor, const PreprocessOptions& options);

// impute -> drop static (decided on the training portion) -> split -> fit on
// train -> normalize both sides.
PreparedData prepare(const HeterogeneousDataset& raw, const PreprocessOptions& options);

// Re-applies a fitted state to a raw dataset (imputation, column removal,
// normalization). No split is performed.
HeterogeneousDataset apply_state(const HeterogeneousDataset& raw, const PreprocessState& state);

} // namespace tdad
