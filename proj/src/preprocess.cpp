#include "tdad/preprocess.hpp"

#include "tdad/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace tdad {

void forward_fill(Matrix& data, const std::vector<std::string>& features) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
        if (data.rows() > 0 && std::isnan(data(0, c))) {
            throw PreprocessError("cannot impute feature '" + features.at(static_cast<std::size_t>(c)) +
                                  "': first row is missing and has no predecessor");
        }
        for (Eigen::Index r = 1; r < data.rows(); ++r) {
            if (std::isnan(data(r, c))) data(r, c) = data(r - 1, c);
        }
    }
}

SensorSeries forward_fill(SensorSeries series) {
    if (series.length() == 0) {
        throw PreprocessError("cannot impute an empty sensor series");
    }
    forward_fill(series.data, series.features);
    series.gaps.clear();
    return series;
}

OperationCycleSeries forward_fill(OperationCycleSeries series) {
    if (series.length() == 0) {
        throw PreprocessError("cannot impute an empty operation-cycle series");
    }
    forward_fill(series.data, series.features);
    return series;
}

std::vector<Eigen::Index> static_columns(const Matrix& data, double epsilon) {
    std::vector<Eigen::Index> out;
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
        const auto col = data.col(c);
        bool is_static = true;
        if (data.rows() > 0) {
            const double first = col(0);
            for (Eigen::Index r = 1; r < data.rows(); ++r) {
                if (col(r) != first) {
                    is_static = false;
                    break;
                }
            }
        }
        if (!is_static && epsilon > 0.0) {
            const double mean = col.mean();
            const double var = (col.array() - mean).square().mean();
            is_static = var <= epsilon;
        }
        if (is_static) out.push_back(c);
    }
    return out;
}

namespace {

template <typename Series>
Series remove_columns(Series series, const std::vector<std::string>& removed) {
    if (removed.empty()) return series;
    const std::unordered_set<std::string> drop(removed.begin(), removed.end());
    std::vector<Eigen::Index> keep;
    std::vector<std::string> kept_names;
    for (std::size_t c = 0; c < series.features.size(); ++c) {
        if (!drop.contains(series.features[c])) {
            keep.push_back(static_cast<Eigen::Index>(c));
            kept_names.push_back(series.features[c]);
        }
    }
    if (keep.size() + drop.size() != series.features.size()) {
        throw PreprocessError("removal list names a feature that is not present");
    }
    Matrix data(series.data.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        data.col(static_cast<Eigen::Index>(k)) = series.data.col(keep[k]);
    }
    series.data = std::move(data);
    series.features = std::move(kept_names);
    return series;
}

template <typename Series>
StaticDrop<Series> drop_static_impl(Series series, double epsilon) {
    std::vector<std::string> removed;
    for (Eigen::Index c : static_columns(series.data, epsilon)) {
        removed.push_back(series.features[static_cast<std::size_t>(c)]);
    }
    if (removed.size() == series.features.size()) {
        throw PreprocessError("no informative features: every feature is static");
    }
    Series kept = remove_columns(std::move(series), removed);
    return {std::move(kept), std::move(removed)};
}

} // namespace

StaticDrop<SensorSeries> drop_static(SensorSeries series, double epsilon) {
    return drop_static_impl(std::move(series), epsilon);
}

StaticDrop<OperationCycleSeries> drop_static(OperationCycleSeries series, double epsilon) {
    return drop_static_impl(std::move(series), epsilon);
}

SensorSeries remove_features(SensorSeries series, const std::vector<std::string>& removed) {
    return remove_columns(std::move(series), removed);
}

OperationCycleSeries remove_features(OperationCycleSeries series,
                                     const std::vector<std::string>& removed) {
    return remove_columns(std::move(series), removed);
}

nlohmann::json MinMaxParams::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : ranges) {
        arr.push_back({{"feature", r.feature}, {"min", r.min}, {"max", r.max}});
    }
    return arr;
}

MinMaxParams MinMaxParams::from_json(const nlohmann::json& j) {
    MinMaxParams p;
    for (const auto& item : j) {
        FeatureRange r{item.at("feature").get<std::string>(), item.at("min").get<double>(),
                       item.at("max").get<double>()};
        if (!(r.max > r.min)) {
            throw PreprocessError("min-max params for '" + r.feature + "' have max <= min");
        }
        p.ranges.push_back(std::move(r));
    }
    return p;
}

MinMaxParams fit_minmax(const Matrix& data, const std::vector<std::string>& features) {
    if (data.rows() == 0) {
        throw PreprocessError("cannot fit min-max parameters on empty data");
    }
    MinMaxParams p;
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
        const double lo = data.col(c).minCoeff();
        const double hi = data.col(c).maxCoeff();
        const auto& name = features.at(static_cast<std::size_t>(c));
        if (std::isnan(lo) || std::isnan(hi)) {
            throw PreprocessError("feature '" + name + "' has missing values; impute first");
        }
        if (hi == lo) {
            throw PreprocessError("feature '" + name + "' is constant; drop static features first");
        }
        p.ranges.push_back({name, lo, hi});
    }
    return p;
}

MinMaxParams fit_minmax(const SensorSeries& train) { return fit_minmax(train.data, train.features); }

MinMaxParams fit_minmax(const OperationCycleSeries& train) {
    return fit_minmax(train.data, train.features);
}

void apply_minmax(Matrix& data, const std::vector<std::string>& features, const MinMaxParams& params) {
    std::unordered_map<std::string, const FeatureRange*> by_name;
    for (const auto& r : params.ranges) by_name.emplace(r.feature, &r);
    if (features.size() != params.ranges.size()) {
        throw PreprocessError("feature set does not match min-max parameters");
    }
    for (std::size_t c = 0; c < features.size(); ++c) {
        const auto it = by_name.find(features[c]);
        if (it == by_name.end()) {
            throw PreprocessError("unknown feature '" + features[c] + "' for min-max parameters");
        }
        const double lo = it->second->min;
        const double span = it->second->max - lo;
        auto col = data.col(static_cast<Eigen::Index>(c));
        col = (col.array() - lo) / span;
    }
}

SensorSeries apply_minmax(SensorSeries series, const MinMaxParams& params) {
    apply_minmax(series.data, series.features, params);
    return series;
}

OperationCycleSeries apply_minmax(OperationCycleSeries series, const MinMaxParams& params) {
    apply_minmax(series.data, series.features, params);
    return series;
}

namespace {

OperationCycleSeries op_rows(const OperationCycleSeries& op, std::size_t begin, std::size_t end) {
    OperationCycleSeries out;
    out.features = op.features;
    out.timestamps.assign(op.timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                          op.timestamps.begin() + static_cast<std::ptrdiff_t>(end));
    out.data = op.data.middleRows(static_cast<Eigen::Index>(begin),
                                  static_cast<Eigen::Index>(end - begin));
    return out;
}

SensorSeries sensor_rows(const SensorSeries& s, Timestamp from, Timestamp to) {
    SensorSeries out;
    out.features = s.features;
    out.start = from;
    out.data = s.data.middleRows(static_cast<Eigen::Index>(from - s.start),
                                 static_cast<Eigen::Index>(to - from));
    for (Timestamp g : s.gaps) {
        if (g >= from && g < to) out.gaps.push_back(g);
    }
    return out;
}

std::size_t lower_index(const std::vector<Timestamp>& ts, Timestamp boundary) {
    return static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), boundary) - ts.begin());
}

} // namespace

std::pair<HeterogeneousDataset, HeterogeneousDataset>
chronological_split(const HeterogeneousDataset& dataset, SplitSpec spec) {
    const Timestamp lo = dataset.sensor.start;
    const Timestamp hi = dataset.sensor.end();
    if (!(spec.boundary > lo && spec.boundary < hi)) {
        throw PreprocessError("split boundary " + std::to_string(spec.boundary) +
                              " is not strictly inside the span [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + ")");
    }
    HeterogeneousDataset train;
    HeterogeneousDataset test;
    const std::size_t op_cut = lower_index(dataset.op.timestamps, spec.boundary);
    train.op = op_rows(dataset.op, 0, op_cut);
    test.op = op_rows(dataset.op, op_cut, dataset.op.timestamps.size());
    train.sensor = sensor_rows(dataset.sensor, lo, spec.boundary);
    test.sensor = sensor_rows(dataset.sensor, spec.boundary, hi);
    if (dataset.labels) {
        const auto& pts = dataset.labels->points;
        const std::size_t cut = lower_index(pts, spec.boundary);
        train.labels = AlarmLabels{{pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(cut)}};
        test.labels = AlarmLabels{{pts.begin() + static_cast<std::ptrdiff_t>(cut), pts.end()}};
    }
    return {std::move(train), std::move(test)};
}

nlohmann::json PreprocessState::to_json() const {
    return {{"version", 1},
            {"boundary", boundary},
            {"op", {{"removed", op_removed}, {"minmax", op_params.to_json()}}},
            {"sensor", {{"removed", sensor_removed}, {"minmax", sensor_params.to_json()}}}};
}

PreprocessState PreprocessState::from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != 1) {
        throw PreprocessError("unsupported preprocessing sidecar version");
    }
    PreprocessState s;
    s.boundary = j.at("boundary").get<Timestamp>();
    s.op_removed = j.at("op").at("removed").get<std::vector<std::string>>();
    s.op_params = MinMaxParams::from_json(j.at("op").at("minmax"));
    s.sensor_removed = j.at("sensor").at("removed").get<std::vector<std::string>>();
    s.sensor_params = MinMaxParams::from_json(j.at("sensor").at("minmax"));
    return s;
}

Timestamp split_boundary(const SensorSeries& sensor, const PreprocessOptions& options) {
    if (options.split_boundary) return *options.split_boundary;
    const auto span = static_cast<double>(sensor.length());
    return sensor.start + static_cast<Timestamp>(std::floor(span * options.split_fraction));
}

PreparedData prepare(const HeterogeneousDataset& raw, const PreprocessOptions& options) {
    raw.validate();
    HeterogeneousDataset filled;
    filled.op = forward_fill(raw.op);
    filled.sensor = forward_fill(raw.sensor);
    filled.labels = raw.labels;

    const Timestamp boundary = split_boundary(filled.sensor, options);

    auto [train, test] = chronological_split(filled, SplitSpec{boundary});
    if (train.op.length() == 0) {
        throw PreprocessError("training split contains no operation-cycle rows");
    }

    PreparedData out;
    out.state.boundary = boundary;
    auto op_drop = drop_static(std::move(train.op), options.static_epsilon);
    auto sensor_drop = drop_static(std::move(train.sensor), options.static_epsilon);
    out.state.op_removed = std::move(op_drop.removed);
    out.state.sensor_removed = std::move(sensor_drop.removed);
    out.state.op_params = fit_minmax(op_drop.series);
    out.state.sensor_params = fit_minmax(sensor_drop.series);

    out.train.op = apply_minmax(std::move(op_drop.series), out.state.op_params);
    out.train.sensor = apply_minmax(std::move(sensor_drop.series), out.state.sensor_params);
    out.train.labels = std::move(train.labels);
    out.test.op = apply_minmax(remove_features(std::move(test.op), out.state.op_removed),
                               out.state.op_params);
    out.test.sensor = apply_minmax(remove_features(std::move(test.sensor), out.state.sensor_removed),
                                   out.state.sensor_params);
    out.test.labels = std::move(test.labels);
    return out;
}

HeterogeneousDataset apply_state(const HeterogeneousDataset& raw, const PreprocessState& state) {
    raw.validate();
    HeterogeneousDataset out;
    out.op = apply_minmax(remove_features(forward_fill(raw.op), state.op_removed), state.op_params);
    out.sensor = apply_minmax(remove_features(forward_fill(raw.sensor), state.sensor_removed),
                              state.sensor_params);
    out.labels = raw.labels;
    return out;
}

} // namespace tdad
