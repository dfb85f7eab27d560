#include "tdad/scoring.hpp"

#include "tdad/error.hpp"
#include "tdad/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tdad {

std::string_view to_string(Aggregation a) {
    switch (a) {
    case Aggregation::max: return "max";
    case Aggregation::min: return "min";
    case Aggregation::mean: return "mean";
    }
    return "?";
}

Aggregation parse_aggregation(std::string_view name) {
    if (name == "max") return Aggregation::max;
    if (name == "min") return Aggregation::min;
    if (name == "mean") return Aggregation::mean;
    throw ConfigError("unknown aggregation '" + std::string(name) + "'");
}

void WindowConfig::validate() const {
    if (!(step > 0 && step < size)) {
        throw ConfigError("window config requires 0 < step < size (got size " + std::to_string(size) + ", step " +
                          std::to_string(step) + ")");
    }
}

std::vector<Eigen::Index> window_offsets(Eigen::Index length, const WindowConfig& cfg) {
    cfg.validate();
    if (length < cfg.size) {
        throw ValidationError("series of length " + std::to_string(length) + " is shorter than the window size " +
                              std::to_string(cfg.size));
    }
    std::vector<Eigen::Index> offsets;
    for (Eigen::Index off = 0; off + cfg.size <= length; off += cfg.step) offsets.push_back(off);
    return offsets;
}

std::vector<WindowSequence> make_windows(const SensorSeries& sensor, const WindowConfig& cfg) {
    std::vector<WindowSequence> out;
    const auto offsets = window_offsets(sensor.length(), cfg);
    for (std::size_t j = 0; j < offsets.size(); ++j) {
        out.push_back({j, offsets[j], sensor.timestamp(offsets[j])});
    }
    return out;
}

std::pair<std::size_t, std::size_t> windows_containing(Eigen::Index row, Eigen::Index length,
                                                       const WindowConfig& cfg) {
    if (length < cfg.size || row < 0 || row >= length) return {0, 0};
    const Eigen::Index count = (length - cfg.size) / cfg.step + 1;
    // Window j contains row iff j*step <= row < j*step + w.
    const Eigen::Index last = std::min(count - 1, row / cfg.step);
    const Eigen::Index lo = row - cfg.size + 1;
    const Eigen::Index first = lo <= 0 ? 0 : (lo + cfg.step - 1) / cfg.step;
    if (first > last) return {0, 0};
    return {static_cast<std::size_t>(first), static_cast<std::size_t>(last + 1)};
}

nn::Mat window_slice(const Matrix& data, Eigen::Index offset, Eigen::Index w) {
    return data.middleRows(offset, w);
}

std::vector<nn::Mat> collect_windows(const Matrix& data, const WindowConfig& cfg) {
    std::vector<nn::Mat> out;
    for (Eigen::Index off : window_offsets(data.rows(), cfg)) out.push_back(window_slice(data, off, cfg.size));
    return out;
}

ScoreSeries score_rows(const nn::MlpAutoencoder& model, const std::vector<Timestamp>& timestamps,
                       const Matrix& data) {
    if (data.cols() != model.input_dim()) {
        throw ModelError("data has " + std::to_string(data.cols()) + " features, model expects " +
                         std::to_string(model.input_dim()));
    }
    ScoreSeries s;
    s.timestamps = timestamps;
    s.scores.resize(timestamps.size());
    if (data.rows() == 0) return s;
    const nn::Mat x = data.transpose();
    const nn::Mat rec = nn::mlp_forward(model, x);
    for (Eigen::Index r = 0; r < x.cols(); ++r) {
        s.scores[static_cast<std::size_t>(r)] = (x.col(r) - rec.col(r)).norm();
    }
    return s;
}

ScoreSeries score_opcycle(const nn::MlpAutoencoder& model, const OperationCycleSeries& op) {
    return score_rows(model, op.timestamps, op.data);
}

ScoreSeries score_windows(const nn::LstmEncoderDecoder& model, const std::vector<Timestamp>& timestamps,
                          const Matrix& data, const WindowConfig& cfg, int threads) {
    cfg.validate();
    if (cfg.size != model.window) {
        throw ModelError("window size " + std::to_string(cfg.size) + " does not match the model's " +
                         std::to_string(model.window));
    }
    if (data.cols() != model.input_dim()) {
        throw ModelError("data has " + std::to_string(data.cols()) + " features, model expects " +
                         std::to_string(model.input_dim()));
    }
    const Eigen::Index L = data.rows();
    const Eigen::Index w = cfg.size;
    const auto offsets = window_offsets(L, cfg);

    std::vector<double> agg(static_cast<std::size_t>(L));
    std::vector<int> count(static_cast<std::size_t>(L), 0);
    const double init = cfg.aggregation == Aggregation::min ? std::numeric_limits<double>::infinity()
                        : cfg.aggregation == Aggregation::max ? -std::numeric_limits<double>::infinity()
                                                              : 0.0;
    std::fill(agg.begin(), agg.end(), init);

    constexpr std::size_t kBatch = 8;
    constexpr std::size_t kBatchesPerRound = 8;
    const std::size_t n_batches = (offsets.size() + kBatch - 1) / kBatch;
    for (std::size_t round = 0; round < n_batches; round += kBatchesPerRound) {
        const std::size_t in_round = std::min(kBatchesPerRound, n_batches - round);
        // residual norms per batch: [batch][member * w + t]
        std::vector<std::vector<double>> norms(in_round);
        parallel_for(in_round, threads, [&](std::size_t k) {
            const std::size_t first = (round + k) * kBatch;
            const std::size_t last = std::min(offsets.size(), first + kBatch);
            std::vector<nn::Mat> slices;
            for (std::size_t j = first; j < last; ++j) slices.push_back(window_slice(data, offsets[j], w));
            std::vector<const nn::Mat*> ptrs;
            for (const auto& s : slices) ptrs.push_back(&s);
            const nn::Sequence input = nn::to_batch(ptrs);
            const nn::Sequence out = nn::lstm_forward(model, input, nn::Mode::inference);
            auto& n = norms[k];
            n.resize((last - first) * static_cast<std::size_t>(w));
            for (Eigen::Index t = 0; t < w; ++t) {
                const auto ts = static_cast<std::size_t>(t);
                const nn::Mat diff = input[ts] - out[ts];
                for (std::size_t b = 0; b < last - first; ++b) {
                    n[b * static_cast<std::size_t>(w) + ts] = diff.col(static_cast<Eigen::Index>(b)).norm();
                }
            }
        });
        for (std::size_t k = 0; k < in_round; ++k) {
            const std::size_t first = (round + k) * kBatch;
            const std::size_t members = norms[k].size() / static_cast<std::size_t>(w);
            for (std::size_t b = 0; b < members; ++b) {
                const auto off = static_cast<std::size_t>(offsets[first + b]);
                for (std::size_t t = 0; t < static_cast<std::size_t>(w); ++t) {
                    const double v = norms[k][b * static_cast<std::size_t>(w) + t];
                    double& a = agg[off + t];
                    switch (cfg.aggregation) {
                    case Aggregation::max: a = std::max(a, v); break;
                    case Aggregation::min: a = std::min(a, v); break;
                    case Aggregation::mean: a += v; break;
                    }
                    ++count[off + t];
                }
            }
        }
    }

    ScoreSeries s;
    for (Eigen::Index r = 0; r < L; ++r) {
        const auto rs = static_cast<std::size_t>(r);
        if (count[rs] == 0) continue;
        s.timestamps.push_back(timestamps[rs]);
        s.scores.push_back(cfg.aggregation == Aggregation::mean ? agg[rs] / count[rs] : agg[rs]);
    }
    return s;
}

ScoreSeries score_sensor(const nn::LstmEncoderDecoder& model, const SensorSeries& sensor, const WindowConfig& cfg,
                         int threads) {
    std::vector<Timestamp> ts(static_cast<std::size_t>(sensor.length()));
    for (Eigen::Index r = 0; r < sensor.length(); ++r) ts[static_cast<std::size_t>(r)] = sensor.timestamp(r);
    return score_windows(model, ts, sensor.data, cfg, threads);
}

} // namespace tdad
