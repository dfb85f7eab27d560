#pragma once

#include "tdad/nn/lstm.hpp"
#include "tdad/nn/mlp.hpp"
#include "tdad/timeseries.hpp"

#include <string_view>
#include <vector>

namespace tdad {

enum class Aggregation { max, min, mean };

std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view name);

struct WindowConfig {
    Eigen::Index size = 180;  // rows per window
    Eigen::Index step = 60;   // 0 < step < size
    Aggregation aggregation = Aggregation::max;

    void validate() const;
};

/// Window j covers rows [offset, offset + w) of the series it was cut from.
struct WindowSequence {
    std::size_t index = 0;
    Eigen::Index offset = 0;
    Timestamp start = 0;
};

// Row offsets 0, step, 2*step, ... of every full window; a trailing partial
// window is dropped. Throws ValidationError when length < w.
std::vector<Eigen::Index> window_offsets(Eigen::Index length, const WindowConfig& cfg);

std::vector<WindowSequence> make_windows(const SensorSeries& sensor, const WindowConfig& cfg);

// Indices [first, last) of the windows containing `row`; empty when none does.
std::pair<std::size_t, std::size_t> windows_containing(Eigen::Index row, Eigen::Index length,
                                                       const WindowConfig& cfg);

// Copy of rows [offset, offset + w) as a w x d matrix.
nn::Mat window_slice(const Matrix& data, Eigen::Index offset, Eigen::Index w);

// Every full window of `data`, for LSTM training.
std::vector<nn::Mat> collect_windows(const Matrix& data, const WindowConfig& cfg);

// a_t = ||x_t - x_hat_t||_2 for every row.
ScoreSeries score_rows(const nn::MlpAutoencoder& model, const std::vector<Timestamp>& timestamps,
                       const Matrix& data);
ScoreSeries score_opcycle(const nn::MlpAutoencoder& model, const OperationCycleSeries& op);

// Aggregates, for every row covered by at least one window, the per-window
// residual norms of that row. Rows in no window get no score. Windows are
// reconstructed in batches and never all held at once.
ScoreSeries score_windows(const nn::LstmEncoderDecoder& model, const std::vector<Timestamp>& timestamps,
                          const Matrix& data, const WindowConfig& cfg, int threads = 1);
ScoreSeries score_sensor(const nn::LstmEncoderDecoder& model, const SensorSeries& sensor, const WindowConfig& cfg,
                         int threads = 1);

} // namespace tdad
