#include "tdad/nn/train.hpp"

#include "tdad/error.hpp"
#include "tdad/log.hpp"
#include "tdad/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tdad::nn {

namespace {

// Batches are split into fixed-size chunks for the gradient computation so
// the summation order never depends on the thread count.
constexpr Index kChunk = 8;

std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle) std::shuffle(order.begin(), order.end(), rng);
    return order;
}

// Runs one epoch body and tags any training failure with the epoch index.
template <typename Body>
double run_epoch(int epoch, Body&& body) {
    try {
        return body();
    } catch (const TrainingError& e) {
        throw TrainingError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
}

void check_loss(double epoch_loss, int epoch) {
    if (!std::isfinite(epoch_loss)) {
        throw TrainingError("loss became non-finite in epoch " + std::to_string(epoch));
    }
}

} // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

void accumulate(std::vector<ParamBlock>& acc, const std::vector<ParamBlock>& other) {
    for (std::size_t b = 0; b < acc.size(); ++b) {
        auto dst = acc[b].values;
        const auto src = other[b].values;
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
}

TrainResult<MlpAutoencoder> train_mlp(MlpAutoencoder model, const Mat& rows, const TrainConfig& config) {
    config.validate();
    model.validate();
    if (rows.cols() == 0) throw TrainingError("empty training set");
    if (rows.rows() != model.input_dim()) {
        throw TrainingError("training rows have " + std::to_string(rows.rows()) + " features, model expects " +
                            std::to_string(model.input_dim()));
    }

    Rng rng(config.seed);
    AdamState adam(model.parameters(), config.adam);
    const auto n = static_cast<std::size_t>(rows.cols());
    const auto d = static_cast<double>(rows.rows());
    TrainResult<MlpAutoencoder> result;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto order = epoch_order(n, config.shuffle, rng);
        const double total = run_epoch(epoch, [&] {
            double sum = 0.0;
            for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(config.batch_size)) {
                const std::size_t end = std::min(n, begin + static_cast<std::size_t>(config.batch_size));
                Mat batch(rows.rows(), static_cast<Index>(end - begin));
                for (std::size_t k = begin; k < end; ++k) {
                    batch.col(static_cast<Index>(k - begin)) = rows.col(static_cast<Index>(order[k]));
                }
                const double bsz = static_cast<double>(end - begin);
                MlpCache cache;
                const Mat out = mlp_forward(model, batch, &cache);
                sum += loss_value(config.loss, out, batch, d);
                MlpAutoencoder grads = mlp_backward(model, cache, loss_gradient(config.loss, out, batch, d * bsz));
                adam.step(model.parameters(), grads.parameters());
            }
            return sum;
        });
        const double epoch_loss = total / static_cast<double>(n);
        check_loss(epoch_loss, epoch);
        result.loss_history.push_back(epoch_loss);
        log::debug("mlp epoch " + std::to_string(epoch) + " loss " + std::to_string(epoch_loss));
    }
    result.model = std::move(model);
    return result;
}

TrainResult<LstmEncoderDecoder> train_lstm(LstmEncoderDecoder model, const std::vector<Mat>& windows,
                                           const TrainConfig& config) {
    config.validate();
    model.validate();
    if (windows.empty()) throw TrainingError("empty training set");
    for (const auto& win : windows) {
        if (win.rows() != model.window || win.cols() != model.input_dim()) {
            throw TrainingError("training window has shape " + std::to_string(win.rows()) + "x" +
                                std::to_string(win.cols()) + ", model expects " + std::to_string(model.window) +
                                "x" + std::to_string(model.input_dim()));
        }
    }

    Rng rng(config.seed);
    AdamState adam(model.parameters(), config.adam);
    const std::size_t n = windows.size();
    const double per_seq = static_cast<double>(model.window * model.input_dim());
    TrainResult<LstmEncoderDecoder> result;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto order = epoch_order(n, config.shuffle, rng);
        const double total = run_epoch(epoch, [&] {
            double sum = 0.0;
            for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(config.batch_size)) {
                const std::size_t end = std::min(n, begin + static_cast<std::size_t>(config.batch_size));
                const double bsz = static_cast<double>(end - begin);
                const std::size_t n_chunks = (end - begin + kChunk - 1) / kChunk;

                std::vector<std::uint64_t> chunk_seeds(n_chunks);
                for (auto& s : chunk_seeds) s = rng();
                std::vector<LstmEncoderDecoder> chunk_grads(n_chunks);
                std::vector<double> chunk_loss(n_chunks, 0.0);

                parallel_for(n_chunks, config.threads, [&](std::size_t c) {
                    const std::size_t cb = begin + c * static_cast<std::size_t>(kChunk);
                    const std::size_t ce = std::min(end, cb + static_cast<std::size_t>(kChunk));
                    std::vector<const Mat*> members;
                    for (std::size_t k = cb; k < ce; ++k) members.push_back(&windows[order[k]]);
                    const Sequence input = to_batch(members);
                    Rng chunk_rng(chunk_seeds[c]);
                    LstmCache cache;
                    const Sequence out = lstm_forward(model, input, Mode::training, &chunk_rng, &cache);
                    Sequence grads(out.size());
                    double loss = 0.0;
                    for (std::size_t t = 0; t < out.size(); ++t) {
                        loss += loss_value(config.loss, out[t], input[t], per_seq);
                        grads[t] = loss_gradient(config.loss, out[t], input[t], per_seq * bsz);
                    }
                    chunk_loss[c] = loss;
                    chunk_grads[c] = lstm_backward(model, cache, grads);
                });

                auto acc = chunk_grads.front().parameters();
                for (std::size_t c = 1; c < n_chunks; ++c) accumulate(acc, chunk_grads[c].parameters());
                for (double l : chunk_loss) sum += l;
                adam.step(model.parameters(), acc);
            }
            return sum;
        });
        const double epoch_loss = total / static_cast<double>(n);
        check_loss(epoch_loss, epoch);
        result.loss_history.push_back(epoch_loss);
        log::info("lstm epoch " + std::to_string(epoch) + " loss " + std::to_string(epoch_loss));
    }
    result.model = std::move(model);
    return result;
}

} // namespace tdad::nn
