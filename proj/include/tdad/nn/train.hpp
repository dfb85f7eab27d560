#pragma once

#include "tdad/nn/adam.hpp"
#include "tdad/nn/lstm.hpp"
#include "tdad/nn/mlp.hpp"

#include <cstdint>
#include <vector>

namespace tdad::nn {

struct TrainConfig {
    Index batch_size = 32;
    int epochs = 100;
    std::uint64_t seed = 0;
    Loss loss = Loss::mse;
    bool shuffle = true;
    AdamConfig adam;
    int threads = 1;

    void validate() const;
};

template <typename Model>
struct TrainResult {
    Model model;
    // Mean per-sample reconstruction loss of each epoch (training mode).
    std::vector<double> loss_history;
};

// rows: input_dim x N, one training sample per column.
TrainResult<MlpAutoencoder> train_mlp(MlpAutoencoder model, const Mat& rows, const TrainConfig& config);

// windows: each w x d (row = time step).
TrainResult<LstmEncoderDecoder> train_lstm(LstmEncoderDecoder model, const std::vector<Mat>& windows,
                                           const TrainConfig& config);

// Adds `other` into `acc` block by block. Shapes must match.
void accumulate(std::vector<ParamBlock>& acc, const std::vector<ParamBlock>& other);

} // namespace tdad::nn
