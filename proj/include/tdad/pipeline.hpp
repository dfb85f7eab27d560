#pragma once

#include "tdad/config.hpp"
#include "tdad/nn/train.hpp"
#include "tdad/preprocess.hpp"
#include "tdad/timeseries.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace tdad {

// Independent seed streams derived from one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

namespace seed_stream {
inline constexpr std::uint64_t stage1 = 1;
inline constexpr std::uint64_t stage2 = 2;
inline constexpr std::uint64_t baseline = 3;
} // namespace seed_stream

// CSV files when data paths are configured, the synthetic generator otherwise.
HeterogeneousDataset load_dataset(const RunConfig& cfg);

struct TrainedModels {
    PreprocessState state;
    nn::MlpAutoencoder mlp;
    nn::LstmEncoderDecoder lstm;
    std::vector<double> mlp_loss;
    std::vector<double> lstm_loss;
};

struct TestScores {
    ScoreSeries op;
    ScoreSeries sensor;
};

// Dense autoencoder on the rows of `data` (one sample per row).
nn::TrainResult<nn::MlpAutoencoder> train_dense(const Matrix& data, const RunConfig& cfg, std::uint64_t seed);
// LSTM encoder-decoder on the sliding windows of `data`.
nn::TrainResult<nn::LstmEncoderDecoder> train_sequence(const Matrix& data, const RunConfig& cfg,
                                                       std::uint64_t seed);

TrainedModels train_models(const PreparedData& data, const RunConfig& cfg);
TestScores score_split(const TrainedModels& models, const HeterogeneousDataset& split, const RunConfig& cfg);

// Raw dataset -> normalized test split, using a stored preprocessing state.
HeterogeneousDataset test_split(const HeterogeneousDataset& raw, const PreprocessState& state);

// mlp.json, lstm.json, preprocess.json, mlp_loss.csv, lstm_loss.csv
void save_models(const TrainedModels& models, const std::filesystem::path& dir);
TrainedModels load_models(const std::filesystem::path& dir);

void save_loss_csv(const std::vector<double>& loss, const std::filesystem::path& path);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

} // namespace tdad
