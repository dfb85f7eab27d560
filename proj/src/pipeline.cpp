#include "tdad/pipeline.hpp"

#include "tdad/error.hpp"
#include "tdad/log.hpp"
#include "tdad/nn/serialize.hpp"
#include "tdad/scoring.hpp"
#include "tdad/synth.hpp"

#include <fstream>

namespace tdad {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined state
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

HeterogeneousDataset load_dataset(const RunConfig& cfg) {
    if (!cfg.data.from_files()) return generate(cfg.data.synth).dataset;
    HeterogeneousDataset ds;
    ds.sensor = load_sensor_csv(*cfg.data.sensor);
    ds.op = load_opcycle_csv(*cfg.data.opcycle);
    if (cfg.data.labels) ds.labels = load_labels_csv(*cfg.data.labels);
    ds.validate();
    return ds;
}

nn::TrainResult<nn::MlpAutoencoder> train_dense(const Matrix& data, const RunConfig& cfg, std::uint64_t seed) {
    nn::MlpSpec spec = cfg.mlp;
    spec.input_dim = data.cols();
    nn::Rng init(derive_seed(seed, 0));
    auto model = nn::make_mlp(spec, init);
    nn::TrainConfig tc = cfg.mlp_train;
    tc.seed = derive_seed(seed, 1);
    tc.threads = cfg.threads;
    const nn::Mat rows = data.transpose();
    return nn::train_mlp(std::move(model), rows, tc);
}

nn::TrainResult<nn::LstmEncoderDecoder> train_sequence(const Matrix& data, const RunConfig& cfg,
                                                       std::uint64_t seed) {
    nn::LstmSpec spec = cfg.lstm;
    spec.input_dim = data.cols();
    spec.window = cfg.window.size;
    nn::Rng init(derive_seed(seed, 0));
    auto model = nn::make_lstm(spec, init);
    nn::TrainConfig tc = cfg.lstm_train;
    tc.seed = derive_seed(seed, 1);
    tc.threads = cfg.threads;
    return nn::train_lstm(std::move(model), collect_windows(data, cfg.window), tc);
}

TrainedModels train_models(const PreparedData& data, const RunConfig& cfg) {
    TrainedModels m;
    m.state = data.state;
    log::info("training dense autoencoder on " + std::to_string(data.train.op.length()) + " op-cycle rows");
    auto dense = train_dense(data.train.op.data, cfg, derive_seed(cfg.seed, seed_stream::stage1));
    m.mlp = std::move(dense.model);
    m.mlp_loss = std::move(dense.loss_history);
    log::info("training LSTM encoder-decoder on " + std::to_string(data.train.sensor.length()) + " sensor rows");
    auto seq = train_sequence(data.train.sensor.data, cfg, derive_seed(cfg.seed, seed_stream::stage2));
    m.lstm = std::move(seq.model);
    m.lstm_loss = std::move(seq.loss_history);
    return m;
}

TestScores score_split(const TrainedModels& models, const HeterogeneousDataset& split, const RunConfig& cfg) {
    TestScores s;
    s.op = score_opcycle(models.mlp, split.op);
    s.sensor = score_sensor(models.lstm, split.sensor, cfg.window, cfg.threads);
    return s;
}

HeterogeneousDataset test_split(const HeterogeneousDataset& raw, const PreprocessState& state) {
    return chronological_split(apply_state(raw, state), SplitSpec{state.boundary}).second;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

void save_loss_csv(const std::vector<double>& loss, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < loss.size(); ++e) out << e << ',' << format_double(loss[e]) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

void save_models(const TrainedModels& models, const std::filesystem::path& dir) {
    nn::save_model(models.mlp, dir / "mlp.json");
    nn::save_model(models.lstm, dir / "lstm.json");
    write_json(models.state.to_json(), dir / "preprocess.json");
    save_loss_csv(models.mlp_loss, dir / "mlp_loss.csv");
    save_loss_csv(models.lstm_loss, dir / "lstm_loss.csv");
}

TrainedModels load_models(const std::filesystem::path& dir) {
    TrainedModels m;
    m.mlp = nn::load_mlp(dir / "mlp.json");
    m.lstm = nn::load_lstm(dir / "lstm.json");
    std::ifstream in(dir / "preprocess.json");
    if (!in) throw IoError("cannot open " + (dir / "preprocess.json").string());
    try {
        m.state = PreprocessState::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid " + (dir / "preprocess.json").string() + ": " + e.what());
    }
    return m;
}

} // namespace tdad
