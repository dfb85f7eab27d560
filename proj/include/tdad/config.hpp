#pragma once

#include "tdad/detector.hpp"
#include "tdad/evaluate.hpp"
#include "tdad/nn/mlp.hpp"
#include "tdad/nn/lstm.hpp"
#include "tdad/nn/train.hpp"
#include "tdad/preprocess.hpp"
#include "tdad/scoring.hpp"
#include "tdad/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tdad {

enum class Backbone { mlp_dae, lstm_dae };
enum class BaselineCase { c1, c2, c3, c4 };

std::string_view to_string(Backbone b);
std::string_view to_string(BaselineCase c);
Backbone parse_backbone(std::string_view name);
BaselineCase parse_case(std::string_view name);

struct DataConfig {
    std::optional<std::filesystem::path> sensor;
    std::optional<std::filesystem::path> opcycle;
    std::optional<std::filesystem::path> labels;
    // Used instead of the CSV paths when no sensor/opcycle path is given.
    SynthConfig synth;
    bool synth_seed_set = false;

    bool from_files() const { return sensor.has_value() || opcycle.has_value(); }
};

struct BenchConfig {
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<BaselineCase> cases{BaselineCase::c1, BaselineCase::c2, BaselineCase::c3, BaselineCase::c4};
    Backbone backbone = Backbone::mlp_dae;
};

struct GradcheckConfig {
    int seeds = 20;
    double step = 1e-5;
};

struct RunConfig {
    std::uint64_t seed = 1;
    int threads = 1;
    std::optional<std::filesystem::path> output_dir;
    DataConfig data;
    PreprocessOptions preprocess;

    nn::MlpSpec mlp;
    nn::TrainConfig mlp_train = default_mlp_train();
    nn::LstmSpec lstm;
    nn::TrainConfig lstm_train = default_lstm_train();

    WindowConfig window;
    std::optional<double> tau1;
    std::optional<double> tau2;
    Timestamp eta = 14;
    bool inclusive = true;
    EvalConfig eval;

    // Directory with artifacts of an earlier `train` run.
    std::optional<std::filesystem::path> model_dir;
    // Precomputed test-split scores; when both are set no model is needed.
    std::optional<std::filesystem::path> op_scores;
    std::optional<std::filesystem::path> sensor_scores;

    BenchConfig bench;
    GradcheckConfig gradcheck;

    static nn::TrainConfig default_mlp_train();
    static nn::TrainConfig default_lstm_train();

    // Detector settings; thresholds default to 0 when unset.
    DetectorConfig detector() const;

    // Cross-field checks beyond what parsing enforces.
    void validate() const;

    // Fully resolved form; from_json(to_json()) reproduces the config.
    nlohmann::json to_json() const;

    // Unknown keys and ill-typed values raise ConfigError. Relative paths are
    // resolved against `base_dir`.
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static RunConfig load(const std::filesystem::path& path);
};

nlohmann::json synth_to_json(const SynthConfig& cfg);
SynthConfig synth_from_json(const nlohmann::json& j, bool* seed_set = nullptr);

} // namespace tdad
