#pragma once

#include "tdad/nn/lstm.hpp"
#include "tdad/nn/mlp.hpp"

#include <json.hpp>

#include <filesystem>

namespace tdad::nn {

// Self-describing JSON: {"format": "tdad-model", "version": 1, "kind": ...}
// plus architecture metadata and flat column-major parameter arrays.
nlohmann::json to_json(const MlpAutoencoder& model);
nlohmann::json to_json(const LstmEncoderDecoder& model);
MlpAutoencoder mlp_from_json(const nlohmann::json& j);
LstmEncoderDecoder lstm_from_json(const nlohmann::json& j);

void save_model(const MlpAutoencoder& model, const std::filesystem::path& path);
void save_model(const LstmEncoderDecoder& model, const std::filesystem::path& path);
MlpAutoencoder load_mlp(const std::filesystem::path& path);
LstmEncoderDecoder load_lstm(const std::filesystem::path& path);

} // namespace tdad::nn
