#include "tdad/nn/serialize.hpp"

#include "tdad/error.hpp"

#include <fstream>

namespace tdad::nn {

namespace {

constexpr int kVersion = 1;

nlohmann::json flat(const Mat& m) {
    return std::vector<double>(m.data(), m.data() + m.size());
}

nlohmann::json flat(const Vec& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Mat read_mat(const nlohmann::json& j, Index rows, Index cols, const char* what) {
    const auto values = j.get<std::vector<double>>();
    if (static_cast<Index>(values.size()) != rows * cols) {
        throw ModelError(std::string("model file: ") + what + " has " + std::to_string(values.size()) +
                         " values, expected " + std::to_string(rows * cols));
    }
    return Eigen::Map<const Mat>(values.data(), rows, cols);
}

Vec read_vec(const nlohmann::json& j, Index n, const char* what) {
    return read_mat(j, n, 1, what);
}

nlohmann::json dense_json(const DenseLayer& l) {
    return {{"in", l.in()},
            {"out", l.out()},
            {"activation", std::string(to_string(l.activation))},
            {"weights", flat(l.weights)},
            {"bias", flat(l.bias)}};
}

DenseLayer dense_from(const nlohmann::json& j) {
    const Index in = j.at("in").get<Index>();
    const Index out = j.at("out").get<Index>();
    return {read_mat(j.at("weights"), out, in, "weights"), read_vec(j.at("bias"), out, "bias"),
            parse_activation(j.at("activation").get<std::string>())};
}

nlohmann::json cell_json(const LstmCell& c) {
    return {{"in", c.in()},
            {"hidden", c.hidden()},
            {"input_weights", flat(c.input_weights)},
            {"recurrent_weights", flat(c.recurrent_weights)},
            {"bias", flat(c.bias)}};
}

LstmCell cell_from(const nlohmann::json& j) {
    const Index in = j.at("in").get<Index>();
    const Index h = j.at("hidden").get<Index>();
    return {read_mat(j.at("input_weights"), 4 * h, in, "input_weights"),
            read_mat(j.at("recurrent_weights"), 4 * h, h, "recurrent_weights"),
            read_vec(j.at("bias"), 4 * h, "bias")};
}

void check_header(const nlohmann::json& j, const char* kind) {
    if (j.value("format", "") != "tdad-model") throw ModelError("not a tdad model file");
    if (!j.contains("version")) throw ModelError("model file has no version field");
    if (j.at("version").get<int>() != kVersion) {
        throw ModelError("unsupported model file version " + std::to_string(j.at("version").get<int>()));
    }
    if (j.at("kind").get<std::string>() != kind) {
        throw ModelError("model file holds a '" + j.at("kind").get<std::string>() + "' model, expected '" + kind + "'");
    }
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(1) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError(path.string() + ": " + e.what());
    }
}

} // namespace

nlohmann::json to_json(const MlpAutoencoder& model) {
    nlohmann::json enc = nlohmann::json::array();
    nlohmann::json dec = nlohmann::json::array();
    for (const auto& l : model.encoder) enc.push_back(dense_json(l));
    for (const auto& l : model.decoder) dec.push_back(dense_json(l));
    return {{"format", "tdad-model"}, {"version", kVersion}, {"kind", "mlp"}, {"order", "column-major"},
            {"input_dim", model.input_dim()}, {"l1_coeff", model.l1_coeff}, {"encoder", enc}, {"decoder", dec}};
}

nlohmann::json to_json(const LstmEncoderDecoder& model) {
    nlohmann::json enc = nlohmann::json::array();
    nlohmann::json dec = nlohmann::json::array();
    for (const auto& c : model.encoder) enc.push_back(cell_json(c));
    for (const auto& c : model.decoder) dec.push_back(cell_json(c));
    return {{"format", "tdad-model"},
            {"version", kVersion},
            {"kind", "lstm"},
            {"order", "column-major"},
            {"gate_order", "input,forget,candidate,output"},
            {"input_dim", model.input_dim()},
            {"hidden", model.hidden()},
            {"layers", model.layers()},
            {"window", model.window},
            {"dropout", model.dropout},
            {"reverse_decode", model.reverse_decode},
            {"encoder", enc},
            {"decoder", dec},
            {"projection", dense_json(model.projection)}};
}

MlpAutoencoder mlp_from_json(const nlohmann::json& j) {
    check_header(j, "mlp");
    MlpAutoencoder m;
    m.l1_coeff = j.at("l1_coeff").get<double>();
    for (const auto& l : j.at("encoder")) m.encoder.push_back(dense_from(l));
    for (const auto& l : j.at("decoder")) m.decoder.push_back(dense_from(l));
    m.validate();
    return m;
}

LstmEncoderDecoder lstm_from_json(const nlohmann::json& j) {
    check_header(j, "lstm");
    LstmEncoderDecoder m;
    for (const auto& c : j.at("encoder")) m.encoder.push_back(cell_from(c));
    for (const auto& c : j.at("decoder")) m.decoder.push_back(cell_from(c));
    m.projection = dense_from(j.at("projection"));
    m.dropout = j.at("dropout").get<double>();
    m.reverse_decode = j.at("reverse_decode").get<bool>();
    m.window = j.at("window").get<Index>();
    m.validate();
    return m;
}

void save_model(const MlpAutoencoder& model, const std::filesystem::path& path) { write_json(to_json(model), path); }

void save_model(const LstmEncoderDecoder& model, const std::filesystem::path& path) {
    write_json(to_json(model), path);
}

MlpAutoencoder load_mlp(const std::filesystem::path& path) { return mlp_from_json(read_json(path)); }

LstmEncoderDecoder load_lstm(const std::filesystem::path& path) { return lstm_from_json(read_json(path)); }

} // namespace tdad::nn
