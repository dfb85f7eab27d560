#include "tdad/config.hpp"

#include "tdad/error.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <type_traits>

namespace tdad {

namespace {

using nlohmann::json;

template <typename T>
struct is_vector : std::false_type {};
template <typename T>
struct is_vector<std::vector<T>> : std::true_type {};

template <typename T>
bool type_matches(const json& v) {
    if constexpr (std::is_same_v<T, bool>) {
        return v.is_boolean();
    } else if constexpr (std::is_unsigned_v<T>) {
        return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    } else if constexpr (std::is_integral_v<T>) {
        return v.is_number_integer();
    } else if constexpr (std::is_floating_point_v<T>) {
        return v.is_number();
    } else if constexpr (std::is_same_v<T, std::string>) {
        return v.is_string();
    } else if constexpr (is_vector<T>::value) {
        if (!v.is_array()) return false;
        for (const auto& e : v) {
            if (!type_matches<typename T::value_type>(e)) return false;
        }
        return true;
    } else {
        return true;
    }
}

// Reads the members of one JSON object and rejects keys nobody asked for.
class Fields {
public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw ConfigError(label() + ": expected an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        out = convert<T>(key, j_.at(key));
    }

    template <typename T>
    void read(const char* key, std::optional<T>& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        if (v.is_null()) {
            out.reset();
        } else {
            out = convert<T>(key, v);
        }
    }

    template <typename T, typename Parse>
    void read_enum(const char* key, T& out, Parse parse) {
        std::string name;
        read(key, name);
        if (j_.contains(key)) {
            try {
                out = parse(name);
            } catch (const ConfigError& e) {
                throw ConfigError(path(key) + ": " + e.what());
            }
        }
    }

    void read_path(const char* key, std::optional<std::filesystem::path>& out, const std::filesystem::path& base) {
        std::optional<std::string> s;
        read(key, s);
        if (s) {
            std::filesystem::path p(*s);
            out = p.is_absolute() || base.empty() ? p : base / p;
        } else if (j_.contains(key)) {
            out.reset();
        }
    }

    const json* sub(const char* key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null() ? &j_.at(key) : nullptr;
    }

    bool has(const char* key) const { return j_.contains(key); }

    std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) throw ConfigError(label() + ": unknown key '" + item.key() + "'");
        }
    }

private:
    template <typename T>
    T convert(const char* key, const json& v) const {
        if (!type_matches<T>(v)) throw ConfigError(path(key) + ": value has the wrong type");
        return v.get<T>();
    }

    std::string label() const { return where_.empty() ? "config" : where_; }

    const json& j_;
    std::string where_;
    std::set<std::string, std::less<>> seen_;
};

json path_json(const std::optional<std::filesystem::path>& p) {
    return p ? json(p->string()) : json(nullptr);
}

template <typename T>
json opt_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

void read_train(Fields& f, nn::TrainConfig& t) {
    f.read("epochs", t.epochs);
    f.read("batch_size", t.batch_size);
    f.read("learning_rate", t.adam.learning_rate);
    f.read_enum("loss", t.loss, nn::parse_loss);
    f.read("shuffle", t.shuffle);
}

json train_json(const nn::TrainConfig& t) {
    return {{"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"learning_rate", t.adam.learning_rate},
            {"loss", std::string(nn::to_string(t.loss))},
            {"shuffle", t.shuffle}};
}

} // namespace

std::string_view to_string(Backbone b) { return b == Backbone::mlp_dae ? "mlp_dae" : "lstm_dae"; }

std::string_view to_string(BaselineCase c) {
    switch (c) {
    case BaselineCase::c1: return "C1";
    case BaselineCase::c2: return "C2";
    case BaselineCase::c3: return "C3";
    case BaselineCase::c4: return "C4";
    }
    return "?";
}

Backbone parse_backbone(std::string_view name) {
    if (name == "mlp_dae") return Backbone::mlp_dae;
    if (name == "lstm_dae") return Backbone::lstm_dae;
    throw ConfigError("unknown backbone '" + std::string(name) + "'");
}

BaselineCase parse_case(std::string_view name) {
    if (name == "C1") return BaselineCase::c1;
    if (name == "C2") return BaselineCase::c2;
    if (name == "C3") return BaselineCase::c3;
    if (name == "C4") return BaselineCase::c4;
    throw ConfigError("unknown case '" + std::string(name) + "'");
}

nlohmann::json synth_to_json(const SynthConfig& c) {
    json planned = json::array();
    for (const auto& p : c.planned_daily) planned.push_back({p.start, p.end});
    return {{"seed", c.seed},
            {"duration", c.duration},
            {"cycle_min", c.cycle_min},
            {"cycle_max", c.cycle_max},
            {"planned_daily", planned},
            {"unplanned_per_day", c.unplanned_per_day},
            {"unplanned_min", c.unplanned_min},
            {"unplanned_max", c.unplanned_max},
            {"op_features", c.op_features},
            {"sensor_features", c.sensor_features},
            {"static_op_features", c.static_op_features},
            {"static_sensor_features", c.static_sensor_features},
            {"latent_factors", c.latent_factors},
            {"sensor_persistence", c.sensor_persistence},
            {"op_noise", c.op_noise},
            {"sensor_noise", c.sensor_noise},
            {"op_missing_rate", c.op_missing_rate},
            {"type_a", c.type_a},
            {"type_b", c.type_b},
            {"glitches", c.glitches},
            {"anomaly_cycles", c.anomaly_cycles},
            {"affected_features", c.affected_features},
            {"glitch_features", c.glitch_features},
            {"magnitude", c.magnitude},
            {"glitch_magnitude", c.glitch_magnitude},
            {"bump_before", c.bump_before},
            {"bump_after", c.bump_after},
            {"glitch_length", c.glitch_length},
            {"label_lag_max", c.label_lag_max},
            {"separation", c.separation},
            {"anomaly_region_start", opt_json(c.anomaly_region_start)}};
}

SynthConfig synth_from_json(const nlohmann::json& j, bool* seed_set) {
    SynthConfig c;
    Fields f(j, "data.synth");
    f.read("seed", c.seed);
    if (seed_set) *seed_set = f.has("seed");
    f.read("duration", c.duration);
    f.read("cycle_min", c.cycle_min);
    f.read("cycle_max", c.cycle_max);
    if (const json* p = f.sub("planned_daily")) {
        if (!type_matches<std::vector<std::vector<Timestamp>>>(*p)) {
            throw ConfigError("data.synth.planned_daily: expected a list of [start, end] pairs");
        }
        c.planned_daily.clear();
        for (const auto& pair : *p) {
            if (pair.size() != 2) throw ConfigError("data.synth.planned_daily: expected [start, end] pairs");
            c.planned_daily.push_back({pair[0].get<Timestamp>(), pair[1].get<Timestamp>()});
        }
    }
    f.read("unplanned_per_day", c.unplanned_per_day);
    f.read("unplanned_min", c.unplanned_min);
    f.read("unplanned_max", c.unplanned_max);
    f.read("op_features", c.op_features);
    f.read("sensor_features", c.sensor_features);
    f.read("static_op_features", c.static_op_features);
    f.read("static_sensor_features", c.static_sensor_features);
    f.read("latent_factors", c.latent_factors);
    f.read("sensor_persistence", c.sensor_persistence);
    f.read("op_noise", c.op_noise);
    f.read("sensor_noise", c.sensor_noise);
    f.read("op_missing_rate", c.op_missing_rate);
    f.read("type_a", c.type_a);
    f.read("type_b", c.type_b);
    f.read("glitches", c.glitches);
    f.read("anomaly_cycles", c.anomaly_cycles);
    f.read("affected_features", c.affected_features);
    f.read("glitch_features", c.glitch_features);
    f.read("magnitude", c.magnitude);
    f.read("glitch_magnitude", c.glitch_magnitude);
    f.read("bump_before", c.bump_before);
    f.read("bump_after", c.bump_after);
    f.read("glitch_length", c.glitch_length);
    f.read("label_lag_max", c.label_lag_max);
    f.read("separation", c.separation);
    f.read("anomaly_region_start", c.anomaly_region_start);
    f.finish();
    return c;
}

nn::TrainConfig RunConfig::default_mlp_train() {
    nn::TrainConfig t;
    t.epochs = 100;
    t.loss = nn::Loss::mse;
    return t;
}

nn::TrainConfig RunConfig::default_lstm_train() {
    nn::TrainConfig t;
    t.epochs = 50;
    t.loss = nn::Loss::mae;
    return t;
}

DetectorConfig RunConfig::detector() const {
    DetectorConfig d;
    d.tau1 = tau1.value_or(0.0);
    d.tau2 = tau2.value_or(0.0);
    d.eta = eta;
    d.delta = eval.delta;
    d.inclusive = inclusive;
    return d;
}

void RunConfig::validate() const {
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (data.sensor.has_value() != data.opcycle.has_value()) {
        throw ConfigError("data.sensor and data.opcycle must be given together");
    }
    if (!data.from_files()) data.synth.validate();
    if (preprocess.split_boundary.has_value() == false &&
        !(preprocess.split_fraction > 0.0 && preprocess.split_fraction < 1.0)) {
        throw ConfigError("preprocess.split_fraction must be in (0, 1)");
    }
    if (preprocess.static_epsilon < 0.0) throw ConfigError("preprocess.static_epsilon must be >= 0");
    if (mlp.hidden.empty()) throw ConfigError("mlp.hidden must name at least one layer");
    for (auto h : mlp.hidden) {
        if (h < 1) throw ConfigError("mlp.hidden sizes must be >= 1");
    }
    if (mlp.l1_coeff < 0.0) throw ConfigError("mlp.l1 must be >= 0");
    if (lstm.hidden < 1 || lstm.layers < 1) throw ConfigError("lstm.hidden and lstm.layers must be >= 1");
    if (!(lstm.dropout >= 0.0 && lstm.dropout < 1.0)) throw ConfigError("lstm.dropout must be in [0, 1)");
    try {
        mlp_train.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("mlp: ") + e.what());
    }
    try {
        lstm_train.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("lstm: ") + e.what());
    }
    window.validate();
    eval.validate();
    if (eta < 0) throw ConfigError("detector.eta must be >= 0");
    if (tau1 && !(std::isfinite(*tau1) && *tau1 >= 0.0)) throw ConfigError("detector.tau1 must be >= 0");
    if (tau2 && !(std::isfinite(*tau2) && *tau2 >= 0.0)) throw ConfigError("detector.tau2 must be >= 0");
    if (op_scores.has_value() != sensor_scores.has_value()) {
        throw ConfigError("scores.op and scores.sensor must be given together");
    }
    if (bench.seeds.empty()) throw ConfigError("bench.seeds must not be empty");
    if (gradcheck.seeds < 1) throw ConfigError("gradcheck.seeds must be >= 1");
    if (!(gradcheck.step > 0.0)) throw ConfigError("gradcheck.step must be > 0");
}

nlohmann::json RunConfig::to_json() const {
    json cases = json::array();
    for (auto c : bench.cases) cases.push_back(std::string(tdad::to_string(c)));
    return {
        {"seed", seed},
        {"threads", threads},
        {"output_dir", path_json(output_dir)},
        {"data",
         {{"sensor", path_json(data.sensor)},
          {"opcycle", path_json(data.opcycle)},
          {"labels", path_json(data.labels)},
          {"synth", synth_to_json(data.synth)}}},
        {"preprocess",
         {{"split_boundary", opt_json(preprocess.split_boundary)},
          {"split_fraction", preprocess.split_fraction},
          {"static_epsilon", preprocess.static_epsilon}}},
        {"mlp",
         [&] {
             json m = train_json(mlp_train);
             m["hidden"] = mlp.hidden;
             m["first_activation"] = std::string(nn::to_string(mlp.first_activation));
             m["output_activation"] = std::string(nn::to_string(mlp.output_activation));
             m["l1"] = mlp.l1_coeff;
             return m;
         }()},
        {"lstm",
         [&] {
             json m = train_json(lstm_train);
             m["hidden"] = lstm.hidden;
             m["layers"] = lstm.layers;
             m["dropout"] = lstm.dropout;
             m["reverse_decode"] = lstm.reverse_decode;
             return m;
         }()},
        {"window",
         {{"size", window.size}, {"step", window.step}, {"aggregation", std::string(tdad::to_string(window.aggregation))}}},
        {"detector", {{"tau1", opt_json(tau1)}, {"tau2", opt_json(tau2)}, {"eta", eta}, {"inclusive", inclusive}}},
        {"eval",
         {{"delta", eval.delta},
          {"grid_size", eval.grid_size},
          {"tau1_grid", opt_json(eval.tau1_grid)},
          {"tau2_grid", opt_json(eval.tau2_grid)}}},
        {"model_dir", path_json(model_dir)},
        {"scores", {{"op", path_json(op_scores)}, {"sensor", path_json(sensor_scores)}}},
        {"bench", {{"seeds", bench.seeds}, {"cases", cases}, {"backbone", std::string(tdad::to_string(bench.backbone))}}},
        {"gradcheck", {{"seeds", gradcheck.seeds}, {"step", gradcheck.step}}},
    };
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base) {
    RunConfig c;
    Fields top(j, "");
    top.read("seed", c.seed);
    top.read("threads", c.threads);
    top.read_path("output_dir", c.output_dir, base);
    top.read_path("model_dir", c.model_dir, base);

    if (const json* d = top.sub("data")) {
        Fields f(*d, "data");
        f.read_path("sensor", c.data.sensor, base);
        f.read_path("opcycle", c.data.opcycle, base);
        f.read_path("labels", c.data.labels, base);
        if (const json* s = f.sub("synth")) c.data.synth = synth_from_json(*s, &c.data.synth_seed_set);
        f.finish();
    }
    if (const json* p = top.sub("preprocess")) {
        Fields f(*p, "preprocess");
        f.read("split_boundary", c.preprocess.split_boundary);
        f.read("split_fraction", c.preprocess.split_fraction);
        f.read("static_epsilon", c.preprocess.static_epsilon);
        f.finish();
    }
    if (const json* m = top.sub("mlp")) {
        Fields f(*m, "mlp");
        read_train(f, c.mlp_train);
        f.read("hidden", c.mlp.hidden);
        f.read_enum("first_activation", c.mlp.first_activation, nn::parse_activation);
        f.read_enum("output_activation", c.mlp.output_activation, nn::parse_activation);
        f.read("l1", c.mlp.l1_coeff);
        f.finish();
    }
    if (const json* m = top.sub("lstm")) {
        Fields f(*m, "lstm");
        read_train(f, c.lstm_train);
        f.read("hidden", c.lstm.hidden);
        f.read("layers", c.lstm.layers);
        f.read("dropout", c.lstm.dropout);
        f.read("reverse_decode", c.lstm.reverse_decode);
        f.finish();
    }
    if (const json* w = top.sub("window")) {
        Fields f(*w, "window");
        f.read("size", c.window.size);
        f.read("step", c.window.step);
        f.read_enum("aggregation", c.window.aggregation, parse_aggregation);
        f.finish();
    }
    if (const json* d = top.sub("detector")) {
        Fields f(*d, "detector");
        f.read("tau1", c.tau1);
        f.read("tau2", c.tau2);
        f.read("eta", c.eta);
        f.read("inclusive", c.inclusive);
        f.finish();
    }
    if (const json* e = top.sub("eval")) {
        Fields f(*e, "eval");
        f.read("delta", c.eval.delta);
        f.read("grid_size", c.eval.grid_size);
        f.read("tau1_grid", c.eval.tau1_grid);
        f.read("tau2_grid", c.eval.tau2_grid);
        f.finish();
    }
    if (const json* s = top.sub("scores")) {
        Fields f(*s, "scores");
        f.read_path("op", c.op_scores, base);
        f.read_path("sensor", c.sensor_scores, base);
        f.finish();
    }
    if (const json* b = top.sub("bench")) {
        Fields f(*b, "bench");
        f.read("seeds", c.bench.seeds);
        std::optional<std::vector<std::string>> cases;
        f.read("cases", cases);
        if (cases) {
            c.bench.cases.clear();
            for (const auto& name : *cases) c.bench.cases.push_back(parse_case(name));
        }
        f.read_enum("backbone", c.bench.backbone, parse_backbone);
        f.finish();
    }
    if (const json* g = top.sub("gradcheck")) {
        Fields f(*g, "gradcheck");
        f.read("seeds", c.gradcheck.seeds);
        f.read("step", c.gradcheck.step);
        f.finish();
    }
    top.finish();
    if (!c.data.synth_seed_set) c.data.synth.seed = c.seed;
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j, path.parent_path());
}

} // namespace tdad
