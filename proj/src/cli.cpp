#include "tdad/cli.hpp"

#include "tdad/baseline.hpp"
#include "tdad/config.hpp"
#include "tdad/detector.hpp"
#include "tdad/error.hpp"
#include "tdad/evaluate.hpp"
#include "tdad/log.hpp"
#include "tdad/nn/gradcheck.hpp"
#include "tdad/pipeline.hpp"
#include "tdad/synth.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace tdad {

namespace {

namespace fs = std::filesystem;

struct CliOptions {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    double tau1 = 0.0;
    double tau2 = 0.0;
    int threads = 1;
    CLI::Option* out_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* tau1_opt = nullptr;
    CLI::Option* tau2_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
};

void add_common(CLI::App* sub, CliOptions& o) {
    sub->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    o.out_opt = sub->add_option("--out", o.out, "output directory");
    o.seed_opt = sub->add_option("--seed", o.seed, "run seed");
    o.tau1_opt = sub->add_option("--tau1", o.tau1, "Stage I threshold on op-cycle scores");
    o.tau2_opt = sub->add_option("--tau2", o.tau2, "Stage II threshold on sensor scores (0 disables filtering)");
    o.threads_opt = sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

std::string timestamp_dir() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    std::ostringstream s;
    s << "runs/" << std::put_time(&tm, "%Y%m%d-%H%M%S");
    return s.str();
}

struct Run {
    RunConfig cfg;
    fs::path out;
};

Run resolve(const std::string& command, const CliOptions& o) {
    Run run;
    nlohmann::json raw = nlohmann::json::object();
    if (!o.config.empty()) {
        run.cfg = RunConfig::load(o.config);
        std::ifstream in(o.config);
        raw = nlohmann::json::parse(in);
    }
    auto& cfg = run.cfg;
    if (o.seed_opt->count() > 0) {
        cfg.seed = o.seed;
        if (!cfg.data.synth_seed_set) cfg.data.synth.seed = o.seed;
        if (command == "synth") cfg.data.synth.seed = o.seed;
    }
    if (o.threads_opt->count() > 0) cfg.threads = o.threads;
    if (o.tau1_opt->count() > 0) {
        if (!(std::isfinite(o.tau1) && o.tau1 > 0.0)) throw ConfigError("--tau1 must be > 0");
        cfg.tau1 = o.tau1;
    }
    if (o.tau2_opt->count() > 0) {
        if (!(std::isfinite(o.tau2) && o.tau2 >= 0.0)) throw ConfigError("--tau2 must be >= 0");
        cfg.tau2 = o.tau2;
    }
    if (o.out_opt->count() > 0) {
        cfg.output_dir = fs::path(o.out);
    } else if (command == "synth" && !cfg.output_dir) {
        throw ConfigError("synth requires --out <dir>");
    } else if (!cfg.output_dir) {
        cfg.output_dir = fs::path(timestamp_dir());
    }
    cfg.validate();
    run.out = *cfg.output_dir;
    std::error_code ec;
    fs::create_directories(run.out, ec);
    if (ec) throw IoError("cannot create " + run.out.string() + ": " + ec.message());
    write_json(cfg.to_json(), run.out / "config.json");
    if (!o.config.empty()) write_json(raw, run.out / "config.input.json");
    return run;
}

void require_thresholds(const RunConfig& cfg, const std::string& command) {
    if (!cfg.tau1 || !cfg.tau2) throw ConfigError(command + " requires --tau1 and --tau2 (or detector.tau1/tau2)");
    if (!(*cfg.tau1 > 0.0)) throw ConfigError("tau1 must be > 0");
}

struct ScoredTest {
    TestScores scores;
    std::vector<Timestamp> alarms;
};

// Scores of the test split: precomputed files, stored models, or a fresh
// training run (whose artifacts are saved under `out`).
ScoredTest obtain_scores(const RunConfig& cfg, const fs::path& out) {
    ScoredTest st;
    const HeterogeneousDataset raw = load_dataset(cfg);
    if (cfg.op_scores) {
        st.scores.op = load_scores_csv(*cfg.op_scores);
        st.scores.sensor = load_scores_csv(*cfg.sensor_scores);
        const Timestamp boundary = split_boundary(raw.sensor, cfg.preprocess);
        if (raw.labels) {
            for (Timestamp t : raw.labels->points) {
                if (t >= boundary) st.alarms.push_back(t);
            }
        }
        return st;
    }
    HeterogeneousDataset test;
    TrainedModels models;
    if (cfg.model_dir) {
        models = load_models(*cfg.model_dir);
        test = test_split(raw, models.state);
    } else {
        PreparedData data = prepare(raw, cfg.preprocess);
        models = train_models(data, cfg);
        save_models(models, out);
        test = std::move(data.test);
    }
    st.scores = score_split(models, test, cfg);
    if (test.labels) st.alarms = test.labels->points;
    save_scores(st.scores.op, out / "op_scores.csv");
    save_scores(st.scores.sensor, out / "sensor_scores.csv");
    return st;
}

void print_metrics(std::ostream& out, const EvalReport& r) {
    out << "precision " << r.metrics.precision << (r.metrics.precision_undefined ? " (undefined)" : "")
        << "  recall " << r.metrics.recall << (r.metrics.recall_undefined ? " (undefined)" : "") << "  f1 " << r.f1
        << "  tau1 " << r.tau1 << "  tau2 " << r.tau2 << "  detected " << r.detected << '\n';
}

int cmd_synth(const Run& run, std::ostream& out) {
    const auto gen = generate(run.cfg.data.synth);
    write_synth(gen, run.out);
    out << "wrote " << gen.dataset.op.length() << " op-cycle rows, " << gen.dataset.sensor.length()
        << " sensor rows, " << gen.dataset.labels->points.size() << " alarm labels to " << run.out.string() << '\n';
    return kExitOk;
}

int cmd_train(const Run& run, std::ostream& out) {
    const PreparedData data = prepare(load_dataset(run.cfg), run.cfg.preprocess);
    const TrainedModels models = train_models(data, run.cfg);
    save_models(models, run.out);
    write_json({{"op_rows", data.train.op.length()},
                {"sensor_rows", data.train.sensor.length()},
                {"op_features", data.train.op.features},
                {"sensor_features", data.train.sensor.features},
                {"op_removed", data.state.op_removed},
                {"sensor_removed", data.state.sensor_removed},
                {"mlp_final_loss", models.mlp_loss.back()},
                {"lstm_final_loss", models.lstm_loss.back()}},
               run.out / "train.json");
    out << "dense autoencoder loss " << models.mlp_loss.front() << " -> " << models.mlp_loss.back() << '\n';
    out << "lstm encoder-decoder loss " << models.lstm_loss.front() << " -> " << models.lstm_loss.back() << '\n';
    return kExitOk;
}

int cmd_score(const Run& run, std::ostream& out) {
    const ScoredTest st = obtain_scores(run.cfg, run.out);
    out << "scored " << st.scores.op.size() << " op-cycle rows and " << st.scores.sensor.size() << " sensor rows\n";
    return kExitOk;
}

int cmd_detect(const Run& run, std::ostream& out) {
    require_thresholds(run.cfg, "detect");
    const ScoredTest st = obtain_scores(run.cfg, run.out);
    const DetectionResult det = detect(st.scores.op, st.scores.sensor, run.cfg.detector());
    save_detection(det, run.out / "detection.json", run.out / "detected.csv");
    out << "candidates " << det.audit.size() << "  detected " << det.detected.size() << "  filtered "
        << det.filtered.size() << '\n';
    return kExitOk;
}

int cmd_eval(const Run& run, std::ostream& out) {
    require_thresholds(run.cfg, "eval");
    const ScoredTest st = obtain_scores(run.cfg, run.out);
    const DetectorConfig dc = run.cfg.detector();
    const DetectionResult det = detect(st.scores.op, st.scores.sensor, dc);
    save_detection(det, run.out / "detection.json", run.out / "detected.csv");
    const EvalReport rep = evaluate_point(st.scores.op, st.scores.sensor, st.alarms, dc);
    write_json(rep.to_json(), run.out / "report.json");
    save_surface_csv(rep, run.out / "surface.csv");
    print_metrics(out, rep);
    return kExitOk;
}

int cmd_sweep(const Run& run, std::ostream& out) {
    const ScoredTest st = obtain_scores(run.cfg, run.out);
    const EvalReport rep = best_f1_sweep(st.scores.op, st.scores.sensor, st.alarms, run.cfg.eval, run.cfg.eta,
                                         run.cfg.inclusive, run.cfg.threads);
    write_json(rep.to_json(), run.out / "report.json");
    save_surface_csv(rep, run.out / "surface.csv");
    print_metrics(out, rep);
    return kExitOk;
}

int cmd_gradcheck(const Run& run, std::ostream& out) {
    const auto& gc = run.cfg.gradcheck;
    nn::GradCheckOptions opts;
    opts.step = gc.step;
    nlohmann::json rows = nlohmann::json::array();
    nlohmann::json worst = nlohmann::json::object();
    for (auto kind : {nn::ModelKind::mlp, nn::ModelKind::lstm, nn::ModelKind::linear}) {
        double max_err = 0.0;
        std::string name;
        for (int k = 0; k < gc.seeds; ++k) {
            const auto rep = nn::grad_check(kind, run.cfg.seed + static_cast<std::uint64_t>(k), opts);
            name = rep.model_kind;
            max_err = std::max(max_err, rep.max_relative_error);
            rows.push_back({{"model", rep.model_kind},
                            {"seed", rep.seed},
                            {"max_relative_error", rep.max_relative_error},
                            {"worst_parameter", rep.worst_parameter},
                            {"parameters_checked", rep.parameters_checked}});
        }
        worst[name] = max_err;
        out << name << ": max relative error " << max_err << " over " << gc.seeds << " seeds\n";
    }
    write_json({{"step", gc.step}, {"max_relative_error", worst}, {"runs", rows}}, run.out / "gradcheck.json");
    return kExitOk;
}

int cmd_bench(const Run& run, std::ostream& out) {
    const BenchReport rep = run_bench(run.cfg);
    const auto j = rep.to_json();
    write_json(j, run.out / "report.json");
    const auto& table = j.at("table");
    out << std::left << std::setw(10) << "metric";
    for (const auto& c : table.at("columns")) out << std::setw(10) << c.get<std::string>();
    out << '\n';
    for (const char* row : {"precision", "recall", "f1"}) {
        out << std::setw(10) << row;
        for (const auto& v : table.at(row)) out << std::setw(10) << std::setprecision(3) << v.get<double>();
        out << '\n';
    }
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-stage anomaly detection for heterogeneous time series", "tdad"};
    app.require_subcommand(1, 1);
    struct Command {
        const char* name;
        const char* help;
        int (*fn)(const Run&, std::ostream&);
    };
    const Command commands[] = {
        {"synth", "generate a synthetic dataset (CSVs + manifest)", cmd_synth},
        {"train", "fit preprocessing and both models", cmd_train},
        {"score", "score the test split", cmd_score},
        {"detect", "run two-stage detection at --tau1/--tau2", cmd_detect},
        {"eval", "detect and compute range-wise precision/recall/F1", cmd_eval},
        {"sweep", "best-F1 search over the threshold grid", cmd_sweep},
        {"gradcheck", "compare analytic gradients with finite differences", cmd_gradcheck},
        {"bench", "single-stage cases C1-C4 against the two-stage detector", cmd_bench},
    };
    std::vector<CliOptions> opts(std::size(commands));
    for (std::size_t k = 0; k < opts.size(); ++k) {
        add_common(app.add_subcommand(commands[k].name, commands[k].help), opts[k]);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        for (std::size_t k = 0; k < opts.size(); ++k) {
            if (app.got_subcommand(commands[k].name)) {
                const Run run = resolve(commands[k].name, opts[k]);
                return commands[k].fn(run, out);
            }
        }
    } catch (const ConfigError& e) {
        err << "tdad: configuration error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "tdad: error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

} // namespace tdad
