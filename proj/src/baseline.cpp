#include "tdad/baseline.hpp"

#include "tdad/error.hpp"
#include "tdad/log.hpp"
#include "tdad/pipeline.hpp"
#include "tdad/scoring.hpp"

#include <algorithm>

namespace tdad {

namespace {

std::vector<Timestamp> sensor_timestamps(const SensorSeries& s) {
    std::vector<Timestamp> ts(static_cast<std::size_t>(s.length()));
    for (Eigen::Index r = 0; r < s.length(); ++r) ts[static_cast<std::size_t>(r)] = s.timestamp(r);
    return ts;
}

Eigen::Index sensor_row(const SensorSeries& s, Timestamp t) {
    const Timestamp r = t - s.start;
    if (r < 0 || r >= s.length()) {
        throw ValidationError("op timestamp " + std::to_string(t) + " lies outside the sensor span");
    }
    return static_cast<Eigen::Index>(r);
}

ScoreSeries score_case(const CaseInput& in, const nn::MlpAutoencoder* dense, const nn::LstmEncoderDecoder* seq,
                       const RunConfig& cfg) {
    if (dense) return score_rows(*dense, in.timestamps, in.data);
    return score_windows(*seq, in.timestamps, in.data, cfg.window, cfg.threads);
}

std::vector<Timestamp> labels_of(const HeterogeneousDataset& ds) {
    return ds.labels ? ds.labels->points : std::vector<Timestamp>{};
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

nlohmann::json metrics_json(const EvalReport& r) {
    return {{"precision", r.metrics.precision}, {"recall", r.metrics.recall}, {"f1", r.f1},
            {"tau1", r.tau1},                   {"tau2", r.tau2},             {"detected", r.detected}};
}

} // namespace

CaseInput build_case_input(const HeterogeneousDataset& split, BaselineCase c) {
    const auto& op = split.op;
    const auto& sensor = split.sensor;
    CaseInput in;
    switch (c) {
    case BaselineCase::c1:
        in.timestamps = op.timestamps;
        in.data = op.data;
        in.irregular = true;
        break;
    case BaselineCase::c2:
        in.timestamps = sensor_timestamps(sensor);
        in.data = sensor.data;
        break;
    case BaselineCase::c3: {
        in.timestamps = sensor_timestamps(sensor);
        in.data = Matrix::Zero(sensor.length(), op.data.cols() + sensor.data.cols());
        in.data.rightCols(sensor.data.cols()) = sensor.data;
        for (Eigen::Index r = 0; r < op.length(); ++r) {
            const auto row = sensor_row(sensor, op.timestamps[static_cast<std::size_t>(r)]);
            in.data.row(row).leftCols(op.data.cols()) = op.data.row(r);
        }
        break;
    }
    case BaselineCase::c4:
        in.timestamps = op.timestamps;
        in.data.resize(op.length(), op.data.cols() + sensor.data.cols());
        for (Eigen::Index r = 0; r < op.length(); ++r) {
            const auto row = sensor_row(sensor, op.timestamps[static_cast<std::size_t>(r)]);
            in.data.row(r).leftCols(op.data.cols()) = op.data.row(r);
            in.data.row(r).rightCols(sensor.data.cols()) = sensor.data.row(row);
        }
        in.irregular = true;
        break;
    }
    return in;
}

CaseResult single_stage_eval(const PreparedData& data, Backbone backbone, BaselineCase c, const RunConfig& cfg,
                             std::uint64_t seed) {
    CaseResult res;
    res.which = c;
    res.backbone = backbone;
    const CaseInput train = build_case_input(data.train, c);
    const CaseInput test = build_case_input(data.test, c);
    res.input_dim = train.data.cols();
    res.irregular_input_flag = backbone == Backbone::lstm_dae && train.irregular;
    if (res.irregular_input_flag) {
        log::warn(std::string("sequence backbone on irregular event rows (case ") + std::string(to_string(c)) + ")");
    }
    log::info(std::string("case ") + std::string(to_string(c)) + ": training on " +
              std::to_string(train.data.rows()) + " rows of width " + std::to_string(train.data.cols()));
    ScoreSeries scores;
    if (backbone == Backbone::mlp_dae) {
        auto r = train_dense(train.data, cfg, seed);
        res.loss_history = std::move(r.loss_history);
        scores = score_case(test, &r.model, nullptr, cfg);
    } else {
        auto r = train_sequence(train.data, cfg, seed);
        res.loss_history = std::move(r.loss_history);
        scores = score_case(test, nullptr, &r.model, cfg);
    }
    res.report = single_threshold_sweep(scores, labels_of(data.test), cfg.eval);
    return res;
}

double StageTwoCheck::a_kept_fraction() const {
    return a_candidates == 0 ? 0.0 : static_cast<double>(a_kept) / static_cast<double>(a_candidates);
}

double StageTwoCheck::b_filtered_fraction() const {
    return b_candidates == 0 ? 0.0 : static_cast<double>(b_filtered) / static_cast<double>(b_candidates);
}

nlohmann::json StageTwoCheck::to_json() const {
    return {{"type_a_candidates", a_candidates},
            {"type_a_kept", a_kept},
            {"type_a_kept_fraction", a_kept_fraction()},
            {"type_b_candidates", b_candidates},
            {"type_b_filtered", b_filtered},
            {"type_b_filtered_fraction", b_filtered_fraction()}};
}

StageTwoCheck stage_two_check(const DetectionResult& result, const SynthManifest& manifest) {
    StageTwoCheck chk;
    for (const auto& a : result.audit) {
        for (const auto& ev : manifest.events) {
            if (std::find(ev.cycles.begin(), ev.cycles.end(), a.t) == ev.cycles.end()) continue;
            if (ev.type == EventType::a) {
                ++chk.a_candidates;
                if (a.kept) ++chk.a_kept;
            } else if (ev.type == EventType::b) {
                ++chk.b_candidates;
                if (!a.kept) ++chk.b_filtered;
            }
        }
    }
    return chk;
}

double BenchReport::mean_two_stage_f1() const {
    std::vector<double> v;
    for (const auto& s : seeds) v.push_back(s.two_stage.f1);
    return mean(v);
}

double BenchReport::mean_case_f1(BaselineCase c) const {
    std::vector<double> v;
    for (const auto& s : seeds) {
        for (const auto& r : s.cases) {
            if (r.which == c) v.push_back(r.report.f1);
        }
    }
    return mean(v);
}

nlohmann::json BenchReport::to_json() const {
    using nlohmann::json;
    json per_seed = json::array();
    for (const auto& s : seeds) {
        json row = {{"seed", s.seed}, {"T-DAD", metrics_json(s.two_stage)}};
        for (const auto& c : s.cases) {
            json m = metrics_json(c.report);
            m["input_dim"] = c.input_dim;
            m["irregular_input_flag"] = c.irregular_input_flag;
            row[std::string(tdad::to_string(c.which))] = m;
        }
        if (s.stage_two) row["stage_two"] = s.stage_two->to_json();
        per_seed.push_back(row);
    }

    // Table-shaped means: one column per method, rows precision / recall / f1.
    json columns = json::array();
    json precision = json::array(), recall = json::array(), f1s = json::array();
    auto add_column = [&](const std::string& name, auto&& pick) {
        std::vector<double> p, r, f;
        for (const auto& s : seeds) {
            if (const EvalReport* rep = pick(s)) {
                p.push_back(rep->metrics.precision);
                r.push_back(rep->metrics.recall);
                f.push_back(rep->f1);
            }
        }
        columns.push_back(name);
        precision.push_back(mean(p));
        recall.push_back(mean(r));
        f1s.push_back(mean(f));
    };
    for (auto c : cases) {
        add_column(std::string(tdad::to_string(c)), [c](const BenchSeedResult& s) -> const EvalReport* {
            for (const auto& r : s.cases) {
                if (r.which == c) return &r.report;
            }
            return nullptr;
        });
    }
    add_column("T-DAD", [](const BenchSeedResult& s) -> const EvalReport* { return &s.two_stage; });

    json report = {{"backbone", std::string(tdad::to_string(backbone))},
                   {"table", {{"columns", columns}, {"precision", precision}, {"recall", recall}, {"f1", f1s}}},
                   {"seeds", per_seed}};
    std::vector<double> a_frac, b_frac;
    for (const auto& s : seeds) {
        if (!s.stage_two) continue;
        a_frac.push_back(s.stage_two->a_kept_fraction());
        b_frac.push_back(s.stage_two->b_filtered_fraction());
    }
    if (!a_frac.empty()) {
        report["stage_two_mean"] = {{"type_a_kept_fraction", mean(a_frac)},
                                    {"type_b_filtered_fraction", mean(b_frac)}};
    }
    return report;
}

BenchReport run_bench(const RunConfig& cfg) {
    BenchReport report;
    report.backbone = cfg.bench.backbone;
    report.cases = cfg.bench.cases;
    for (std::uint64_t seed : cfg.bench.seeds) {
        log::info("bench seed " + std::to_string(seed));
        RunConfig run = cfg;
        run.seed = seed;
        std::optional<SynthManifest> manifest;
        HeterogeneousDataset raw;
        if (cfg.data.from_files()) {
            raw = load_dataset(run);
        } else {
            SynthConfig sc = cfg.data.synth;
            sc.seed = seed;
            auto gen = generate(sc);
            raw = std::move(gen.dataset);
            manifest = std::move(gen.manifest);
        }
        const PreparedData data = prepare(raw, run.preprocess);
        const TrainedModels models = train_models(data, run);
        const TestScores scores = score_split(models, data.test, run);
        const auto alarms = labels_of(data.test);

        BenchSeedResult res;
        res.seed = seed;
        res.two_stage = best_f1_sweep(scores.op, scores.sensor, alarms, run.eval, run.eta, run.inclusive, run.threads);
        if (manifest) {
            DetectorConfig dc = run.detector();
            dc.tau1 = res.two_stage.tau1;
            dc.tau2 = res.two_stage.tau2;
            res.stage_two = stage_two_check(detect(scores.op, scores.sensor, dc), *manifest);
        }
        for (auto c : cfg.bench.cases) {
            if (c == BaselineCase::c1 && cfg.bench.backbone == Backbone::mlp_dae) {
                // The Stage I model is exactly the C1 dense autoencoder.
                CaseResult r;
                r.which = c;
                r.backbone = cfg.bench.backbone;
                r.input_dim = data.train.op.data.cols();
                r.loss_history = models.mlp_loss;
                r.report = single_threshold_sweep(scores.op, alarms, run.eval);
                res.cases.push_back(std::move(r));
                continue;
            }
            res.cases.push_back(
                single_stage_eval(data, cfg.bench.backbone, c, run, derive_seed(seed, seed_stream::baseline)));
        }
        report.seeds.push_back(std::move(res));
    }
    return report;
}

} // namespace tdad
