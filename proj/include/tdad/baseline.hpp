#pragma once

#include "tdad/config.hpp"
#include "tdad/evaluate.hpp"
#include "tdad/preprocess.hpp"
#include "tdad/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tdad {

/// Input of a single-stage case: one row per timestamp.
struct CaseInput {
    std::vector<Timestamp> timestamps;
    Matrix data;
    bool irregular = false;  // rows are op-cycle events, not consecutive seconds
};

// C1: op rows on T_o. C2: sensor rows at every second. C3: op features (zero
// where no cycle occurred) next to sensor features at every second.
// C4: [op; sensor] at op timestamps only.
CaseInput build_case_input(const HeterogeneousDataset& split, BaselineCase c);

struct CaseResult {
    BaselineCase which = BaselineCase::c1;
    Backbone backbone = Backbone::mlp_dae;
    Eigen::Index input_dim = 0;
    // Sequence backbone applied to event rows that are not evenly spaced.
    bool irregular_input_flag = false;
    EvalReport report;
    std::vector<double> loss_history;
};

// Trains the backbone on the train split of the case input, scores the test
// split, and sweeps a single threshold for the best F1.
CaseResult single_stage_eval(const PreparedData& data, Backbone backbone, BaselineCase c, const RunConfig& cfg,
                             std::uint64_t seed);

/// How Stage II treated the candidates that belong to planted events.
struct StageTwoCheck {
    std::size_t a_candidates = 0;
    std::size_t a_kept = 0;
    std::size_t b_candidates = 0;
    std::size_t b_filtered = 0;

    double a_kept_fraction() const;
    double b_filtered_fraction() const;
    nlohmann::json to_json() const;
};

StageTwoCheck stage_two_check(const DetectionResult& result, const SynthManifest& manifest);

struct BenchSeedResult {
    std::uint64_t seed = 0;
    EvalReport two_stage;
    std::vector<CaseResult> cases;
    std::optional<StageTwoCheck> stage_two;
};

struct BenchReport {
    Backbone backbone = Backbone::mlp_dae;
    std::vector<BaselineCase> cases;
    std::vector<BenchSeedResult> seeds;

    // Mean best F1 over seeds of the two-stage detector and of each case.
    double mean_two_stage_f1() const;
    double mean_case_f1(BaselineCase c) const;

    nlohmann::json to_json() const;
};

// One synthetic dataset per bench seed (or the configured CSV data for every
// seed); trains, scores and sweeps the two-stage detector and each case.
BenchReport run_bench(const RunConfig& cfg);

} // namespace tdad
