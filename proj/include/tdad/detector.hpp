#pragma once

#include "tdad/timeseries.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tdad {

struct DetectorConfig {
    double tau1 = 0.0;          // candidate threshold on op-cycle scores (strict >)
    double tau2 = 0.0;          // removal threshold on sensor scores (strict <); 0 disables filtering
    Timestamp eta = 14;         // neighbourhood half-width in seconds
    Timestamp delta = 600;      // matching tolerance in seconds
    bool inclusive = true;      // neighbourhood [t - eta, t + eta] closed at both ends

    void validate() const;
};

struct Candidate {
    Timestamp t = 0;
    double op_score = 0.0;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Ordered by timestamp; every member has op_score > tau1.
using CandidateSet = std::vector<Candidate>;

struct CandidateAudit {
    Timestamp t = 0;
    double op_score = 0.0;
    // Max sensor score in the neighbourhood; empty when no sensor score falls in it.
    std::optional<double> sensor_max;
    bool kept = true;

    friend bool operator==(const CandidateAudit&, const CandidateAudit&) = default;
};

struct DetectionResult {
    std::vector<Timestamp> detected;
    std::vector<Timestamp> filtered;
    std::vector<CandidateAudit> audit;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    static DetectionResult from_json(const nlohmann::json& j);

    friend bool operator==(const DetectionResult&, const DetectionResult&) = default;
};

CandidateSet stage1_select(const ScoreSeries& op_scores, double tau1);

// Max of the sensor scores with timestamps in the candidate's neighbourhood.
std::optional<double> neighbourhood_max(const ScoreSeries& sensor_scores, Timestamp t, Timestamp eta,
                                        bool inclusive = true);

// A candidate is removed iff its neighbourhood max is strictly below tau2.
// Candidates with no sensor score in the neighbourhood are kept and warned about.
DetectionResult stage2_filter(const CandidateSet& candidates, const ScoreSeries& sensor_scores, double tau2,
                              Timestamp eta, bool inclusive = true);

DetectionResult detect(const ScoreSeries& op_scores, const ScoreSeries& sensor_scores, const DetectorConfig& cfg);

void save_detection(const DetectionResult& result, const std::filesystem::path& json_path,
                    const std::filesystem::path& csv_path);

} // namespace tdad
