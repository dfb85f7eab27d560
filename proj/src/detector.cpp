#include "tdad/detector.hpp"

#include "tdad/error.hpp"
#include "tdad/log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace tdad {

void DetectorConfig::validate() const {
    if (!(std::isfinite(tau1) && tau1 >= 0.0)) throw ConfigError("tau1 must be a finite value >= 0");
    if (!(std::isfinite(tau2) && tau2 >= 0.0)) throw ConfigError("tau2 must be a finite value >= 0");
    if (eta < 0) throw ConfigError("eta must be >= 0");
    if (delta <= 0) throw ConfigError("delta must be > 0");
}

CandidateSet stage1_select(const ScoreSeries& op_scores, double tau1) {
    CandidateSet out;
    for (std::size_t k = 0; k < op_scores.size(); ++k) {
        if (op_scores.scores[k] > tau1) out.push_back({op_scores.timestamps[k], op_scores.scores[k]});
    }
    return out;
}

std::optional<double> neighbourhood_max(const ScoreSeries& sensor_scores, Timestamp t, Timestamp eta,
                                        bool inclusive) {
    const Timestamp lo = inclusive ? t - eta : t - eta + 1;
    const Timestamp hi = inclusive ? t + eta : t + eta - 1;
    const auto& ts = sensor_scores.timestamps;
    auto it = std::lower_bound(ts.begin(), ts.end(), lo);
    std::optional<double> best;
    for (; it != ts.end() && *it <= hi; ++it) {
        const double v = sensor_scores.scores[static_cast<std::size_t>(it - ts.begin())];
        if (!best || v > *best) best = v;
    }
    return best;
}

DetectionResult stage2_filter(const CandidateSet& candidates, const ScoreSeries& sensor_scores, double tau2,
                              Timestamp eta, bool inclusive) {
    DetectionResult r;
    for (const auto& c : candidates) {
        CandidateAudit a{c.t, c.op_score, neighbourhood_max(sensor_scores, c.t, eta, inclusive), true};
        if (!a.sensor_max) {
            r.warnings.push_back("candidate " + std::to_string(c.t) + " has no sensor coverage; kept");
        } else if (*a.sensor_max < tau2) {
            a.kept = false;
        }
        (a.kept ? r.detected : r.filtered).push_back(c.t);
        r.audit.push_back(a);
    }
    for (const auto& w : r.warnings) log::warn(w);
    return r;
}

DetectionResult detect(const ScoreSeries& op_scores, const ScoreSeries& sensor_scores, const DetectorConfig& cfg) {
    cfg.validate();
    return stage2_filter(stage1_select(op_scores, cfg.tau1), sensor_scores, cfg.tau2, cfg.eta, cfg.inclusive);
}

nlohmann::json DetectionResult::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& a : audit) {
        rows.push_back({{"t", a.t},
                        {"op_score", a.op_score},
                        {"sensor_max", a.sensor_max ? nlohmann::json(*a.sensor_max) : nlohmann::json(nullptr)},
                        {"kept", a.kept}});
    }
    return {{"detected", detected}, {"filtered", filtered}, {"audit", rows}, {"warnings", warnings}};
}

DetectionResult DetectionResult::from_json(const nlohmann::json& j) {
    DetectionResult r;
    r.detected = j.at("detected").get<std::vector<Timestamp>>();
    r.filtered = j.at("filtered").get<std::vector<Timestamp>>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& row : j.at("audit")) {
        CandidateAudit a;
        a.t = row.at("t").get<Timestamp>();
        a.op_score = row.at("op_score").get<double>();
        if (!row.at("sensor_max").is_null()) a.sensor_max = row.at("sensor_max").get<double>();
        a.kept = row.at("kept").get<bool>();
        r.audit.push_back(a);
    }
    return r;
}

void save_detection(const DetectionResult& result, const std::filesystem::path& json_path,
                    const std::filesystem::path& csv_path) {
    {
        std::ofstream out(json_path);
        if (!out) throw IoError("cannot write " + json_path.string());
        out << result.to_json().dump(2) << '\n';
        if (!out) throw IoError("write failed for " + json_path.string());
    }
    save_labels_csv(AlarmLabels{result.detected}, csv_path);
}

} // namespace tdad
