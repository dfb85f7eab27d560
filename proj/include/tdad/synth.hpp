#pragma once

#include "tdad/timeseries.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tdad {

/// Half-open interval [start, end) of seconds with no operation cycles.
struct Interval {
    Timestamp start = 0;
    Timestamp end = 0;

    bool contains(Timestamp t) const { return t >= start && t < end; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

struct SynthConfig {
    std::uint64_t seed = 1;
    Timestamp duration = 86'400;
    Timestamp cycle_min = 13;
    Timestamp cycle_max = 15;

    // Planned downtime repeats every day at these offsets from midnight.
    std::vector<Interval> planned_daily{{36'000, 36'900}, {68'400, 70'200}};
    double unplanned_per_day = 1.0;
    Timestamp unplanned_min = 1'200;
    Timestamp unplanned_max = 3'600;

    int op_features = 22;
    int sensor_features = 7;
    int static_op_features = 2;      // constant columns appended to the op file
    int static_sensor_features = 1;  // constant columns appended to the sensor file
    int latent_factors = 3;
    double sensor_persistence = 0.995;  // AR(1) coefficient of the latent factors
    double op_noise = 0.05;
    double sensor_noise = 0.02;
    double op_missing_rate = 0.001;  // never on the first row or on anomalous rows

    int type_a = 8;        // op + sensor disturbance, labeled
    int type_b = 8;        // op disturbance only, unlabeled
    int glitches = 6;      // sensor disturbance only, unlabeled
    int anomaly_cycles = 2;
    int affected_features = 3;
    int glitch_features = 4;
    double magnitude = 6.0;         // in feature standard deviations
    double glitch_magnitude = 10.0;
    Timestamp bump_before = 10;     // sensor bump spans [t - before, t + after]
    Timestamp bump_after = 40;
    Timestamp glitch_length = 120;
    Timestamp label_lag_max = 120;
    Timestamp separation = 1'220;   // minimum distance between event windows
    // Events are placed at or after this time; defaults to duration / 2.
    std::optional<Timestamp> anomaly_region_start;

    Timestamp region_start() const { return anomaly_region_start.value_or(duration / 2); }
    void validate() const;
};

enum class EventType { a, b, glitch };

std::string_view to_string(EventType type);

struct SynthEvent {
    EventType type = EventType::a;
    Timestamp t = 0;                      // first disturbed cycle (or glitch start)
    std::vector<Timestamp> cycles;        // disturbed op cycles
    std::vector<std::string> op_features;
    std::vector<std::string> sensor_features;
    std::optional<Timestamp> label;
};

struct SynthManifest {
    std::uint64_t seed = 0;
    std::vector<SynthEvent> events;
    std::vector<Interval> downtime;
    std::vector<std::string> static_op_features;
    std::vector<std::string> static_sensor_features;

    nlohmann::json to_json() const;
};

struct SynthOutput {
    HeterogeneousDataset dataset;
    SynthManifest manifest;
};

SynthOutput generate(const SynthConfig& cfg);

// Writes sensor.csv, opcycle.csv, labels.csv and manifest.json into dir.
void write_synth(const SynthOutput& out, const std::filesystem::path& dir);

} // namespace tdad
