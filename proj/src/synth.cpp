#include "tdad/synth.hpp"

#include "tdad/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace tdad {

namespace {

using Rng = std::mt19937_64;

Timestamp uniform_int(Rng& rng, Timestamp lo, Timestamp hi) {
    return std::uniform_int_distribution<Timestamp>(lo, hi)(rng);
}

std::string indexed(const char* prefix, int i, int width) {
    std::string n = std::to_string(i);
    if (static_cast<int>(n.size()) < width) n.insert(0, static_cast<std::size_t>(width) - n.size(), '0');
    return prefix + n;
}

std::vector<Interval> merge(std::vector<Interval> v) {
    std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });
    std::vector<Interval> out;
    for (const auto& iv : v) {
        if (iv.end <= iv.start) continue;
        if (!out.empty() && iv.start <= out.back().end) {
            out.back().end = std::max(out.back().end, iv.end);
        } else {
            out.push_back(iv);
        }
    }
    return out;
}

std::vector<Interval> make_downtime(const SynthConfig& cfg, Rng& rng) {
    std::vector<Interval> v;
    for (Timestamp day = 0; day < cfg.duration; day += 86'400) {
        for (const auto& p : cfg.planned_daily) {
            v.push_back({std::min(day + p.start, cfg.duration), std::min(day + p.end, cfg.duration)});
        }
    }
    std::bernoulli_distribution starts(cfg.unplanned_per_day / 24.0);
    for (Timestamp hour = 0; hour < cfg.duration; hour += 3'600) {
        if (!starts(rng)) continue;
        const Timestamp s = hour + uniform_int(rng, 0, 3'599);
        const Timestamp len = uniform_int(rng, cfg.unplanned_min, cfg.unplanned_max);
        v.push_back({std::min(s, cfg.duration), std::min(s + len, cfg.duration)});
    }
    return merge(std::move(v));
}

const Interval* downtime_at(const std::vector<Interval>& downtime, Timestamp t) {
    for (const auto& d : downtime) {
        if (d.contains(t)) return &d;
    }
    return nullptr;
}

std::vector<Timestamp> make_cycles(const SynthConfig& cfg, const std::vector<Interval>& downtime, Rng& rng) {
    std::vector<Timestamp> ts;
    Timestamp t = uniform_int(rng, 0, cfg.cycle_max);
    while (t < cfg.duration) {
        if (const Interval* d = downtime_at(downtime, t)) {
            t = d->end + uniform_int(rng, cfg.cycle_min, cfg.cycle_max);
            continue;
        }
        ts.push_back(t);
        t += uniform_int(rng, cfg.cycle_min, cfg.cycle_max);
    }
    return ts;
}

Eigen::VectorXd column_std(const Matrix& m) {
    Eigen::VectorXd s(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double mean = m.col(c).mean();
        s(c) = std::sqrt((m.col(c).array() - mean).square().mean());
    }
    return s;
}

std::vector<int> pick(Rng& rng, int n, int k) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

double random_sign(Rng& rng) { return std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0; }

// Places `count` event times in [from, to) outside downtime, each with `pre`
// free seconds before it and `post` after it, pairwise at least `sep` apart.
// Positions are drawn one per equal slot of the free time line.
std::vector<Timestamp> place_events(std::size_t count, Timestamp from, Timestamp to,
                                    const std::vector<Interval>& downtime, Timestamp pre, Timestamp post,
                                    Timestamp sep, Rng& rng) {
    if (count == 0) return {};
    std::vector<Interval> free;
    Timestamp cursor = from;
    for (const auto& d : downtime) {
        if (d.end <= cursor) continue;
        if (d.start >= to) break;
        free.push_back({cursor, std::min(d.start, to)});
        cursor = d.end;
    }
    if (cursor < to) free.push_back({cursor, to});
    Timestamp total = 0;
    for (auto& f : free) {
        f.start += pre;
        f.end -= post;
        if (f.end > f.start) total += f.end - f.start;
    }
    const double slot = static_cast<double>(total) / static_cast<double>(count);
    if (slot < static_cast<double>(sep + 1)) {
        throw ConfigError("infeasible event spacing: " + std::to_string(count) + " events need " +
                          std::to_string(static_cast<long long>(count) * (sep + 1)) + " s of free time, only " +
                          std::to_string(total) + " s available");
    }
    std::vector<Timestamp> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double lo = static_cast<double>(i) * slot + static_cast<double>(sep) / 2.0;
        const double span = slot - static_cast<double>(sep);
        Timestamp p = static_cast<Timestamp>(std::floor(lo + std::uniform_real_distribution<double>(0.0, span)(rng)));
        for (const auto& f : free) {
            if (f.end <= f.start) continue;
            const Timestamp len = f.end - f.start;
            if (p < len) {
                out.push_back(f.start + p);
                break;
            }
            p -= len;
        }
    }
    return out;
}

} // namespace

std::string_view to_string(EventType type) {
    switch (type) {
    case EventType::a: return "A";
    case EventType::b: return "B";
    case EventType::glitch: return "glitch";
    }
    return "?";
}

void SynthConfig::validate() const {
    if (duration <= 0) throw ConfigError("duration must be > 0");
    if (!(cycle_min >= 1 && cycle_min <= cycle_max)) throw ConfigError("cycle range must satisfy 1 <= min <= max");
    if (op_features < 1 || sensor_features < 1) throw ConfigError("feature counts must be >= 1");
    if (static_op_features < 0 || static_sensor_features < 0) throw ConfigError("static column counts must be >= 0");
    if (latent_factors < 1) throw ConfigError("latent_factors must be >= 1");
    if (!(sensor_persistence >= 0.0 && sensor_persistence < 1.0)) {
        throw ConfigError("sensor_persistence must be in [0, 1)");
    }
    if (op_noise < 0.0 || sensor_noise < 0.0) throw ConfigError("noise levels must be >= 0");
    if (!(op_missing_rate >= 0.0 && op_missing_rate < 1.0)) throw ConfigError("op_missing_rate must be in [0, 1)");
    if (unplanned_per_day < 0.0 || unplanned_per_day > 24.0) throw ConfigError("unplanned_per_day must be in [0, 24]");
    if (!(unplanned_min >= 1 && unplanned_min <= unplanned_max)) throw ConfigError("unplanned downtime range invalid");
    for (const auto& p : planned_daily) {
        if (!(p.start >= 0 && p.start < p.end && p.end <= 86'400)) {
            throw ConfigError("planned downtime windows must lie within one day");
        }
    }
    if (type_a < 0 || type_b < 0 || glitches < 0) throw ConfigError("event counts must be >= 0");
    if (anomaly_cycles < 1) throw ConfigError("anomaly_cycles must be >= 1");
    if (affected_features < 1 || affected_features > op_features || affected_features > sensor_features) {
        throw ConfigError("affected_features must be in [1, min(op_features, sensor_features)]");
    }
    if (glitch_features < 1 || glitch_features > sensor_features) {
        throw ConfigError("glitch_features must be in [1, sensor_features]");
    }
    if (magnitude < 0.0 || glitch_magnitude < 0.0) throw ConfigError("magnitudes must be >= 0");
    if (bump_before < 0 || bump_after < 1 || glitch_length < 1 || label_lag_max < 0) {
        throw ConfigError("event shape lengths invalid");
    }
    if (separation < 1) throw ConfigError("separation must be >= 1");
    const Timestamp start = region_start();
    if (start < 0 || start >= duration) throw ConfigError("anomaly_region_start must lie inside the duration");
}

SynthOutput generate(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    SynthOutput out;
    auto& manifest = out.manifest;
    manifest.seed = cfg.seed;
    manifest.downtime = make_downtime(cfg, rng);
    const auto cycles = make_cycles(cfg, manifest.downtime, rng);
    if (cycles.empty()) throw ConfigError("configuration yields no operation cycles");

    const Eigen::Index L = cfg.duration;
    const int K = cfg.latent_factors;
    std::normal_distribution<double> normal(0.0, 1.0);

    // Slow latent factors shared by both signal types.
    Matrix latent(L, K);
    const double phi = cfg.sensor_persistence;
    const double innov = std::sqrt(1.0 - phi * phi);
    for (int k = 0; k < K; ++k) latent(0, k) = normal(rng);
    for (Eigen::Index t = 1; t < L; ++t) {
        for (int k = 0; k < K; ++k) latent(t, k) = phi * latent(t - 1, k) + innov * normal(rng);
    }

    const int ds = cfg.sensor_features;
    const int dop = cfg.op_features;
    Matrix mix_s(ds, K), mix_o(dop, K);
    for (Eigen::Index i = 0; i < mix_s.size(); ++i) mix_s.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < mix_o.size(); ++i) mix_o.data()[i] = normal(rng);
    Eigen::VectorXd off_s(ds), off_o(dop);
    for (int c = 0; c < ds; ++c) off_s(c) = 5.0 * normal(rng);
    for (int c = 0; c < dop; ++c) off_o(c) = 5.0 * normal(rng);

    Matrix sensor(L, ds);
    for (Eigen::Index t = 0; t < L; ++t) {
        for (int c = 0; c < ds; ++c) {
            sensor(t, c) = off_s(c) + mix_s.row(c).dot(latent.row(t)) + cfg.sensor_noise * normal(rng);
        }
    }
    const auto n_cycles = static_cast<Eigen::Index>(cycles.size());
    Matrix op(n_cycles, dop);
    for (Eigen::Index r = 0; r < n_cycles; ++r) {
        const auto t = static_cast<Eigen::Index>(cycles[static_cast<std::size_t>(r)]);
        for (int c = 0; c < dop; ++c) {
            op(r, c) = off_o(c) + mix_o.row(c).dot(latent.row(t)) + cfg.op_noise * normal(rng);
        }
    }
    const Eigen::VectorXd std_s = column_std(sensor);
    const Eigen::VectorXd std_o = column_std(op);

    std::vector<std::string> op_names, sensor_names;
    for (int c = 0; c < dop; ++c) op_names.push_back(indexed("op_", c, 2));
    for (int c = 0; c < ds; ++c) sensor_names.push_back(indexed("sensor_", c, 1));

    // Events.
    std::vector<EventType> types;
    types.insert(types.end(), static_cast<std::size_t>(cfg.type_a), EventType::a);
    types.insert(types.end(), static_cast<std::size_t>(cfg.type_b), EventType::b);
    types.insert(types.end(), static_cast<std::size_t>(cfg.glitches), EventType::glitch);
    std::shuffle(types.begin(), types.end(), rng);
    const Timestamp pre = std::max<Timestamp>(cfg.bump_before, 60) + 120;
    const Timestamp post = std::max({cfg.glitch_length, cfg.bump_after, cfg.label_lag_max,
                                     static_cast<Timestamp>(cfg.anomaly_cycles) * cfg.cycle_max}) + 120;
    const auto times = place_events(types.size(), cfg.region_start(), cfg.duration, manifest.downtime, pre, post,
                                    cfg.separation, rng);

    std::vector<char> disturbed(cycles.size(), 0);
    std::vector<Timestamp> labels;
    for (std::size_t e = 0; e < types.size(); ++e) {
        SynthEvent ev;
        ev.type = types[e];
        ev.t = times[e];
        if (ev.type != EventType::glitch) {
            auto first = static_cast<std::size_t>(std::lower_bound(cycles.begin(), cycles.end(), times[e]) -
                                                  cycles.begin());
            if (first + static_cast<std::size_t>(cfg.anomaly_cycles) > cycles.size()) {
                throw ConfigError("event at " + std::to_string(times[e]) + " runs past the last cycle");
            }
            ev.t = cycles[first];
            const auto feats = pick(rng, dop, cfg.affected_features);
            std::vector<double> kick;
            for (int f : feats) {
                ev.op_features.push_back(op_names[static_cast<std::size_t>(f)]);
                kick.push_back(random_sign(rng) * cfg.magnitude * std_o(f));
            }
            for (int k = 0; k < cfg.anomaly_cycles; ++k) {
                const std::size_t r = first + static_cast<std::size_t>(k);
                ev.cycles.push_back(cycles[r]);
                disturbed[r] = 1;
                for (std::size_t f = 0; f < feats.size(); ++f) {
                    op(static_cast<Eigen::Index>(r), feats[f]) += kick[f];
                }
            }
        }
        if (ev.type == EventType::a) {
            const auto chans = pick(rng, ds, cfg.affected_features);
            const Timestamp b0 = ev.t - cfg.bump_before;
            const Timestamp span = cfg.bump_before + cfg.bump_after;
            for (int c : chans) {
                ev.sensor_features.push_back(sensor_names[static_cast<std::size_t>(c)]);
                const double amp = random_sign(rng) * cfg.magnitude * std_s(c);
                for (Timestamp s = b0; s <= b0 + span; ++s) {
                    const double shape =
                        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(s - b0) /
                                              static_cast<double>(span)));
                    sensor(static_cast<Eigen::Index>(s), c) += amp * shape;
                }
            }
            ev.label = std::min(cfg.duration - 1, ev.t + uniform_int(rng, 0, cfg.label_lag_max));
            labels.push_back(*ev.label);
        }
        if (ev.type == EventType::glitch) {
            const auto chans = pick(rng, ds, cfg.glitch_features);
            for (int c : chans) {
                ev.sensor_features.push_back(sensor_names[static_cast<std::size_t>(c)]);
                const double amp = random_sign(rng) * cfg.glitch_magnitude * std_s(c);
                for (Timestamp s = ev.t; s < ev.t + cfg.glitch_length; ++s) sensor(static_cast<Eigen::Index>(s), c) += amp;
            }
        }
        manifest.events.push_back(std::move(ev));
    }
    std::sort(manifest.events.begin(), manifest.events.end(),
              [](const SynthEvent& a, const SynthEvent& b) { return a.t < b.t; });
    std::sort(labels.begin(), labels.end());

    if (cfg.op_missing_rate > 0.0) {
        std::bernoulli_distribution hole(cfg.op_missing_rate);
        for (Eigen::Index r = 1; r < n_cycles; ++r) {
            if (disturbed[static_cast<std::size_t>(r)]) continue;
            for (int c = 0; c < dop; ++c) {
                if (hole(rng)) op(r, c) = std::numeric_limits<double>::quiet_NaN();
            }
        }
    }

    // Planted constant columns go after the informative ones.
    auto& ds_out = out.dataset;
    ds_out.op.timestamps = cycles;
    ds_out.op.features = op_names;
    ds_out.op.data.resize(n_cycles, dop + cfg.static_op_features);
    ds_out.op.data.leftCols(dop) = op;
    for (int c = 0; c < cfg.static_op_features; ++c) {
        const auto name = indexed("op_static_", c, 1);
        ds_out.op.features.push_back(name);
        manifest.static_op_features.push_back(name);
        ds_out.op.data.col(dop + c).setConstant(1.0 + c);
    }
    ds_out.sensor.start = 0;
    ds_out.sensor.features = sensor_names;
    ds_out.sensor.data.resize(L, ds + cfg.static_sensor_features);
    ds_out.sensor.data.leftCols(ds) = sensor;
    for (int c = 0; c < cfg.static_sensor_features; ++c) {
        const auto name = indexed("sensor_static_", c, 1);
        ds_out.sensor.features.push_back(name);
        manifest.static_sensor_features.push_back(name);
        ds_out.sensor.data.col(ds + c).setConstant(0.5 * (c + 1));
    }
    ds_out.labels = AlarmLabels{labels};
    ds_out.validate();
    return out;
}

nlohmann::json SynthManifest::to_json() const {
    nlohmann::json events_json = nlohmann::json::array();
    for (const auto& e : events) {
        events_json.push_back({{"type", std::string(tdad::to_string(e.type))},
                               {"t", e.t},
                               {"cycles", e.cycles},
                               {"op_features", e.op_features},
                               {"sensor_features", e.sensor_features},
                               {"label", e.label ? nlohmann::json(*e.label) : nlohmann::json(nullptr)}});
    }
    nlohmann::json down = nlohmann::json::array();
    for (const auto& d : downtime) down.push_back({{"start", d.start}, {"end", d.end}});
    return {{"seed", seed},
            {"events", events_json},
            {"downtime", down},
            {"static_op_features", static_op_features},
            {"static_sensor_features", static_sensor_features}};
}

void write_synth(const SynthOutput& out, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    save_sensor_csv(out.dataset.sensor, dir / "sensor.csv");
    save_opcycle_csv(out.dataset.op, dir / "opcycle.csv");
    save_labels_csv(out.dataset.labels.value_or(AlarmLabels{}), dir / "labels.csv");
    std::ofstream m(dir / "manifest.json");
    if (!m) throw IoError("cannot write " + (dir / "manifest.json").string());
    m << out.manifest.to_json().dump(2) << '\n';
    if (!m) throw IoError("write failed for " + (dir / "manifest.json").string());
}

} // namespace tdad
