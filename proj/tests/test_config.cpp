#include "support.hpp"

#include "tdad/config.hpp"
#include "tdad/error.hpp"

#include <doctest.h>

using namespace tdad;
using nlohmann::json;

TEST_CASE("defaults round-trip through json") {
    const RunConfig a;
    const RunConfig b = RunConfig::from_json(a.to_json());
    CHECK(b.to_json() == a.to_json());
}

TEST_CASE("a customized config round-trips through json") {
    json j = test::small_run_json();
    j["detector"] = {{"tau1", 0.4}, {"tau2", 0.02}, {"eta", 20}, {"inclusive", false}};
    j["eval"]["tau1_grid"] = {0.1, 0.2};
    j["bench"]["cases"] = {"C2", "C4"};
    j["bench"]["backbone"] = "lstm_dae";
    j["mlp"]["first_activation"] = "relu";
    j["window"]["aggregation"] = "mean";
    const RunConfig a = RunConfig::from_json(j);
    CHECK(*a.tau1 == 0.4);
    CHECK(a.eta == 20);
    CHECK_FALSE(a.inclusive);
    CHECK(a.bench.cases == std::vector<BaselineCase>{BaselineCase::c2, BaselineCase::c4});
    CHECK(a.bench.backbone == Backbone::lstm_dae);
    CHECK(a.window.aggregation == Aggregation::mean);
    CHECK(a.data.synth.duration == 14'400);
    CHECK(a.lstm.hidden == 8);
    CHECK(RunConfig::from_json(a.to_json()).to_json() == a.to_json());
}

TEST_CASE("unknown keys are rejected at every level") {
    CHECK_THROWS_AS(RunConfig::from_json({{"sed", 1}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"mlp", {{"epoch", 3}}}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"data", {{"synth", {{"durration", 10}}}}}}), ConfigError);
    try {
        RunConfig::from_json({{"detector", {{"tau3", 1.0}}}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("tau3") != std::string::npos);
    }
}

TEST_CASE("ill-typed and out-of-range values are rejected") {
    CHECK_THROWS_AS(RunConfig::from_json({{"seed", "one"}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"threads", 0}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"mlp", {{"epochs", 0}}}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"window", {{"step", 0}}}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"window", {{"aggregation", "median"}}}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"detector", {{"tau2", -0.1}}}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"bench", {{"cases", {"C9"}}}}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"data", {{"sensor", "s.csv"}}}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"data", {{"synth", {{"affected_features", 99}}}}}}), ConfigError);
}

TEST_CASE("relative paths resolve against the config directory") {
    test::TempDir dir("cfg");
    test::write_file(dir / "run.json",
                     R"({"data": {"sensor": "in/s.csv", "opcycle": "/abs/o.csv"}, "output_dir": "out"})");
    const RunConfig c = RunConfig::load(dir / "run.json");
    CHECK(*c.data.sensor == dir / "in/s.csv");
    CHECK(*c.data.opcycle == std::filesystem::path("/abs/o.csv"));
    CHECK(*c.output_dir == dir / "out");
}

TEST_CASE("malformed or missing config files") {
    test::TempDir dir("cfg");
    test::write_file(dir / "bad.json", "{ not json");
    CHECK_THROWS_AS(RunConfig::load(dir / "bad.json"), ConfigError);
    CHECK_THROWS_AS(RunConfig::load(dir / "absent.json"), ConfigError);
}

TEST_CASE("the synthetic seed follows the run seed unless set explicitly") {
    CHECK(RunConfig::from_json({{"seed", 9}}).data.synth.seed == 9);
    const auto c = RunConfig::from_json({{"seed", 9}, {"data", {{"synth", {{"seed", 4}}}}}});
    CHECK(c.data.synth.seed == 4);
    CHECK(c.data.synth_seed_set);
}

TEST_CASE("detector thresholds default to zero when unset") {
    const RunConfig c;
    const auto d = c.detector();
    CHECK(d.tau1 == 0.0);
    CHECK(d.tau2 == 0.0);
    CHECK(d.eta == 14);
}
