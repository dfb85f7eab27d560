#include "support.hpp"

#include "tdad/cli.hpp"
#include "tdad/timeseries.hpp"

#include <doctest.h>

#include <sstream>

using namespace tdad;
using nlohmann::json;

namespace {

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string write_config(const test::TempDir& dir, const json& j, const std::string& name = "run.json") {
    const auto path = dir / name;
    test::write_file(path, j.dump(2));
    return path.string();
}

// Random op and sensor scores written as CSV; the run then needs no model.
json with_scores(const test::TempDir& dir, test::Rng& rng) {
    const auto op = test::random_scores(rng, test::random_times(rng, 80, 7200, 14'399), 6);
    std::vector<Timestamp> secs;
    for (Timestamp t = 7200; t < 14'400; ++t) secs.push_back(t);
    const auto sensor = test::random_scores(rng, secs, 0);
    save_scores(op, dir / "op.csv");
    save_scores(sensor, dir / "sensor.csv");
    json j = test::small_run_json();
    j["scores"] = {{"op", (dir / "op.csv").string()}, {"sensor", (dir / "sensor.csv").string()}};
    return j;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST_CASE("usage errors exit with 2") {
    test::TempDir dir("cli");
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({"synth"}).code == kExitUsage);
    CHECK(cli({"detect", "--out", (dir / "d").string(), "--tau1", "0", "--tau2", "0.1"}).code == kExitUsage);
    CHECK(cli({"detect", "--out", (dir / "d").string(), "--tau1", "-1", "--tau2", "0.1"}).code == kExitUsage);
    CHECK(cli({"detect", "--out", (dir / "d").string(), "--tau1", "1", "--tau2", "-0.1"}).code == kExitUsage);
    CHECK(cli({"detect", "--out", (dir / "d").string()}).code == kExitUsage);
    CHECK(cli({"train", "--config", (dir / "absent.json").string()}).code == kExitUsage);
    const auto bad = write_config(dir, {{"mlp", {{"epochs", 0}}}});
    const auto r = cli({"train", "--config", bad, "--out", (dir / "t").string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("epochs") != std::string::npos);
}

TEST_CASE("help exits with 0") {
    const auto r = cli({"--help"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("sweep") != std::string::npos);
}

TEST_CASE("runtime failures exit with 1") {
    test::TempDir dir("cli");
    const auto cfg = write_config(dir, {{"data", {{"sensor", "missing_s.csv"}, {"opcycle", "missing_o.csv"}}}});
    const auto r = cli({"train", "--config", cfg, "--out", (dir / "t").string()});
    CHECK(r.code == kExitRuntime);
    CHECK(r.err.find("missing_s.csv") != std::string::npos);
}

TEST_CASE("synth writes identical files for identical seeds") {
    test::TempDir dir("cli");
    const auto cfg = write_config(dir, test::small_run_json());
    REQUIRE(cli({"synth", "--config", cfg, "--out", (dir / "a").string(), "--seed", "7"}).code == kExitOk);
    REQUIRE(cli({"synth", "--config", cfg, "--out", (dir / "b").string(), "--seed", "7"}).code == kExitOk);
    REQUIRE(cli({"synth", "--config", cfg, "--out", (dir / "c").string(), "--seed", "8"}).code == kExitOk);
    for (const char* f : {"sensor.csv", "opcycle.csv", "labels.csv", "manifest.json"}) {
        CHECK(test::read_file(dir / "a" / f) == test::read_file(dir / "b" / f));
    }
    CHECK(test::read_file(dir / "a" / "sensor.csv") != test::read_file(dir / "c" / "sensor.csv"));
    CHECK(std::filesystem::exists(dir / "a" / "config.json"));
}

TEST_CASE("detect with tau2 = 0 reports exactly the stage I candidates") {
    test::TempDir dir("cli");
    test::Rng rng(71);
    const auto cfg = write_config(dir, with_scores(dir, rng));
    const auto r = cli({"detect", "--config", cfg, "--out", (dir / "d").string(), "--tau1", "0.5", "--tau2", "0"});
    REQUIRE(r.code == kExitOk);
    const auto op = load_scores_csv(dir / "op.csv");
    const auto detected = load_labels_csv(dir / "d" / "detected.csv");
    CHECK(detected.points == test::naive_stage1(op, 0.5));
}

TEST_CASE("sweep writes the whole grid and a singleton sweep equals eval") {
    test::TempDir dir("cli");
    test::Rng rng(73);
    json j = with_scores(dir, rng);
    j["eval"]["tau1_grid"] = {0.2, 0.4, 0.6};
    j["eval"]["tau2_grid"] = {0.0, 0.3, 0.6, 0.9};
    const auto grid_cfg = write_config(dir, j, "grid.json");
    REQUIRE(cli({"sweep", "--config", grid_cfg, "--out", (dir / "s").string()}).code == kExitOk);
    CHECK(line_count(test::read_file(dir / "s" / "surface.csv")) == 1 + 3 * 4);

    j["eval"]["tau1_grid"] = {0.4};
    j["eval"]["tau2_grid"] = {0.3};
    const auto one_cfg = write_config(dir, j, "one.json");
    REQUIRE(cli({"sweep", "--config", one_cfg, "--out", (dir / "one").string()}).code == kExitOk);
    REQUIRE(cli({"eval", "--config", one_cfg, "--out", (dir / "e").string(), "--tau1", "0.4", "--tau2", "0.3"}).code ==
            kExitOk);
    const auto sweep = json::parse(test::read_file(dir / "one" / "report.json"));
    const auto eval = json::parse(test::read_file(dir / "e" / "report.json"));
    for (const char* k : {"precision", "recall", "f1", "detected"}) CHECK(sweep.at(k) == eval.at(k));
}

TEST_CASE("train is deterministic and its models feed detect") {
    test::TempDir dir("cli");
    const auto cfg = write_config(dir, test::small_run_json());
    REQUIRE(cli({"train", "--config", cfg, "--out", (dir / "a").string()}).code == kExitOk);
    REQUIRE(cli({"train", "--config", cfg, "--out", (dir / "b").string()}).code == kExitOk);
    for (const char* f : {"mlp.json", "lstm.json", "preprocess.json", "mlp_loss.csv", "lstm_loss.csv"}) {
        CHECK(test::read_file(dir / "a" / f) == test::read_file(dir / "b" / f));
    }
    json j = test::small_run_json();
    j["model_dir"] = (dir / "a").string();
    const auto reuse = write_config(dir, j, "reuse.json");
    const auto r = cli({"detect", "--config", reuse, "--out", (dir / "d").string(), "--tau1", "0.1", "--tau2", "0.01"});
    CHECK(r.code == kExitOk);
    CHECK(std::filesystem::exists(dir / "d" / "detection.json"));
    CHECK(std::filesystem::exists(dir / "d" / "op_scores.csv"));
}

TEST_CASE("gradcheck writes its report") {
    test::TempDir dir("cli");
    const auto cfg = write_config(dir, {{"gradcheck", {{"seeds", 2}}}});
    const auto r = cli({"gradcheck", "--config", cfg, "--out", (dir / "g").string()});
    REQUIRE(r.code == kExitOk);
    const auto j = json::parse(test::read_file(dir / "g" / "gradcheck.json"));
    CHECK(j.at("runs").size() == 6);
    CHECK(j.at("max_relative_error").at("mlp").get<double>() < 1e-6);
}
