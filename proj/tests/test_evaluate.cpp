#include "support.hpp"

#include "tdad/error.hpp"
#include "tdad/evaluate.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace tdad;

namespace {

struct SweepInstance {
    ScoreSeries op;
    ScoreSeries sensor;
    std::vector<Timestamp> alarms;
    std::vector<double> g1;
    std::vector<double> g2;
    Timestamp delta = 600;
    Timestamp eta = 14;
};

std::vector<double> random_grid(test::Rng& rng, std::size_t n, int levels) {
    std::vector<double> g;
    while (g.size() < n) {
        g.push_back(static_cast<double>(test::uniform_int(rng, 0, levels)) / levels);
        std::sort(g.begin(), g.end());
        g.erase(std::unique(g.begin(), g.end()), g.end());
    }
    return g;
}

SweepInstance random_sweep(test::Rng& rng) {
    SweepInstance in;
    const Timestamp span = test::uniform_int(rng, 2000, 20000);
    in.op = test::random_scores(rng, test::random_times(rng, static_cast<std::size_t>(test::uniform_int(rng, 5, 80)), 0, span), 10);
    in.sensor = test::random_scores(rng, test::random_times(rng, static_cast<std::size_t>(test::uniform_int(rng, 50, 600)), 0, span), 10);
    in.alarms = test::random_times(rng, static_cast<std::size_t>(test::uniform_int(rng, 1, 8)), 0, span);
    in.g1 = random_grid(rng, 20, 40);
    in.g2 = random_grid(rng, 20, 40);
    in.delta = test::uniform_int(rng, 50, 900);
    in.eta = test::uniform_int(rng, 0, 40);
    return in;
}

} // namespace

TEST_CASE("range-wise precision and recall examples") {
    auto pr = range_precision_recall({100}, {400}, 600);
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
    pr = range_precision_recall({100, 5000}, {400}, 600);
    CHECK(pr.precision == 0.5);
    CHECK(pr.recall == 1.0);
    pr = range_precision_recall({}, {400}, 600);
    CHECK(pr.precision == 0.0);
    CHECK(pr.precision_undefined);
    CHECK(pr.recall == 0.0);
    pr = range_precision_recall({100}, {}, 600);
    CHECK(pr.recall_undefined);
    CHECK(pr.recall == 0.0);
    CHECK(pr.precision == 0.0);
}

TEST_CASE("a detection exactly delta away matches") {
    CHECK(range_precision_recall({0}, {600}, 600).precision == 1.0);
    CHECK(range_precision_recall({0}, {601}, 600).precision == 0.0);
}

TEST_CASE("matching is not one-to-one") {
    const auto pr = range_precision_recall({100, 110, 120}, {105, 5000}, 600);
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 0.5);
}

TEST_CASE("delta must be positive") {
    CHECK_THROWS_AS(range_precision_recall({1}, {1}, 0), ConfigError);
}

TEST_CASE("f1 examples") {
    CHECK(f1(1.0, 1.0) == 1.0);
    CHECK(f1(0.0, 0.5) == 0.0);
    CHECK(f1(0.0, 0.0) == 0.0);
    const double v = f1(0.71, 0.84);
    CHECK(v == doctest::Approx(0.7695).epsilon(1e-4));
    CHECK(std::round(v * 100.0) / 100.0 == doctest::Approx(0.77));
}

TEST_CASE("range metrics equal the pairwise oracle on 1000 random instances") {
    test::Rng rng(61);
    for (int trial = 0; trial < 1000; ++trial) {
        const Timestamp span = test::uniform_int(rng, 10, 50000);
        auto det = test::random_times(rng, static_cast<std::size_t>(test::uniform_int(rng, 0, 40)), 0, span);
        auto alarms = test::random_times(rng, static_cast<std::size_t>(test::uniform_int(rng, 0, 40)), 0, span);
        std::shuffle(det.begin(), det.end(), rng);
        const Timestamp delta = test::uniform_int(rng, 1, 2000);
        const auto got = range_precision_recall(det, alarms, delta);
        const auto want = test::naive_precision_recall(det, alarms, delta);
        CHECK(got.precision == want.precision);
        CHECK(got.recall == want.recall);
        CHECK(got.precision_undefined == want.precision_undefined);
        CHECK(got.recall_undefined == want.recall_undefined);
        CHECK(got.precision >= 0.0);
        CHECK(got.precision <= 1.0);
        CHECK(got.recall >= 0.0);
        CHECK(got.recall <= 1.0);
    }
}

TEST_CASE("precision and recall are monotone in delta") {
    test::Rng rng(67);
    for (int trial = 0; trial < 300; ++trial) {
        const auto det = test::random_times(rng, 10, 0, 20000);
        const auto alarms = test::random_times(rng, 5, 0, 20000);
        const Timestamp d1 = test::uniform_int(rng, 1, 3000);
        const Timestamp d2 = d1 + test::uniform_int(rng, 0, 3000);
        const auto a = range_precision_recall(det, alarms, d1);
        const auto b = range_precision_recall(det, alarms, d2);
        CHECK(b.precision >= a.precision);
        CHECK(b.recall >= a.recall);
    }
}

TEST_CASE("adding a detection near a found alarm never lowers recall") {
    test::Rng rng(71);
    for (int trial = 0; trial < 300; ++trial) {
        auto det = test::random_times(rng, 8, 0, 20000);
        const auto alarms = test::random_times(rng, 5, 0, 20000);
        const auto before = range_precision_recall(det, alarms, 600);
        det.push_back(alarms[0] + test::uniform_int(rng, -600, 600));
        const auto after = range_precision_recall(det, alarms, 600);
        CHECK(after.recall >= before.recall);
        const auto want = test::naive_precision_recall(det, alarms, 600);
        CHECK(after.precision == want.precision);
    }
}

TEST_CASE("quantile grid includes zero, a point above the max and sorted quantiles") {
    const auto g = quantile_grid({3.0, 1.0, 2.0}, 3);
    CHECK(g.front() == 0.0);
    CHECK(g.back() > 3.0);
    CHECK(std::is_sorted(g.begin(), g.end()));
    CHECK(std::find(g.begin(), g.end(), 2.0) != g.end());
    CHECK(std::find(g.begin(), g.end(), 1.0) != g.end());

    std::vector<double> v;
    for (int k = 0; k <= 100; ++k) v.push_back(k);
    const auto q = quantile_grid(v, 5);
    CHECK(q == std::vector<double>{0.0, 25.0, 50.0, 75.0, 100.0, 100.0 + 1e-9 * 100.0});
}

TEST_CASE("sweep argmax equals brute force over the same grid") {
    test::Rng rng(73);
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = random_sweep(rng);
        const auto rep = best_f1_sweep(in.op, in.sensor, in.alarms, in.g1, in.g2, in.delta, in.eta, true,
                                       1 + trial % 3);
        const auto want = test::naive_sweep(in.op, in.sensor, in.alarms, in.g1, in.g2, in.delta, in.eta);
        CHECK(rep.tau1 == want.tau1);
        CHECK(rep.tau2 == want.tau2);
        CHECK(rep.f1 == want.f1);
        CHECK(rep.metrics.precision == want.precision);
        CHECK(rep.metrics.recall == want.recall);
        CHECK(rep.surface.size() == in.g1.size() * in.g2.size());
    }
}

TEST_CASE("ties resolve to the smaller tau1 and then the smaller tau2") {
    // Every threshold pair below the single op score detects the one candidate.
    const ScoreSeries op{{1000}, {5.0}};
    const ScoreSeries sensor{{1000}, {5.0}};
    const auto rep = best_f1_sweep(op, sensor, {1000}, {1.0, 2.0, 3.0}, {0.5, 1.0, 1.5}, 600, 14);
    CHECK(rep.f1 == 1.0);
    CHECK(rep.tau1 == 1.0);
    CHECK(rep.tau2 == 0.5);
}

TEST_CASE("singleton grid equals a single evaluation") {
    test::Rng rng(79);
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = random_sweep(rng);
        DetectorConfig cfg;
        cfg.tau1 = in.g1[3];
        cfg.tau2 = in.g2[5];
        cfg.eta = in.eta;
        cfg.delta = in.delta;
        const auto sweep = best_f1_sweep(in.op, in.sensor, in.alarms, std::vector<double>{cfg.tau1}, std::vector<double>{cfg.tau2}, in.delta, in.eta);
        const auto point = evaluate_point(in.op, in.sensor, in.alarms, cfg);
        CHECK(sweep.f1 == point.f1);
        CHECK(sweep.metrics == point.metrics);
        CHECK(sweep.detected == point.detected);
    }
}

TEST_CASE("surface row at tau2 = 0 equals the stage I score") {
    test::Rng rng(83);
    for (int trial = 0; trial < 20; ++trial) {
        auto in = random_sweep(rng);
        if (in.g2.front() != 0.0) in.g2.insert(in.g2.begin(), 0.0);
        const auto rep = best_f1_sweep(in.op, in.sensor, in.alarms, in.g1, in.g2, in.delta, in.eta);
        for (std::size_t i = 0; i < in.g1.size(); ++i) {
            const auto& p = rep.surface[i * in.g2.size()];
            CHECK(p.tau2 == 0.0);
            const auto pr = test::naive_precision_recall(test::naive_stage1(in.op, in.g1[i]), in.alarms, in.delta);
            CHECK(p.f1 == test::naive_f1(pr.precision, pr.recall));
        }
    }
}

TEST_CASE("reported f1 equals an independent recomputation at the argmax") {
    test::Rng rng(89);
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = random_sweep(rng);
        const auto rep = best_f1_sweep(in.op, in.sensor, in.alarms, in.g1, in.g2, in.delta, in.eta);
        const auto det = test::naive_stage2(test::naive_stage1(in.op, rep.tau1), in.sensor, rep.tau2, in.eta);
        const auto pr = test::naive_precision_recall(det.detected, in.alarms, in.delta);
        CHECK(rep.f1 == test::naive_f1(pr.precision, pr.recall));
    }
}

TEST_CASE("surface is invariant under a monotone rescaling of sensor scores and tau2") {
    test::Rng rng(97);
    auto warp = [](double x) { return 3.0 * x * x + x; };
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = random_sweep(rng);
        auto sensor2 = in.sensor;
        for (auto& s : sensor2.scores) s = warp(s);
        auto g2 = in.g2;
        for (auto& t : g2) t = warp(t);
        const auto a = best_f1_sweep(in.op, in.sensor, in.alarms, in.g1, in.g2, in.delta, in.eta);
        const auto b = best_f1_sweep(in.op, sensor2, in.alarms, in.g1, g2, in.delta, in.eta);
        REQUIRE(a.surface.size() == b.surface.size());
        for (std::size_t k = 0; k < a.surface.size(); ++k) CHECK(a.surface[k].f1 == b.surface[k].f1);
        CHECK(b.tau2 == warp(a.tau2));
        CHECK(b.tau1 == a.tau1);
    }
}

TEST_CASE("empty grids are rejected") {
    const ScoreSeries op{{1}, {1.0}};
    CHECK_THROWS_AS(best_f1_sweep(op, op, {1}, std::vector<double>{}, std::vector<double>{0.0}, 600, 14), ConfigError);
    CHECK_THROWS_AS(best_f1_sweep(op, op, {1}, std::vector<double>{0.0}, std::vector<double>{}, 600, 14), ConfigError);
}

TEST_CASE("quantile-grid sweep uses the configured grids") {
    test::Rng rng(101);
    const auto in = random_sweep(rng);
    EvalConfig cfg;
    cfg.delta = in.delta;
    cfg.grid_size = 10;
    const auto rep = best_f1_sweep(in.op, in.sensor, in.alarms, cfg, in.eta);
    CHECK(rep.tau1_grid == quantile_grid(in.op.scores, 10));
    CHECK(rep.tau2_grid == quantile_grid(in.sensor.scores, 10));
    const auto want = test::naive_sweep(in.op, in.sensor, in.alarms, rep.tau1_grid, rep.tau2_grid, in.delta, in.eta);
    CHECK(rep.f1 == want.f1);
}

TEST_CASE("single-threshold sweep ignores sensor filtering") {
    const ScoreSeries s{{100, 2000, 4000}, {0.9, 0.2, 0.8}};
    EvalConfig cfg;
    cfg.tau1_grid = std::vector<double>{0.0, 0.5, 0.85};
    cfg.tau2_grid = std::vector<double>{0.0};
    const auto rep = single_threshold_sweep(s, {100, 4000}, cfg);
    CHECK(rep.tau1 == 0.5);
    CHECK(rep.f1 == 1.0);
    CHECK(rep.tau2_grid == std::vector<double>{0.0});
}

TEST_CASE("surface csv has one row per grid point") {
    test::TempDir dir("eval");
    test::Rng rng(103);
    const auto in = random_sweep(rng);
    const auto rep = best_f1_sweep(in.op, in.sensor, in.alarms, in.g1, in.g2, in.delta, in.eta);
    save_surface_csv(rep, dir / "s.csv");
    const auto text = test::read_file(dir / "s.csv");
    CHECK(text.rfind("tau1,tau2,precision,recall,f1\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == 1 + in.g1.size() * in.g2.size());
}
