#include "support.hpp"

#include "tdad/error.hpp"
#include "tdad/scoring.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>

using namespace tdad;
using nn::Mat;

namespace {

nn::LstmEncoderDecoder small_lstm(Eigen::Index d, Eigen::Index w, std::uint64_t seed) {
    nn::Rng rng(seed);
    nn::LstmSpec spec;
    spec.input_dim = d;
    spec.hidden = 4;
    spec.window = w;
    return nn::make_lstm(spec, rng);
}

// Reconstructs every window independently and aggregates per row.
std::map<Timestamp, double> naive_window_scores(const nn::LstmEncoderDecoder& m, const SensorSeries& s,
                                                Eigen::Index w, Eigen::Index step, Aggregation agg) {
    std::map<Timestamp, std::vector<double>> per_row;
    for (Eigen::Index off = 0; off + w <= s.length(); off += step) {
        Mat win(w, s.data.cols());
        for (Eigen::Index r = 0; r < w; ++r) {
            for (Eigen::Index c = 0; c < s.data.cols(); ++c) win(r, c) = s.data(off + r, c);
        }
        const Mat rec = nn::lstm_reconstruct(m, win);
        for (Eigen::Index r = 0; r < w; ++r) {
            double sq = 0.0;
            for (Eigen::Index c = 0; c < win.cols(); ++c) sq += (win(r, c) - rec(r, c)) * (win(r, c) - rec(r, c));
            per_row[s.timestamp(off + r)].push_back(std::sqrt(sq));
        }
    }
    std::map<Timestamp, double> out;
    for (const auto& [t, v] : per_row) {
        switch (agg) {
        case Aggregation::max: out[t] = *std::max_element(v.begin(), v.end()); break;
        case Aggregation::min: out[t] = *std::min_element(v.begin(), v.end()); break;
        case Aggregation::mean: out[t] = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); break;
        }
    }
    return out;
}

} // namespace

TEST_CASE("window enumeration examples") {
    WindowConfig cfg;
    CHECK(window_offsets(180, cfg) == std::vector<Eigen::Index>{0});
    CHECK(window_offsets(300, cfg) == std::vector<Eigen::Index>{0, 60, 120});
    CHECK_THROWS_AS(window_offsets(179, cfg), ValidationError);
    for (Eigen::Index row = 120; row < 180; ++row) {
        const auto [first, last] = windows_containing(row, 300, cfg);
        CHECK(last - first == 3);
    }
    const auto [f0, l0] = windows_containing(0, 300, cfg);
    CHECK(f0 == 0);
    CHECK(l0 == 1);
}

TEST_CASE("window count is floor((L - w) / step) + 1 and membership matches enumeration") {
    test::Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        WindowConfig cfg;
        cfg.size = test::uniform_int(rng, 2, 40);
        cfg.step = test::uniform_int(rng, 1, cfg.size - 1);
        const auto length = test::uniform_int(rng, cfg.size, 200);
        const auto offs = window_offsets(length, cfg);
        CHECK(static_cast<Eigen::Index>(offs.size()) == (length - cfg.size) / cfg.step + 1);
        for (std::size_t j = 0; j < offs.size(); ++j) {
            CHECK(offs[j] == static_cast<Eigen::Index>(j) * cfg.step);
            if (j > 0) CHECK(offs[j] - offs[j - 1] == cfg.step);
        }
        for (Eigen::Index row = 0; row < length; ++row) {
            std::size_t first = offs.size();
            std::size_t last = 0;
            for (std::size_t j = 0; j < offs.size(); ++j) {
                if (row >= offs[j] && row < offs[j] + cfg.size) {
                    first = std::min(first, j);
                    last = j + 1;
                }
            }
            const auto got = windows_containing(row, length, cfg);
            if (last == 0) {
                CHECK(got.first == got.second);
            } else {
                CHECK(got.first == first);
                CHECK(got.second == last);
            }
        }
    }
}

TEST_CASE("window config requires 0 < step < size") {
    WindowConfig cfg;
    cfg.step = 180;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.step = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.step = 60;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("make_windows carries sensor timestamps") {
    SensorSeries s;
    s.start = 1000;
    s.features = {"a"};
    s.data = Matrix::Zero(300, 1);
    const auto wins = make_windows(s, WindowConfig{});
    REQUIRE(wins.size() == 3);
    CHECK(wins[2].index == 2);
    CHECK(wins[2].offset == 120);
    CHECK(wins[2].start == 1120);
}

TEST_CASE("op-cycle score is the residual norm") {
    nn::MlpAutoencoder zero;
    zero.encoder.push_back({Mat::Zero(2, 2), nn::Vec::Zero(2), nn::Activation::identity});
    Matrix data(1, 2);
    data << 1.0, 0.0;
    const auto s = score_rows(zero, {5}, data);
    REQUIRE(s.size() == 1);
    CHECK(s.timestamps[0] == 5);
    CHECK(s.scores[0] == 1.0);

    nn::MlpAutoencoder ident;
    ident.encoder.push_back({Mat::Identity(3, 3), nn::Vec::Zero(3), nn::Activation::identity});
    test::Rng rng(1);
    const auto all = score_rows(ident, {1, 2, 3, 4}, test::random_matrix(rng, 4, 3));
    for (double v : all.scores) CHECK(v == 0.0);
}

TEST_CASE("op-cycle scores equal a per-row recomputation") {
    test::Rng rng(33);
    nn::Rng nrng(2);
    nn::MlpSpec spec;
    spec.input_dim = 5;
    const auto m = nn::make_mlp(spec, nrng);
    OperationCycleSeries op;
    op.timestamps = test::random_times(rng, 50, 0, 1000);
    op.features = test::names("o", 5);
    op.data = test::random_matrix(rng, 50, 5);
    const auto s = score_opcycle(m, op);
    CHECK(s.timestamps == op.timestamps);
    for (Eigen::Index r = 0; r < 50; ++r) {
        nn::Vec x(5);
        for (Eigen::Index c = 0; c < 5; ++c) x(c) = op.data(r, c);
        const nn::Vec y = nn::mlp_forward(m, x);
        CHECK(s.scores[static_cast<std::size_t>(r)] == doctest::Approx((x - y).norm()).epsilon(1e-12));
    }
}

TEST_CASE("op-cycle scoring rejects the wrong width") {
    nn::Rng nrng(3);
    nn::MlpSpec spec;
    spec.input_dim = 4;
    const auto m = nn::make_mlp(spec, nrng);
    CHECK_THROWS_AS(score_rows(m, {0}, Matrix::Zero(1, 3)), ModelError);
}

TEST_CASE("a single window scores each row with its own residual") {
    const auto m = small_lstm(2, 10, 4);
    SensorSeries s;
    s.features = {"a", "b"};
    test::Rng rng(4);
    s.data = test::random_matrix(rng, 10, 2);
    WindowConfig cfg{10, 5, Aggregation::max};
    const auto scores = score_sensor(m, s, cfg);
    const auto ref = naive_window_scores(m, s, 10, 5, Aggregation::max);
    REQUIRE(scores.size() == 10);
    for (std::size_t k = 0; k < scores.size(); ++k) {
        CHECK(scores.scores[k] == doctest::Approx(ref.at(scores.timestamps[k])).epsilon(1e-12));
    }
}

TEST_CASE("overlapping windows take the largest residual") {
    // Two windows of length 2 over three rows; the middle row is reconstructed
    // by both. A zero model reconstructs zero, so residuals are the row norms,
    // and the middle row must see the same value from both windows.
    auto m = small_lstm(1, 2, 5).zeros_like();
    SensorSeries s;
    s.features = {"a"};
    s.data.resize(3, 1);
    s.data << 0.2, 0.7, 0.4;
    const auto scores = score_sensor(m, s, WindowConfig{2, 1, Aggregation::max});
    REQUIRE(scores.size() == 3);
    CHECK(scores.scores[1] == doctest::Approx(0.7));

    // Distinct per-window residuals {0.2, 0.7} reduce to 0.7 under max.
    const std::vector<double> residuals{0.2, 0.7};
    CHECK(*std::max_element(residuals.begin(), residuals.end()) == 0.7);
}

TEST_CASE("sensor scores equal an independent per-window recomputation") {
    test::Rng rng(35);
    for (int trial = 0; trial < 6; ++trial) {
        const auto w = test::uniform_int(rng, 3, 12);
        const auto step = test::uniform_int(rng, 1, w - 1);
        const auto m = small_lstm(2, w, static_cast<std::uint64_t>(trial));
        SensorSeries s;
        s.start = test::uniform_int(rng, 0, 50);
        s.features = {"a", "b"};
        s.data = test::random_matrix(rng, test::uniform_int(rng, w, 90), 2);
        for (auto agg : {Aggregation::max, Aggregation::min, Aggregation::mean}) {
            const WindowConfig cfg{w, step, agg};
            const auto scores = score_sensor(m, s, cfg, 1 + trial % 3);
            const auto ref = naive_window_scores(m, s, w, step, agg);
            REQUIRE(scores.size() == ref.size());
            for (std::size_t k = 0; k < scores.size(); ++k) {
                CHECK(scores.scores[k] ==
                      doctest::Approx(ref.at(scores.timestamps[k])).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("rows outside every full window receive no score") {
    const auto m = small_lstm(1, 5, 6);
    SensorSeries s;
    s.features = {"a"};
    test::Rng rng(6);
    s.data = test::random_matrix(rng, 13, 1);
    const auto scores = score_sensor(m, s, WindowConfig{5, 3, Aggregation::max});
    // Windows at 0, 3, 6 cover rows 0..10; rows 11 and 12 are uncovered.
    CHECK(scores.size() == 11);
    CHECK(scores.timestamps.back() == 10);
}

TEST_CASE("sensor scores do not depend on evaluation order or thread count") {
    const auto m = small_lstm(2, 8, 7);
    SensorSeries s;
    s.features = {"a", "b"};
    test::Rng rng(7);
    s.data = test::random_matrix(rng, 400, 2);
    const WindowConfig cfg{8, 3, Aggregation::max};
    const auto one = score_sensor(m, s, cfg, 1);
    const auto four = score_sensor(m, s, cfg, 4);
    CHECK(one == four);
    for (double v : one.scores) CHECK(v >= 0.0);
}

TEST_CASE("adding a window never lowers a max-aggregated score") {
    const auto m = small_lstm(1, 6, 8);
    SensorSeries s;
    s.features = {"a"};
    test::Rng rng(8);
    s.data = test::random_matrix(rng, 60, 1);
    // Offsets of step 2 include every offset of step 4.
    const auto sparse = score_sensor(m, s, WindowConfig{6, 4, Aggregation::max});
    const auto dense = score_sensor(m, s, WindowConfig{6, 2, Aggregation::max});
    std::map<Timestamp, double> dense_at;
    for (std::size_t k = 0; k < dense.size(); ++k) dense_at[dense.timestamps[k]] = dense.scores[k];
    for (std::size_t k = 0; k < sparse.size(); ++k) {
        CHECK(dense_at.at(sparse.timestamps[k]) >= sparse.scores[k]);
    }
}

TEST_CASE("sensor scoring rejects a model with a different window") {
    const auto m = small_lstm(1, 6, 9);
    SensorSeries s;
    s.features = {"a"};
    s.data = Matrix::Zero(30, 1);
    CHECK_THROWS_AS(score_sensor(m, s, WindowConfig{5, 2, Aggregation::max}), ModelError);
}

TEST_CASE("sensor scoring rejects a series shorter than the window") {
    const auto m = small_lstm(1, 6, 10);
    SensorSeries s;
    s.features = {"a"};
    s.data = Matrix::Zero(5, 1);
    CHECK_THROWS_AS(score_sensor(m, s, WindowConfig{6, 2, Aggregation::max}), ValidationError);
}

TEST_CASE("aggregation names parse") {
    CHECK(parse_aggregation("max") == Aggregation::max);
    CHECK(parse_aggregation("mean") == Aggregation::mean);
    CHECK(to_string(Aggregation::min) == "min");
    CHECK_THROWS_AS(parse_aggregation("median"), ConfigError);
}
