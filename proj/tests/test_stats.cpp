#include "mftune/stats.hpp"

#include "mftune/models.hpp"
#include "support/analytic_ensemble.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

using namespace mftune;
using mftune::testing::make_analytic_ensemble;

TEST_CASE("seeded pilots are identical") {
    auto e = make_benchmark_ensemble(BenchmarkConfig{});
    auto beta = benchmark_hand_beta(BenchmarkConfig{});
    CostLedger l1, l2;
    auto a = draw_pilot(e, beta, 100, 7, l1);
    auto b = draw_pilot(e, beta, 100, 7, l2);
    REQUIRE(a.outputs.rows() == b.outputs.rows());
    CHECK((a.outputs.array() == b.outputs.array()).all());
    CHECK(l1.total() == l2.total());
}

TEST_CASE("pilot cost charges every model column") {
    // w = [1, 0.2, 0.0128, 1e-5] at the hand-analog hyperparameters
    auto e = make_benchmark_ensemble(BenchmarkConfig{});
    auto beta = benchmark_hand_beta(BenchmarkConfig{});
    CostLedger l;
    auto p = draw_pilot(e, beta, 50, 3, l);
    CHECK(p.cost == Catch::Approx(50.0 * (1.0 + 0.2 + 0.0128 + 1e-5)).epsilon(1e-12));
    CHECK(p.cost == Catch::Approx(60.6405).epsilon(1e-9));
}

TEST_CASE("degenerate hyperparameter duplicates the high-fidelity column") {
    BenchmarkConfig cfg;
    auto e = make_benchmark_ensemble(cfg);
    CostLedger l;
    auto p = draw_pilot(e, {cfg.hand_dt_reduced_physics, cfg.dt_hf}, 50, 19, l);
    for (int i = 0; i < p.n(); ++i) CHECK(std::fabs(p.outputs(i, 0) - p.outputs(i, 2)) < 1e-10);
}

TEST_CASE("identical and negated columns give unit correlations") {
    PilotSample p;
    p.outputs.resize(5, 3);
    for (int i = 0; i < 5; ++i) {
        double v = 0.5 * i * i - 2.0 * i + 1.0;
        p.outputs(i, 0) = v;
        p.outputs(i, 1) = v;
        p.outputs(i, 2) = -v;
    }
    p.points.resize(5, Point{0.0});
    auto s = estimate_stats(p);
    CHECK(s.rho(0) == 1.0);
    CHECK(s.rho(1) == -1.0);
    CHECK(s.P(0, 1) == -1.0);
    CHECK(s.P(0, 0) == 1.0);
}

TEST_CASE("affine transforms keep unit correlation") {
    Rng rng(4);
    PilotSample p;
    p.outputs.resize(64, 2);
    for (int i = 0; i < 64; ++i) {
        double v = rng.normal();
        p.outputs(i, 0) = v;
        p.outputs(i, 1) = -3.25 * v + 17.0;
    }
    p.points.resize(64, Point{0.0});
    auto s = estimate_stats(p);
    CHECK(std::fabs(s.rho(0) + 1.0) < 1e-12);
}

TEST_CASE("independent columns decorrelate at large pilot size") {
    Rng rng(90210);
    PilotSample p;
    p.outputs.resize(10000, 2);
    for (int i = 0; i < 10000; ++i) {
        p.outputs(i, 0) = rng.normal();
        p.outputs(i, 1) = rng.normal();
    }
    p.points.resize(10000, Point{0.0});
    auto s = estimate_stats(p);
    CHECK(std::fabs(s.rho(0)) < 0.05);
}

TEST_CASE("unbiased variance uses the n-1 divisor") {
    PilotSample p;
    p.outputs.resize(3, 2);
    p.outputs << 1.0, 2.0, 2.0, 4.0, 3.0, 6.0;
    p.points.resize(3, Point{0.0});
    auto s = estimate_stats(p);
    CHECK(s.var_q == Catch::Approx(1.0).epsilon(1e-14));       // var{1,2,3}
    CHECK(s.sigma(0) == Catch::Approx(2.0).epsilon(1e-14));    // sd{2,4,6}
}

TEST_CASE("constant column raises a degenerate-statistics error") {
    PilotSample p;
    p.outputs.resize(4, 2);
    for (int i = 0; i < 4; ++i) {
        p.outputs(i, 0) = i;
        p.outputs(i, 1) = 3.0;
    }
    p.points.resize(4, Point{0.0});
    try {
        estimate_stats(p);
        FAIL("expected degenerate statistics");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateStats);
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
}

TEST_CASE("merging pilots equals estimating on the concatenation") {
    auto e = make_analytic_ensemble({0.1, 0.5}, {0.1, 0.01});
    CostLedger l;
    auto a = draw_pilot(e, {}, 40, 1, l);
    auto b = draw_pilot(e, {}, 25, 2, l);
    auto merged = merge_pilots(a, b);
    REQUIRE(merged.n() == 65);

    PilotSample concat;
    concat.beta = a.beta;
    concat.points = a.points;
    concat.points.insert(concat.points.end(), b.points.begin(), b.points.end());
    concat.outputs.resize(65, a.outputs.cols());
    concat.outputs.topRows(40) = a.outputs;
    concat.outputs.bottomRows(25) = b.outputs;

    auto s1 = estimate_stats(merged);
    auto s2 = estimate_stats(concat);
    CHECK(s1.var_q == s2.var_q);
    CHECK((s1.rho.array() == s2.rho.array()).all());
    CHECK((s1.P.array() == s2.P.array()).all());
}

TEST_CASE("pilot csv round-trips") {
    auto e = make_analytic_ensemble({0.2}, {0.05});
    CostLedger l;
    auto p = draw_pilot(e, {}, 12, 5, l);
    auto path = std::filesystem::temp_directory_path() / "mftune_pilot_test.csv";
    write_pilot_csv(path.string(), p);
    auto q = read_pilot_csv(path.string());
    REQUIRE(q.n() == p.n());
    REQUIRE(q.num_models() == p.num_models());
    CHECK(q.seed == p.seed);
    for (int i = 0; i < p.n(); ++i) {
        CHECK(q.outputs(i, 0) == p.outputs(i, 0));
        CHECK(q.points[i][0] == p.points[i][0]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("pilot requires at least two samples") {
    auto e = make_analytic_ensemble({0.2}, {0.05});
    CostLedger l;
    REQUIRE_THROWS_AS(draw_pilot(e, {}, 1, 5, l), Error);
}
