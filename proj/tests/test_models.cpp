#include "mftune/models.hpp"

#include "mftune/parallel.hpp"
#include "mftune/stats.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

using namespace mftune;

namespace {

const ModelEnsemble& benchmark() {
    static ModelEnsemble e = make_benchmark_ensemble(BenchmarkConfig{});
    return e;
}

std::vector<Point> test_points(int n, std::uint64_t seed) {
    Rng rng(seed);
    return benchmark().inputs.sample_batch(n, rng);
}

} // namespace

TEST_CASE("benchmark shape and validation") {
    const auto& e = benchmark();
    REQUIRE(e.models.size() == 4);
    CHECK(e.num_low_fidelity() == 3);
    CHECK_FALSE(e.models[0].tunable);
    CHECK(e.models[1].tunable);
    CHECK(e.models[2].tunable);
    CHECK_FALSE(e.models[3].tunable);
    CHECK(e.beta_dimension() == 2);
    CHECK(e.inputs.dimension() == 4);
}

TEST_CASE("evaluation is deterministic") {
    const auto& e = benchmark();
    auto pts = test_points(5, 11);
    CostLedger l1, l2;
    auto a = e.evaluate(0, {}, pts, l1);
    auto b = e.evaluate(0, {}, pts, l2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]); // bit identical
    CHECK(a[0] > 0.0);
}

TEST_CASE("coarse-timestep model at the high-fidelity timestep reproduces it") {
    const auto& e = benchmark();
    BenchmarkConfig cfg;
    auto pts = test_points(10, 12);
    CostLedger l;
    auto hf = e.evaluate(0, {}, pts, l);
    auto cst = e.evaluate(2, {cfg.dt_hf}, pts, l);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(std::fabs(hf[i] - cst[i]) < 1e-10);
}

TEST_CASE("coarse model correlates strongly with the high-fidelity model at dt = 0.1") {
    const auto& e = benchmark();
    Rng rng(77);
    auto pts = e.inputs.sample_lhs(100, rng);
    CostLedger l;
    auto hf = e.evaluate(0, {}, pts, l);
    auto cst = e.evaluate(2, {0.1}, pts, l);
    double mh = 0, mc = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        mh += hf[i];
        mc += cst[i];
    }
    mh /= pts.size();
    mc /= pts.size();
    double chh = 0, ccc = 0, chc = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        chh += (hf[i] - mh) * (hf[i] - mh);
        ccc += (cst[i] - mc) * (cst[i] - mc);
        chc += (hf[i] - mh) * (cst[i] - mc);
    }
    CHECK(chc / std::sqrt(chh * ccc) > 0.9);
}

TEST_CASE("hand-analog costs match the published speedups") {
    const auto& e = benchmark();
    BenchmarkConfig cfg;
    CHECK(e.models[1].cost({cfg.hand_dt_reduced_physics}) == Catch::Approx(0.2).epsilon(1e-12));
    CHECK(e.models[2].cost({cfg.hand_dt_coarse_timestep}) == Catch::Approx(0.0128).epsilon(1e-12));
    CHECK(e.models[3].cost({}) == 1e-5);
    // speedup = 1/w
    CHECK(1.0 / e.models[1].cost({cfg.hand_dt_reduced_physics}) == Catch::Approx(5.0));
    CHECK(1.0 / e.models[2].cost({cfg.hand_dt_coarse_timestep}) == Catch::Approx(78.125));
}

TEST_CASE("tunable speedup ranges bracket the targets") {
    const auto& e = benchmark();
    BenchmarkConfig cfg;
    double lo = cfg.dt_hf, hi = cfg.dt_hf * cfg.dt_max_factor;
    double s1_lo = 1.0 / e.models[1].cost({lo}), s1_hi = 1.0 / e.models[1].cost({hi});
    double s2_lo = 1.0 / e.models[2].cost({lo}), s2_hi = 1.0 / e.models[2].cost({hi});
    CHECK(s1_lo <= 5.0);
    CHECK(s1_hi >= 351.0);
    CHECK(s2_lo <= 1.0);
    CHECK(s2_hi >= 159.0);
}

TEST_CASE("cost decreases strictly with timestep") {
    const auto& e = benchmark();
    double prev = 1e300;
    for (double dt : {0.001, 0.002, 0.004, 0.01, 0.05, 0.25}) {
        double w = e.models[2].cost({dt});
        CHECK(w < prev);
        prev = w;
    }
}

TEST_CASE("coarse model converges to the high-fidelity model as dt halves") {
    const auto& e = benchmark();
    auto pts = test_points(50, 13);
    CostLedger l;
    auto hf = e.evaluate(0, {}, pts, l);
    double prev = 1e300;
    for (double dt : {0.16, 0.08, 0.04, 0.02, 0.01}) {
        auto v = e.evaluate(2, {dt}, pts, l);
        double worst = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) worst = std::max(worst, std::fabs(v[i] - hf[i]));
        CHECK(worst <= prev + 1e-8);
        prev = worst;
    }
}

TEST_CASE("correlation profile has the high plateau and the decay") {
    const auto& e = benchmark();
    BenchmarkConfig cfg;
    CostLedger l;
    auto pts = test_points(2000, 14);
    auto rho_at = [&](double dt) {
        PilotSample p = draw_pilot_at_points(e, {cfg.hand_dt_reduced_physics, dt}, pts, 14, l, CostTag::Offline);
        return estimate_stats(p).rho(1);
    };
    double rho_small = rho_at(cfg.dt_hf);
    double rho_large = rho_at(cfg.dt_hf * cfg.dt_max_factor);
    CHECK(rho_small > 0.99);
    CHECK(rho_small > rho_large);
}

TEST_CASE("evaluation errors") {
    const auto& e = benchmark();
    auto pts = test_points(2, 15);
    CostLedger l;
    REQUIRE_THROWS_AS(e.evaluate(7, {}, pts, l), Error);
    try {
        e.evaluate(2, {99.0}, pts, l); // dt far outside bounds
        FAIL("expected a domain error");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::Domain);
    }
    try {
        BenchmarkConfig c;
        c.name = "nope";
        make_benchmark_ensemble(c);
        FAIL("expected a config error");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::Config);
    }
}

TEST_CASE("ledger accumulates count times unit cost") {
    const auto& e = benchmark();
    auto pts = test_points(7, 16);
    CostLedger l;
    e.evaluate(2, {0.1}, pts, l);
    CHECK(l.total() == Catch::Approx(7 * 0.0128).epsilon(1e-12));
    CHECK(l.evaluations_of(2) == 7);
}

TEST_CASE("concurrent evaluation on disjoint batches matches serial") {
    const auto& e = benchmark();
    auto pts = test_points(64, 17);
    CostLedger serial;
    auto expect = e.evaluate(0, {}, pts, serial);

    std::vector<std::vector<double>> got(8);
    std::vector<CostLedger> ledgers(8);
    parallel_for(8, 8, [&](std::size_t b) {
        std::vector<Point> batch(pts.begin() + b * 8, pts.begin() + (b + 1) * 8);
        got[b] = e.evaluate(0, {}, batch, ledgers[b]);
    });
    CostLedger merged;
    for (const auto& l : ledgers) merged.merge(l);
    CHECK(merged.total() == serial.total());
    for (int b = 0; b < 8; ++b)
        for (int i = 0; i < 8; ++i) CHECK(got[b][i] == expect[b * 8 + i]);
}

TEST_CASE("latin hypercube stratifies every dimension") {
    const auto& e = benchmark();
    Rng rng(5);
    int n = 16;
    auto pts = e.inputs.sample_lhs(n, rng);
    for (int k = 0; k < e.inputs.dimension(); ++k) {
        double lo = e.inputs.dims[k].a, hi = e.inputs.dims[k].b;
        std::set<int> cells;
        for (const auto& p : pts) {
            int cell = static_cast<int>((p[k] - lo) / (hi - lo) * n);
            cells.insert(std::min(cell, n - 1));
        }
        CHECK(cells.size() == static_cast<std::size_t>(n));
    }
}

TEST_CASE("input spec validation") {
    InputSpec bad;
    bad.dims = {{Distribution::Kind::Uniform, 2.0, 1.0}};
    REQUIRE_THROWS_AS(bad.validate(), Error);
    InputSpec empty;
    REQUIRE_THROWS_AS(empty.validate(), Error);
    InputSpec norm;
    norm.dims = {{Distribution::Kind::Normal, 0.0, -1.0}};
    REQUIRE_THROWS_AS(norm.validate(), Error);
}

TEST_CASE("hand beta helper matches the tunable layout") {
    BenchmarkConfig cfg;
    auto both = benchmark_hand_beta(cfg);
    REQUIRE(both.size() == 2);
    CHECK(both[0] == cfg.hand_dt_reduced_physics);
    CHECK(both[1] == cfg.hand_dt_coarse_timestep);
    cfg.fix_reduced_physics = true;
    auto one = benchmark_hand_beta(cfg);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == cfg.hand_dt_coarse_timestep);
}
