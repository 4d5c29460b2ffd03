#include "mftune/pilot.hpp"

#include "support/analytic_ensemble.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace mftune;
using mftune::testing::make_analytic_ensemble;

namespace {

const ModelEnsemble& benchmark1d() {
    static ModelEnsemble e = [] {
        BenchmarkConfig cfg;
        cfg.fix_reduced_physics = true;
        return make_benchmark_ensemble(cfg);
    }();
    return e;
}

} // namespace

TEST_CASE("offline mode is deterministic and keeps the pilot off the budget") {
    auto e = make_analytic_ensemble({0.4}, {0.05});
    CostLedger l1, l2;
    auto a = run_offline(e, {}, 150.0, Scheme::AcvMf, 500, 11, l1);
    auto b = run_offline(e, {}, 150.0, Scheme::AcvMf, 500, 11, l2);
    CHECK(a.stats.rho(0) == b.stats.rho(0));
    CHECK(a.solution.profile.n_shared == b.solution.profile.n_shared);
    CHECK(a.solution.profile.n_two == b.solution.profile.n_two);
    // offline pilot appears in the log but not in the budgeted total
    CHECK(l1.budgeted() == 0.0);
    CHECK(l1.total() == Catch::Approx(500 * 1.05).epsilon(1e-12));
    CHECK(a.solution.achieved_cost <= 150.0 + 1e-9);
}

TEST_CASE("projection honors the reuse lower bounds and evaluates nothing extra") {
    const auto& e = benchmark1d();
    CostLedger l;
    auto r = run_projection(e, {0.1}, 1000.0, Scheme::AcvMf, 50, 21, l);
    CHECK(r.pilot.n() == 50);
    CHECK(r.solution.profile.n_shared >= 50);
    for (int i = 1; i <= 3; ++i) CHECK(r.solution.profile.model_eval_count(i) >= 50);
    // exactly one pilot evaluation per model, nothing else
    for (int m = 0; m < 4; ++m) CHECK(l.evaluations_of(m) == 50);
}

TEST_CASE("projection rejects a pilot that costs the whole budget") {
    const auto& e = benchmark1d();
    CostLedger l;
    try {
        run_projection(e, {0.1}, 5.0, Scheme::AcvMf, 50, 3, l);
        FAIL("expected infeasibility");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::Infeasible);
    }
    CHECK(l.total() == 0.0); // nothing was evaluated
}

TEST_CASE("online terminates immediately when the pilot already covers the optimum") {
    // strong cheap model: optimal shared count is far below the initial pilot
    auto e = make_analytic_ensemble({0.1}, {0.01}); // rho ~ 0.9988
    CostLedger l;
    auto r = run_online(e, {}, 200.0, Scheme::AcvMf, 120, 0.5, 20, 17, l);
    REQUIRE(r.trace.size() == 1);
    CHECK(r.trace[0].delta_n <= 0);
    CHECK(r.pilot.n() == 120);
    CHECK(l.evaluations_of(0) == 120);
    CHECK(r.solution.profile.n_shared == 120);
}

TEST_CASE("online rounds charge exactly the under-relaxed growth") {
    const auto& e = benchmark1d();
    CostLedger l;
    auto r = run_online(e, {0.1}, 800.0, Scheme::AcvMf, 10, 0.5, 20, 23, l);
    REQUIRE(!r.trace.empty());
    double per_point = 0.0;
    for (double w : e.costs_at({0.1})) per_point += w;
    for (std::size_t k = 0; k + 1 < r.trace.size(); ++k) {
        long long grow = static_cast<long long>(std::ceil(0.5 * static_cast<double>(r.trace[k].delta_n)));
        double dcost = r.trace[k + 1].cumulative_cost - r.trace[k].cumulative_cost;
        CHECK(dcost == Catch::Approx(grow * per_point).epsilon(1e-12));
    }
    CHECK(r.trace.back().delta_n <= 0);
    CHECK(r.solution.achieved_cost <= 800.0 + 1e-9);
    CHECK(static_cast<long long>(r.trace.size()) <= 20);
}

TEST_CASE("relaxed growth never runs far past the direct one") {
    const auto& e = benchmark1d();
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL, 6ULL}) {
        CostLedger l1, l2;
        auto full = run_online(e, {0.1}, 600.0, Scheme::AcvMf, 10, 1.0, 20, seed, l1);
        auto half = run_online(e, {0.1}, 600.0, Scheme::AcvMf, 10, 0.5, 20, seed, l2);
        CHECK(full.trace.back().delta_n <= 0);
        CHECK(half.trace.back().delta_n <= 0);
        long long max_half_round = 0;
        for (const auto& t : half.trace)
            if (t.delta_n > 0)
                max_half_round =
                    std::max(max_half_round, static_cast<long long>(std::ceil(0.5 * static_cast<double>(t.delta_n))));
        CHECK(half.pilot.n() <= full.pilot.n() + max_half_round + 1);
    }
}

TEST_CASE("projection and online share the identical initial pilot") {
    const auto& e = benchmark1d();
    CostLedger l1, l2;
    auto p = run_projection(e, {0.1}, 1000.0, Scheme::AcvMf, 40, 77, l1);
    auto o = run_online(e, {0.1}, 1000.0, Scheme::AcvMf, 40, 0.5, 20, 77, l2);
    REQUIRE(o.pilot.n() >= 40);
    for (int i = 0; i < 40; ++i) {
        CHECK(p.pilot.points[i] == o.pilot.points[i]);
        CHECK(p.pilot.outputs(i, 0) == o.pilot.outputs(i, 0));
    }
}

TEST_CASE("online flags exhaustion when the budget cannot fund the rounds") {
    // tight budget: pilot fits but barely anything beyond it
    auto e = make_analytic_ensemble({1.2}, {0.5}); // weak model, wants large N
    CostLedger l;
    auto r = run_online(e, {}, 50.0, Scheme::AcvMf, 20, 1.0, 20, 5, l);
    // either it found a fixed point or it exhausted the budget part-way
    CHECK((r.exhausted || r.trace.back().delta_n <= 0));
    CHECK(r.pilot.n() * 1.5 <= 50.0 + 1e-9);
    CHECK(r.solution.achieved_cost <= 50.0 + 1e-9);
}

TEST_CASE("pilot mode validation") {
    PilotMode m;
    m.n_pilot = 1;
    REQUIRE_THROWS_AS(m.validate(), Error);
    m.n_pilot = 10;
    m.relaxation = 0.0;
    REQUIRE_THROWS_AS(m.validate(), Error);
    m.relaxation = 0.5;
    m.max_rounds = 0;
    REQUIRE_THROWS_AS(m.validate(), Error);
    m.max_rounds = 5;
    REQUIRE_NOTHROW(m.validate());
}

TEST_CASE("online trace csv has one row per round") {
    const auto& e = benchmark1d();
    CostLedger l;
    auto r = run_online(e, {0.1}, 600.0, Scheme::AcvMf, 10, 0.5, 20, 29, l);
    auto path = std::filesystem::temp_directory_path() / "mftune_trace_test.csv";
    write_online_trace_csv(path.string(), r.trace);
    std::ifstream is(path);
    std::string line;
    int rows = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == static_cast<int>(r.trace.size()) + 1);
    std::filesystem::remove(path);
}
