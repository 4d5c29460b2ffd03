#include "mftune/allocation.hpp"

#include "support/analytic_ensemble.hpp"
#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace mftune;
using mftune::testing::exact_analytic_stats;
using mftune::testing::grid_search_single_model_variance;

namespace {

ModelStats single_model_stats(double rho) {
    ModelStats s;
    s.var_q = 2.0;
    s.sigma = Eigen::VectorXd::Constant(1, 1.0);
    s.rho = Eigen::VectorXd::Constant(1, rho);
    s.P = Eigen::MatrixXd::Identity(1, 1);
    return s;
}

} // namespace

TEST_CASE("useless model falls back to plain MC") {
    auto s = single_model_stats(0.0);
    auto sol = optimize_allocation(s, {1.0, 0.01}, 100.0, Scheme::AcvMf);
    CHECK(sol.mc_fallback);
    CHECK(sol.scheme == Scheme::Mc);
    CHECK(sol.profile.n_shared == 100);
    CHECK(sol.predicted_variance == Catch::Approx(2.0 / 100.0).epsilon(1e-12));
}

TEST_CASE("relaxed optimum matches a dense grid search") {
    Rng rng(2024);
    for (int instance = 0; instance < 3; ++instance) {
        double rho = 0.9 + 0.09 * rng.uniform01();
        double w1 = std::exp(rng.uniform(std::log(1e-3), std::log(0.1)));
        double budget = rng.uniform(50.0, 500.0);
        auto s = single_model_stats(rho);
        auto sol = optimize_allocation(s, {1.0, w1}, budget, Scheme::AcvMf);
        double oracle = grid_search_single_model_variance(s, 1.0, w1, budget, 200, 200);
        INFO("rho=" << rho << " w1=" << w1 << " budget=" << budget);
        CHECK(sol.relaxed_variance <= oracle * 1.01);
    }
}

TEST_CASE("integer solution is feasible and not worse than its anchors") {
    auto s = single_model_stats(0.99);
    double budget = 100.0;
    auto sol = optimize_allocation(s, {1.0, 0.01}, budget, Scheme::AcvMf);
    CHECK_FALSE(sol.mc_fallback);
    CHECK(sol.achieved_cost <= budget + 1e-9);
    // never worse than plain MC
    CHECK(sol.predicted_variance <= 2.0 / std::floor(budget) + 1e-15);
    // budget nearly exhausted (cheapest unit is w1 = 0.01)
    CHECK(budget - sol.achieved_cost < 1.0);
}

TEST_CASE("variance at the relaxed optimum scales as 1/budget") {
    auto s = single_model_stats(0.98);
    double prev = 1e300;
    for (double budget : {500.0, 1000.0, 2000.0, 5000.0, 10000.0}) {
        auto sol = optimize_allocation(s, {1.0, 0.02}, budget, Scheme::AcvMf);
        CHECK(sol.relaxed_variance < prev);
        CHECK(sol.predicted_variance < prev * 1.001);
        prev = sol.relaxed_variance;
    }
}

TEST_CASE("optimization is deterministic") {
    auto s = exact_analytic_stats({0.3, 0.8});
    AllocationOptions opts;
    opts.seed = 31;
    auto a = optimize_allocation(s, {1.0, 0.1, 0.01}, 300.0, Scheme::AcvMf, opts);
    auto b = optimize_allocation(s, {1.0, 0.1, 0.01}, 300.0, Scheme::AcvMf, opts);
    CHECK(a.profile.n_shared == b.profile.n_shared);
    CHECK(a.profile.n_two == b.profile.n_two);
    CHECK(a.predicted_variance == b.predicted_variance);
}

TEST_CASE("infeasible budget raises an error") {
    auto s = single_model_stats(0.9);
    REQUIRE_THROWS_AS(optimize_allocation(s, {1.0, 0.5}, 2.0, Scheme::AcvMf), Error);
    try {
        optimize_allocation(s, {1.0, 0.5}, 2.0, Scheme::AcvMf);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Infeasible);
    }
}

TEST_CASE("reuse floors are honored") {
    auto s = single_model_stats(0.95);
    AllocationOptions opts;
    opts.n_shared_floor = 50;
    opts.per_model_floor = 50;
    auto sol = optimize_allocation(s, {1.0, 0.05}, 200.0, Scheme::AcvMf, opts);
    CHECK(sol.profile.n_shared >= 50);
    if (!sol.mc_fallback) CHECK(sol.profile.model_eval_count(1) >= 50);
}

TEST_CASE("per-model sample cap binds") {
    auto s = single_model_stats(0.999);
    AllocationOptions opts;
    opts.max_samples_per_model = 5000;
    auto sol = optimize_allocation(s, {1.0, 1e-5}, 1000.0, Scheme::AcvMf, opts);
    CHECK(sol.profile.model_eval_count(1) <= 5000);
}

TEST_CASE("tree enumeration counts match the rooted-forest formula") {
    CHECK(enumerate_trees(1).size() == 1);
    CHECK(enumerate_trees(2).size() == 3);
    CHECK(enumerate_trees(3).size() == 16);
    CHECK(enumerate_trees(4).size() == 125);
    REQUIRE_THROWS_AS(enumerate_trees(0), Error);
    REQUIRE_THROWS_AS(enumerate_trees(7), Error);

    // M = 2 by hand: both children of the root, and the two chains
    auto trees = enumerate_trees(2);
    std::vector<std::vector<int>> expect = {{0, 0}, {2, 0}, {0, 1}};
    for (const auto& want : expect) {
        bool found = false;
        for (const auto& t : trees) found |= t.parent == want;
        CHECK(found);
    }
}

TEST_CASE("gmf star tree reproduces acv-mf and the search dominates it") {
    auto s = exact_analytic_stats({0.25, 0.7, 1.4});
    std::vector<double> costs = {1.0, 0.2, 0.05, 0.01};
    double budget = 400.0;
    AllocationOptions opts;
    opts.seed = 5;

    auto mf = optimize_allocation(s, costs, budget, Scheme::AcvMf, opts);
    auto star = optimize_allocation(s, costs, budget, Scheme::Gmf, opts, star_tree(3));
    CHECK(star.predicted_variance == Catch::Approx(mf.predicted_variance).epsilon(1e-12));
    CHECK(star.profile.n_two == mf.profile.n_two);

    auto gmf = optimize_allocation_gmf(s, costs, budget, opts);
    CHECK(gmf.predicted_variance <= mf.predicted_variance * (1.0 + 1e-9));
}

TEST_CASE("gmf search is deterministic across job counts") {
    auto s = exact_analytic_stats({0.25, 0.7});
    std::vector<double> costs = {1.0, 0.1, 0.02};
    AllocationOptions serial, parallel;
    serial.jobs = 1;
    parallel.jobs = 4;
    auto a = optimize_allocation_gmf(s, costs, 300.0, serial);
    auto b = optimize_allocation_gmf(s, costs, 300.0, parallel);
    CHECK(a.predicted_variance == b.predicted_variance);
    CHECK(a.tree->parent == b.tree->parent);
}

TEST_CASE("mlmc allocation works end to end") {
    auto s = exact_analytic_stats({0.2});
    auto sol = optimize_allocation(s, {1.0, 0.1}, 200.0, Scheme::Mlmc);
    if (!sol.mc_fallback) {
        CHECK(sol.scheme == Scheme::Mlmc);
        CHECK(sol.achieved_cost <= 200.0 + 1e-9);
        CHECK(sol.predicted_variance <= 2.0 / 200.0 + 1e-12);
    }
}

TEST_CASE("solution json is complete") {
    auto s = single_model_stats(0.95);
    auto sol = optimize_allocation(s, {1.0, 0.05}, 200.0, Scheme::AcvMf);
    auto json = solution_to_json(sol);
    CHECK(json.find("\"scheme\"") != std::string::npos);
    CHECK(json.find("\"relaxed\"") != std::string::npos);
    CHECK(json.find("\"predicted_variance\"") != std::string::npos);
}
