#include "mftune/sampleset.hpp"

#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace mftune;
using mftune::testing::brute_force_fF;
using mftune::testing::brute_force_gG;

TEST_CASE("acv-mf profile realizes nested extras") {
    auto p = build_profile(Scheme::AcvMf, 10, {20, 40});
    REQUIRE(p.groups.sizes.size() == 3); // shared 10, extra 10, extra 20
    CHECK(p.groups.sizes[0] == 10);
    CHECK(p.groups.sizes[1] == 10);
    CHECK(p.groups.sizes[2] == 20);
    // z_i^1 = z for both models
    CHECK(p.groups.intersection_cardinality(p.groups.set_one(1), 0) == 10);
    CHECK(p.groups.set_cardinality(p.groups.set_one(1)) == 10);
    CHECK(p.groups.set_cardinality(p.groups.set_one(2)) == 10);
    // nesting: z_1 subset of z_2
    CHECK(p.groups.intersection_cardinality(p.groups.set_two(1), p.groups.set_two(2)) == 20);
    CHECK(p.model_eval_count(1) == 20);
    CHECK(p.model_eval_count(2) == 40);
}

TEST_CASE("mlmc profile chains the fresh blocks") {
    auto p = build_profile(Scheme::Mlmc, 10, {10, 30});
    CHECK(p.groups.set_cardinality(p.groups.set_one(1)) == 10); // z_1^1 = z
    CHECK(p.groups.intersection_cardinality(p.groups.set_one(1), 0) == 10);
    CHECK(p.groups.set_cardinality(p.groups.set_two(1)) == 10); // fresh 10
    CHECK(p.groups.intersection_cardinality(p.groups.set_two(1), 0) == 0);
    // z_2^1 = z_1^2
    CHECK(p.groups.intersection_cardinality(p.groups.set_one(2), p.groups.set_two(1)) == 10);
    CHECK(p.groups.set_cardinality(p.groups.set_two(2)) == 30);
    // z disjoint of z_2
    CHECK(p.groups.intersection_cardinality(0, p.groups.set_one(2)) == 0);
    CHECK(p.groups.intersection_cardinality(0, p.groups.set_two(2)) == 0);
    CHECK(p.model_eval_count(1) == 20);
    CHECK(p.model_eval_count(2) == 40);
}

TEST_CASE("degenerate acv-mf set pair is rejected") {
    REQUIRE_THROWS_AS(build_profile(Scheme::AcvMf, 10, {10, 40}), Error);
    try {
        build_profile(Scheme::AcvMf, 10, {10, 40});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Constraint);
    }
}

TEST_CASE("acv-mf f and F closed forms at r = [2, 4]") {
    auto p = build_profile(Scheme::AcvMf, 10, {20, 40});
    auto m = compute_fF(p);
    CHECK(m.f(0) == 0.5);
    CHECK(m.f(1) == 0.75);
    CHECK(m.F(0, 0) == 0.5);
    CHECK(m.F(0, 1) == 0.5);
    CHECK(m.F(1, 0) == 0.5);
    CHECK(m.F(1, 1) == 0.75);
}

TEST_CASE("mlmc f and F agree with hand enumeration") {
    auto p = build_profile(Scheme::Mlmc, 10, {10, 30});
    auto m = compute_fF(p);
    CHECK(m.f(0) == 1.0);
    CHECK(m.f(1) == 0.0);
    CHECK(m.F(0, 0) == 2.0);
    CHECK(m.F(0, 1) == -1.0);
    CHECK(m.F(1, 1) == Catch::Approx(4.0 / 3.0).epsilon(1e-15));

    auto oracle = brute_force_fF(p);
    CHECK(mftune::testing::exactly_equal(m.f, oracle.f));
    CHECK(mftune::testing::exactly_equal(m.F, oracle.F));
}

TEST_CASE("oracle equivalence over a small feasibility sweep") {
    std::vector<Scheme> schemes = {Scheme::Mlmc, Scheme::Mfmc, Scheme::AcvIs, Scheme::AcvMf};
    int checked = 0;
    for (Scheme s : schemes)
        for (long long N = 2; N <= 4; ++N)
            for (long long a = 2; a <= 6; ++a)
                for (long long b = 2; b <= 6; ++b) {
                    AllocationProfile p;
                    try {
                        p = build_profile(s, N, {a, b});
                    } catch (const Error&) {
                        continue;
                    }
                    auto m = compute_fF(p);
                    auto oracle = brute_force_fF(p);
                    REQUIRE(mftune::testing::exactly_equal(m.f, oracle.f));
                    REQUIRE(mftune::testing::exactly_equal(m.F, oracle.F));
                    ++checked;
                }
    CHECK(checked > 50);
}

TEST_CASE("unnormalized identities G = F/N and g = f/N") {
    auto p = build_profile(Scheme::AcvIs, 7, {3, 5});
    auto m = compute_fF(p);
    Eigen::VectorXd g;
    Eigen::MatrixXd G;
    brute_force_gG(p, g, G);
    double N = 7.0;
    for (int i = 0; i < 2; ++i) {
        CHECK(g(i) == Catch::Approx(m.f(i) / N).margin(1e-15));
        for (int j = 0; j < 2; ++j) CHECK(G(i, j) == Catch::Approx(m.F(i, j) / N).margin(1e-15));
    }
}

TEST_CASE("F is symmetric positive semidefinite on feasible profiles") {
    std::vector<AllocationProfile> profiles = {
        build_profile(Scheme::AcvMf, 5, {8, 11, 20}),
        build_profile(Scheme::Mfmc, 4, {6, 9, 14}),
        build_profile(Scheme::Mlmc, 6, {4, 7, 3}),
        build_profile(Scheme::AcvIs, 5, {2, 9, 4}),
    };
    for (const auto& p : profiles) {
        auto m = compute_fF(p);
        CHECK((m.F - m.F.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.F);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("gmf star tree equals acv-mf and chain equals mfmc") {
    auto mf = compute_fF(build_profile(Scheme::AcvMf, 5, {8, 11, 20}));
    auto star = compute_fF(build_profile(Scheme::Gmf, 5, {8, 11, 20}, star_tree(3)));
    CHECK(mftune::testing::exactly_equal(mf.f, star.f));
    CHECK(mftune::testing::exactly_equal(mf.F, star.F));

    auto mfmc = compute_fF(build_profile(Scheme::Mfmc, 4, {6, 9, 14}));
    auto chain = compute_fF(build_profile(Scheme::Gmf, 4, {6, 9, 14}, chain_tree(3)));
    CHECK(mftune::testing::exactly_equal(mfmc.f, chain.f));
    CHECK(mftune::testing::exactly_equal(mfmc.F, chain.F));
}

TEST_CASE("gmf rejects non-nested parent-child cardinalities") {
    RecursionTree t;
    t.parent = {0, 1}; // chain 0 -> 1 -> 2
    REQUIRE_THROWS_AS(build_profile(Scheme::Gmf, 5, {9, 9}, t), Error);
    REQUIRE_NOTHROW(build_profile(Scheme::Gmf, 5, {9, 12}, t));
}

TEST_CASE("mfmc requires strictly increasing totals") {
    REQUIRE_THROWS_AS(build_profile(Scheme::Mfmc, 4, {6, 6}), Error);
    REQUIRE_NOTHROW(build_profile(Scheme::Mfmc, 4, {6, 7}));
}

TEST_CASE("continuous decomposition matches integer profiles") {
    auto p = build_profile(Scheme::AcvMf, 10, {20, 40});
    auto exact = compute_fF(p);
    auto cont = compute_fF_continuous(build_groups_continuous(Scheme::AcvMf, 10.0, {20.0, 40.0}));
    CHECK((exact.F - cont.F).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((exact.f - cont.f).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("profile json carries scheme and cardinalities") {
    auto p = build_profile(Scheme::AcvMf, 10, {20, 40});
    auto json = profile_to_json(p);
    CHECK(json.find("\"scheme\":\"acv-mf\"") != std::string::npos);
    CHECK(json.find("\"n_shared\":10") != std::string::npos);
}

TEST_CASE("tree helpers validate shape") {
    REQUIRE_NOTHROW(validate_tree(star_tree(4)));
    REQUIRE_NOTHROW(validate_tree(chain_tree(4)));
    RecursionTree bad;
    bad.parent = {2, 1}; // 1 -> 2 -> 1 cycle
    REQUIRE_THROWS_AS(validate_tree(bad), Error);
}
