#include "support/oracles.hpp"

#include "mftune/acv.hpp"
#include "mftune/rational.hpp"

#include <algorithm>
#include <cmath>

namespace mftune::testing {

SchemeMatrices brute_force_fF(const AllocationProfile& profile) {
    const auto& g = profile.groups;
    int M = g.num_models;
    int num_sets = g.num_sets();

    // Explicit indices: group gi owns the contiguous block [start_gi, start_gi + size).
    std::vector<std::vector<long long>> sets(num_sets);
    long long next = 0;
    for (std::size_t gi = 0; gi < g.sizes.size(); ++gi) {
        for (int s = 0; s < num_sets; ++s)
            if (g.member_of[gi] & (std::uint64_t{1} << s))
                for (long long k = 0; k < g.sizes[gi]; ++k) sets[s].push_back(next + k);
        next += g.sizes[gi];
    }
    for (auto& s : sets) std::sort(s.begin(), s.end());

    auto count_intersection = [&](int a, int b) {
        std::vector<long long> tmp;
        std::set_intersection(sets[a].begin(), sets[a].end(), sets[b].begin(), sets[b].end(),
                              std::back_inserter(tmp));
        return static_cast<long long>(tmp.size());
    };

    Rational N(static_cast<long long>(sets[0].size()));
    auto r_of_count = [&](long long c) { return Rational(c) / N; };
    auto r_set = [&](int s) { return r_of_count(static_cast<long long>(sets[s].size())); };
    auto pair_term = [&](int a, int b) { return r_of_count(count_intersection(a, b)) / (r_set(a) * r_set(b)); };

    SchemeMatrices m;
    m.f.resize(M);
    m.F.resize(M, M);
    m.set_ratios.resize(num_sets);
    for (int s = 0; s < num_sets; ++s) m.set_ratios(s) = r_set(s).to_double();
    for (int i = 1; i <= M; ++i) {
        int i1 = g.set_one(i), i2 = g.set_two(i);
        m.f(i - 1) = (pair_term(i1, 0) - pair_term(i2, 0)).to_double();
        for (int j = 1; j <= M; ++j) {
            int j1 = g.set_one(j), j2 = g.set_two(j);
            Rational v = pair_term(i1, j1) - pair_term(i1, j2) - pair_term(i2, j1) + pair_term(i2, j2);
            m.F(i - 1, j - 1) = v.to_double();
        }
    }
    return m;
}

void brute_force_gG(const AllocationProfile& profile, Eigen::VectorXd& g_out, Eigen::MatrixXd& G_out) {
    const auto& g = profile.groups;
    int M = g.num_models;
    auto n_set = [&](int s) { return g.set_cardinality(s); };
    auto n_int = [&](int a, int b) { return g.intersection_cardinality(a, b); };

    g_out.resize(M);
    G_out.resize(M, M);
    for (int i = 1; i <= M; ++i) {
        int i1 = g.set_one(i), i2 = g.set_two(i);
        double n0 = static_cast<double>(n_set(0));
        g_out(i - 1) = static_cast<double>(n_int(i1, 0)) / (static_cast<double>(n_set(i1)) * n0) -
                       static_cast<double>(n_int(i2, 0)) / (static_cast<double>(n_set(i2)) * n0);
        for (int j = 1; j <= M; ++j) {
            int j1 = g.set_one(j), j2 = g.set_two(j);
            auto term = [&](int a, int b) {
                return static_cast<double>(n_int(a, b)) / (static_cast<double>(n_set(a)) * static_cast<double>(n_set(b)));
            };
            G_out(i - 1, j - 1) = term(i1, j1) - term(i1, j2) - term(i2, j1) + term(i2, j2);
        }
    }
}

double grid_search_single_model_variance(const ModelStats& stats, double w0, double w1, double budget, int grid_n,
                                         int grid_r) {
    double best = stats.var_q; // worse than anything feasible
    double n_max = budget / w0;
    for (int a = 0; a < grid_n; ++a) {
        double n = std::exp(std::log(2.0) + (std::log(n_max) - std::log(2.0)) * a / (grid_n - 1));
        double r_cap = (budget - n * w0) / (n * w1);
        if (r_cap <= 1.0) continue;
        for (int b = 0; b < grid_r; ++b) {
            double r = std::exp(std::log(1.0 + 1e-6) + (std::log(r_cap) - std::log(1.0 + 1e-6)) * b / (grid_r - 1));
            if (n * (w0 + r * w1) > budget) continue;
            auto groups = build_groups_continuous(Scheme::AcvMf, n, {n * r});
            auto matrices = compute_fF_continuous(groups);
            auto vr = predicted_variance(stats, matrices, n);
            if (vr.variance < best) best = vr.variance;
        }
    }
    return best;
}

} // namespace mftune::testing
