#pragma once

#include "mftune/acv.hpp"
#include "mftune/sampleset.hpp"
#include "mftune/stats.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mftune {

struct AllocationOptions {
    // Reuse lower bounds (pilot projection): shared samples and per-model
    // evaluation counts must not fall below these.
    long long n_shared_floor = 2;
    long long per_model_floor = 0;
    // Cap on any model's sample count; beyond ~4e6 the remaining headroom in
    // the correction term is below 1e-6 while evaluation wall time keeps
    // growing linearly.
    long long max_samples_per_model = 4'000'000;
    std::uint64_t seed = 0; // multistart jitter
    int max_iterations = 2000;
    double relative_tolerance = 1e-8;
    int jobs = 1; // tree-parallelism of the GMF search
};

struct AllocationSolution {
    Scheme scheme = Scheme::AcvMf;
    std::optional<RecursionTree> tree;
    AllocationProfile profile;
    double predicted_variance = 0.0;
    Eigen::VectorXd alpha;
    double achieved_cost = 0.0;
    double budget = 0.0;

    // Continuous relaxation, kept for diagnostics.
    double relaxed_n_shared = 0.0;
    std::vector<double> relaxed_n_two;
    double relaxed_variance = 0.0;

    bool mc_fallback = false;
    bool convergence_warning = false;
};

// Budget-constrained sample allocation: continuous relaxation by simplex
// search over log sampling ratios (the budget binds at any optimum, which
// fixes N analytically), then floor-and-repair integerization. Never returns
// a solution worse than spending the whole budget on plain MC.
AllocationSolution optimize_allocation(const ModelStats& stats, const std::vector<double>& costs, double budget,
                                       Scheme scheme, const AllocationOptions& options = {},
                                       const std::optional<RecursionTree>& tree = std::nullopt);

// All rooted labeled trees on models 1..M with root 0; (M+1)^(M-1) of them.
std::vector<RecursionTree> enumerate_trees(int M);

// Runs the allocation optimization for every admissible recursion tree and
// returns the best. The star tree reproduces ACV-MF exactly.
AllocationSolution optimize_allocation_gmf(const ModelStats& stats, const std::vector<double>& costs, double budget,
                                           const AllocationOptions& options = {});

std::string solution_to_json(const AllocationSolution& solution);

} // namespace mftune
