#pragma once

#include "mftune/error.hpp"
#include "mftune/rational.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mftune {

// Sampling scheme for the estimator's set relations. Mc is the degenerate
// no-low-fidelity allocation used as a fallback and as the plain-MC baseline.
enum class Scheme { Mc, Mlmc, Mfmc, AcvIs, AcvMf, Gmf };

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);

// Rooted recursion tree over models 1..M; parent[i-1] in {0..M}, root is the
// high-fidelity model 0. Used by the generalized-multifidelity scheme.
struct RecursionTree {
    std::vector<int> parent; // parent of model i is parent[i-1]

    int models() const { return static_cast<int>(parent.size()); }
    bool operator==(const RecursionTree& o) const { return parent == o.parent; }
};

RecursionTree star_tree(int M);
RecursionTree chain_tree(int M);
void validate_tree(const RecursionTree& tree);

// A partition of all drawn samples into disjoint base groups. Each named set
// (the shared set and each model's two estimator sets) is an exact union of
// groups recorded in a per-group membership mask.
//
// Set indexing: 0 is the shared set; model i (1-based) owns sets 2i-1 and 2i
// for the first and second half of its difference estimator.
template <typename T>
struct GroupDecomposition {
    std::vector<T> sizes;
    std::vector<std::uint64_t> member_of;
    int num_models = 0;

    static constexpr int shared_set = 0;
    static int set_one(int model) { return 2 * model - 1; }
    static int set_two(int model) { return 2 * model; }

    int num_sets() const { return 1 + 2 * num_models; }

    T set_cardinality(int set) const {
        T total{};
        std::uint64_t bit = std::uint64_t{1} << set;
        for (std::size_t g = 0; g < sizes.size(); ++g)
            if (member_of[g] & bit) total = total + sizes[g];
        return total;
    }

    T intersection_cardinality(int a, int b) const {
        T total{};
        std::uint64_t mask = (std::uint64_t{1} << a) | (std::uint64_t{1} << b);
        for (std::size_t g = 0; g < sizes.size(); ++g)
            if ((member_of[g] & mask) == mask) total = total + sizes[g];
        return total;
    }

    // Samples on which model i runs: the union of its two sets.
    T model_eval_count(int model) const {
        T total{};
        std::uint64_t mask = (std::uint64_t{1} << set_one(model)) | (std::uint64_t{1} << set_two(model));
        for (std::size_t g = 0; g < sizes.size(); ++g)
            if (member_of[g] & mask) total = total + sizes[g];
        return total;
    }
};

// Integer-cardinality allocation: the concrete object the estimator is
// evaluated on. Immutable after construction.
struct AllocationProfile {
    Scheme scheme = Scheme::AcvMf;
    std::optional<RecursionTree> tree; // present for Gmf
    long long n_shared = 0;
    std::vector<long long> n_two; // cardinality of each model's second set
    GroupDecomposition<long long> groups;

    int num_models() const { return groups.num_models; }
    long long model_eval_count(int model) const { return groups.model_eval_count(model); }

    // Eq.-style total: N*w0 + sum_i |z_i| * w_i, with |z_i| the union size.
    double cost(const std::vector<double>& model_costs) const;
};

// f vector / F matrix entering the variance formula, plus the oversampling
// ratios of every named set (shared set first, then set-one/set-two pairs).
struct SchemeMatrices {
    Eigen::VectorXd f;
    Eigen::MatrixXd F;
    Eigen::VectorXd set_ratios;
};

// Builds the group decomposition realizing a scheme's set relations.
// `n_two[i-1]` is the cardinality of model i's second set: the per-level fresh
// block for MLMC, the independent extra block for ACV-IS, and the model's total
// sample count for the nested schemes (MFMC, ACV-MF, GMF) where the second set
// is the whole of z_i.
AllocationProfile build_profile(Scheme scheme, long long n_shared, const std::vector<long long>& n_two,
                                const std::optional<RecursionTree>& tree = std::nullopt);

// Continuous-cardinality counterpart used by the allocation optimizer. Sizes
// may be any positive reals; no integer feasibility checks are applied.
GroupDecomposition<double> build_groups_continuous(Scheme scheme, double n_shared, const std::vector<double>& n_two,
                                                   const std::optional<RecursionTree>& tree = std::nullopt);

// Cardinality formula for f and F over any group decomposition.
template <typename T>
void scheme_matrices_from_groups(const GroupDecomposition<T>& g, std::vector<T>& f_out, std::vector<T>& F_out,
                                 std::vector<T>& ratios_out);

// Exact evaluation (rational arithmetic, converted to double once at the end).
// Falls back to double arithmetic if the rationals overflow.
SchemeMatrices compute_fF(const AllocationProfile& profile);

// Double-arithmetic evaluation for continuous decompositions.
SchemeMatrices compute_fF_continuous(const GroupDecomposition<double>& groups);

std::string profile_to_json(const AllocationProfile& profile);

} // namespace mftune
