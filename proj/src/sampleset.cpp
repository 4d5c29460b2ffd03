#include "mftune/sampleset.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace mftune {

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Mc: return "mc";
        case Scheme::Mlmc: return "mlmc";
        case Scheme::Mfmc: return "mfmc";
        case Scheme::AcvIs: return "acv-is";
        case Scheme::AcvMf: return "acv-mf";
        case Scheme::Gmf: return "gmf";
    }
    return "?";
}

Scheme parse_scheme(const std::string& name) {
    if (name == "mc") return Scheme::Mc;
    if (name == "mlmc") return Scheme::Mlmc;
    if (name == "mfmc") return Scheme::Mfmc;
    if (name == "acv-is" || name == "acvis") return Scheme::AcvIs;
    if (name == "acv-mf" || name == "acvmf") return Scheme::AcvMf;
    if (name == "gmf") return Scheme::Gmf;
    fail(ErrorKind::Config, "unknown scheme '" + name + "'");
}

RecursionTree star_tree(int M) {
    RecursionTree t;
    t.parent.assign(M, 0);
    return t;
}

RecursionTree chain_tree(int M) {
    RecursionTree t;
    t.parent.resize(M);
    for (int i = 1; i <= M; ++i) t.parent[i - 1] = i - 1;
    return t;
}

void validate_tree(const RecursionTree& tree) {
    int M = tree.models();
    for (int i = 1; i <= M; ++i) {
        int p = tree.parent[i - 1];
        if (p < 0 || p > M || p == i) fail(ErrorKind::Constraint, "tree parent out of range");
        // walk to the root, bounded by M hops
        int node = i, hops = 0;
        while (node != 0) {
            node = tree.parent[node - 1];
            if (++hops > M) fail(ErrorKind::Constraint, "recursion tree contains a cycle");
        }
    }
}

namespace {

template <typename T>
GroupDecomposition<T> build_groups_impl(Scheme scheme, T n_shared, const std::vector<T>& n_two,
                                        const std::optional<RecursionTree>& tree_opt, bool integer_checks) {
    int M = static_cast<int>(n_two.size());
    GroupDecomposition<T> g;
    g.num_models = M;
    auto add_group = [&g](T size, std::uint64_t mask) {
        if (size > T{0}) {
            g.sizes.push_back(size);
            g.member_of.push_back(mask);
        }
    };
    auto bit = [](int set) { return std::uint64_t{1} << set; };

    if (integer_checks && n_shared < T{1}) fail(ErrorKind::Constraint, "shared set requires N >= 1");

    switch (scheme) {
        case Scheme::Mc: {
            if (M != 0) fail(ErrorKind::Constraint, "mc profile takes no low-fidelity sets");
            add_group(n_shared, bit(0));
            break;
        }
        case Scheme::Mlmc: {
            // z_1^1 = z; z_i^2 is a fresh block that model i+1 reuses as z_{i+1}^1.
            std::uint64_t first = bit(0) | (M >= 1 ? bit(g.set_one(1)) : 0);
            add_group(n_shared, first);
            for (int i = 1; i <= M; ++i) {
                if (integer_checks && n_two[i - 1] < T{1})
                    fail(ErrorKind::Constraint, "mlmc: fresh block of model " + std::to_string(i) + " is empty");
                std::uint64_t mask = bit(g.set_two(i));
                if (i < M) mask |= bit(g.set_one(i + 1));
                add_group(n_two[i - 1], mask);
            }
            break;
        }
        case Scheme::AcvIs: {
            // z_i^1 = z; extras are pairwise disjoint.
            std::uint64_t shared_mask = bit(0);
            for (int i = 1; i <= M; ++i) shared_mask |= bit(g.set_one(i));
            add_group(n_shared, shared_mask);
            for (int i = 1; i <= M; ++i) {
                if (integer_checks && n_two[i - 1] < T{1})
                    fail(ErrorKind::Constraint, "acv-is: extra block of model " + std::to_string(i) + " is empty");
                add_group(n_two[i - 1], bit(g.set_two(i)));
            }
            break;
        }
        case Scheme::Mfmc:
        case Scheme::AcvMf:
        case Scheme::Gmf: {
            // Prefix-nested family: every set is a prefix [0, c) of one global
            // sample ordering, so intersections are mins of cardinalities.
            // z_i^1 is the parent's total set, z_i^2 = z_i itself. MFMC is the
            // chain, ACV-MF (nested extras) the star.
            RecursionTree tree;
            if (scheme == Scheme::Gmf) {
                if (!tree_opt) fail(ErrorKind::Constraint, "gmf requires a recursion tree");
                tree = *tree_opt;
            } else if (scheme == Scheme::Mfmc) {
                tree = chain_tree(M);
            } else {
                tree = star_tree(M);
            }
            if (tree.models() != M) fail(ErrorKind::Constraint, "tree size does not match model count");
            validate_tree(tree);

            auto total_of = [&](int node) { return node == 0 ? n_shared : n_two[node - 1]; };
            for (int i = 1; i <= M; ++i) {
                int p = tree.parent[i - 1];
                if (!(total_of(i) > total_of(p))) {
                    std::string rel = scheme == Scheme::AcvMf
                                          ? "acv-mf requires N_i > N (z_i \\ z_i^1 nonempty)"
                                          : scheme_name(scheme) + ": set of model " + std::to_string(i) +
                                                " must strictly contain the set of its parent " + std::to_string(p);
                    fail(ErrorKind::Constraint, rel);
                }
            }

            // Distinct prefix boundaries, ascending; one group per increment.
            std::vector<T> bounds;
            bounds.push_back(n_shared);
            for (int i = 1; i <= M; ++i) bounds.push_back(n_two[i - 1]);
            std::sort(bounds.begin(), bounds.end());
            bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

            T prev{};
            for (const T& b : bounds) {
                T size = b - prev;
                std::uint64_t mask = 0;
                if (n_shared >= b) mask |= bit(0);
                for (int i = 1; i <= M; ++i) {
                    if (total_of(tree.parent[i - 1]) >= b) mask |= bit(g.set_one(i));
                    if (n_two[i - 1] >= b) mask |= bit(g.set_two(i));
                }
                add_group(size, mask);
                prev = b;
            }
            break;
        }
    }
    return g;
}

} // namespace

AllocationProfile build_profile(Scheme scheme, long long n_shared, const std::vector<long long>& n_two,
                                const std::optional<RecursionTree>& tree) {
    AllocationProfile p;
    p.scheme = scheme;
    p.tree = tree;
    p.n_shared = n_shared;
    p.n_two = n_two;
    p.groups = build_groups_impl<long long>(scheme, n_shared, n_two, tree, true);

    // Degenerate difference estimators (identical set pair) are rejected here
    // so downstream never sees a zero row in F.
    for (int i = 1; i <= p.num_models(); ++i) {
        std::uint64_t b1 = std::uint64_t{1} << p.groups.set_one(i);
        std::uint64_t b2 = std::uint64_t{1} << p.groups.set_two(i);
        bool identical = true, one_empty = true, two_empty = true;
        for (std::size_t gi = 0; gi < p.groups.sizes.size(); ++gi) {
            bool in1 = p.groups.member_of[gi] & b1;
            bool in2 = p.groups.member_of[gi] & b2;
            if (in1 != in2) identical = false;
            if (in1) one_empty = false;
            if (in2) two_empty = false;
        }
        if (one_empty || two_empty)
            fail(ErrorKind::Constraint, "model " + std::to_string(i) + " has an empty estimator set");
        if (identical)
            fail(ErrorKind::Constraint,
                 "model " + std::to_string(i) + " has identical estimator sets; its difference estimator vanishes");
    }
    return p;
}

GroupDecomposition<double> build_groups_continuous(Scheme scheme, double n_shared, const std::vector<double>& n_two,
                                                   const std::optional<RecursionTree>& tree) {
    return build_groups_impl<double>(scheme, n_shared, n_two, tree, false);
}

double AllocationProfile::cost(const std::vector<double>& model_costs) const {
    if (static_cast<int>(model_costs.size()) != num_models() + 1)
        fail(ErrorKind::Domain, "cost vector length must be M+1");
    double total = static_cast<double>(n_shared) * model_costs[0];
    for (int i = 1; i <= num_models(); ++i)
        total += static_cast<double>(model_eval_count(i)) * model_costs[i];
    return total;
}

template <typename T>
void scheme_matrices_from_groups(const GroupDecomposition<T>& g, std::vector<T>& f_out, std::vector<T>& F_out,
                                 std::vector<T>& ratios_out) {
    int M = g.num_models;
    T N = g.set_cardinality(0);
    f_out.assign(M, T{});
    F_out.assign(static_cast<std::size_t>(M) * M, T{});
    ratios_out.assign(g.num_sets(), T{});

    std::vector<T> card(g.num_sets());
    for (int s = 0; s < g.num_sets(); ++s) {
        card[s] = g.set_cardinality(s);
        ratios_out[s] = card[s] / N;
    }

    // r(a n b) / (r(a) r(b)) == n(a n b) * N / (n(a) n(b))
    auto pair_term = [&](int a, int b) { return g.intersection_cardinality(a, b) * N / (card[a] * card[b]); };

    for (int i = 1; i <= M; ++i) {
        int i1 = g.set_one(i), i2 = g.set_two(i);
        f_out[i - 1] = pair_term(i1, 0) - pair_term(i2, 0);
        for (int j = i; j <= M; ++j) {
            int j1 = g.set_one(j), j2 = g.set_two(j);
            T v = pair_term(i1, j1) - pair_term(i1, j2) - pair_term(i2, j1) + pair_term(i2, j2);
            F_out[static_cast<std::size_t>(i - 1) * M + (j - 1)] = v;
            F_out[static_cast<std::size_t>(j - 1) * M + (i - 1)] = v;
        }
    }
}

template void scheme_matrices_from_groups<Rational>(const GroupDecomposition<Rational>&, std::vector<Rational>&,
                                                    std::vector<Rational>&, std::vector<Rational>&);
template void scheme_matrices_from_groups<double>(const GroupDecomposition<double>&, std::vector<double>&,
                                                  std::vector<double>&, std::vector<double>&);

namespace {

SchemeMatrices pack(int M, int num_sets, const std::vector<double>& f, const std::vector<double>& F,
                    const std::vector<double>& ratios) {
    SchemeMatrices m;
    m.f = Eigen::Map<const Eigen::VectorXd>(f.data(), M);
    m.F = Eigen::Map<const Eigen::MatrixXd>(F.data(), M, M);
    m.set_ratios = Eigen::Map<const Eigen::VectorXd>(ratios.data(), num_sets);
    return m;
}

} // namespace

SchemeMatrices compute_fF(const AllocationProfile& profile) {
    int M = profile.num_models();
    try {
        GroupDecomposition<Rational> rg;
        rg.num_models = M;
        rg.member_of = profile.groups.member_of;
        rg.sizes.reserve(profile.groups.sizes.size());
        for (long long s : profile.groups.sizes) rg.sizes.emplace_back(s);

        std::vector<Rational> f, F, ratios;
        scheme_matrices_from_groups(rg, f, F, ratios);

        std::vector<double> fd(f.size()), Fd(F.size()), rd(ratios.size());
        for (std::size_t k = 0; k < f.size(); ++k) fd[k] = f[k].to_double();
        for (std::size_t k = 0; k < F.size(); ++k) Fd[k] = F[k].to_double();
        for (std::size_t k = 0; k < ratios.size(); ++k) rd[k] = ratios[k].to_double();
        return pack(M, profile.groups.num_sets(), fd, Fd, rd);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Numerical) throw;
        // Cardinalities too large for exact arithmetic; double is ample then.
        GroupDecomposition<double> dg;
        dg.num_models = M;
        dg.member_of = profile.groups.member_of;
        dg.sizes.assign(profile.groups.sizes.begin(), profile.groups.sizes.end());
        return compute_fF_continuous(dg);
    }
}

SchemeMatrices compute_fF_continuous(const GroupDecomposition<double>& groups) {
    std::vector<double> f, F, ratios;
    scheme_matrices_from_groups(groups, f, F, ratios);
    return pack(groups.num_models, groups.num_sets(), f, F, ratios);
}

std::string profile_to_json(const AllocationProfile& profile) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"scheme\":\"" << scheme_name(profile.scheme) << "\"";
    if (profile.tree) {
        os << ",\"tree\":[";
        for (std::size_t i = 0; i < profile.tree->parent.size(); ++i)
            os << (i ? "," : "") << profile.tree->parent[i];
        os << "]";
    }
    os << ",\"n_shared\":" << profile.n_shared << ",\"n_two\":[";
    for (std::size_t i = 0; i < profile.n_two.size(); ++i) os << (i ? "," : "") << profile.n_two[i];
    os << "],\"groups\":[";
    for (std::size_t g = 0; g < profile.groups.sizes.size(); ++g) {
        os << (g ? "," : "") << "{\"size\":" << profile.groups.sizes[g] << ",\"member_of\":[";
        bool first = true;
        for (int s = 0; s < profile.groups.num_sets(); ++s)
            if (profile.groups.member_of[g] & (std::uint64_t{1} << s)) {
                os << (first ? "" : ",") << s;
                first = false;
            }
        os << "]}";
    }
    os << "]}";
    return os.str();
}

} // namespace mftune
