#include "mftune/allocation.hpp"

#include "mftune/nelder_mead.hpp"
#include "mftune/parallel.hpp"
#include "mftune/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mftune {

namespace {

// Maps the positive step vector u (one entry per low-fidelity model) to the
// scheme's second-set cardinalities at N = 1. All schemes are scale-free in
// ratios, so the continuous search runs at unit shared-set size.
std::vector<double> ratios_from_steps(Scheme scheme, const std::vector<double>& u,
                                      const std::optional<RecursionTree>& tree) {
    int M = static_cast<int>(u.size());
    std::vector<double> n2(M);
    switch (scheme) {
        case Scheme::AcvMf:
            for (int i = 0; i < M; ++i) n2[i] = 1.0 + u[i];
            break;
        case Scheme::AcvIs:
        case Scheme::Mlmc:
            for (int i = 0; i < M; ++i) n2[i] = u[i];
            break;
        case Scheme::Mfmc: {
            double r = 1.0;
            for (int i = 0; i < M; ++i) {
                r += u[i];
                n2[i] = r;
            }
            break;
        }
        case Scheme::Gmf: {
            const auto& parent = tree->parent;
            std::vector<double> r(M + 1, 0.0);
            r[0] = 1.0;
            std::vector<bool> done(M + 1, false);
            done[0] = true;
            int remaining = M;
            while (remaining > 0) {
                for (int i = 1; i <= M; ++i) {
                    if (done[i] || !done[parent[i - 1]]) continue;
                    r[i] = r[parent[i - 1]] + u[i - 1];
                    done[i] = true;
                    --remaining;
                }
            }
            for (int i = 0; i < M; ++i) n2[i] = r[i + 1];
            break;
        }
        case Scheme::Mc:
            break;
    }
    return n2;
}

struct ContinuousEval {
    double unit_cost = 0.0;        // cost of the profile at N = 1
    double variance_factor = 0.0;  // (1 - q); multiply by VarQ/N for variance
    bool valid = false;
};

ContinuousEval evaluate_ratios(const ModelStats& stats, const std::vector<double>& costs, Scheme scheme,
                               const std::vector<double>& n2, const std::optional<RecursionTree>& tree) {
    ContinuousEval out;
    GroupDecomposition<double> groups;
    try {
        groups = build_groups_continuous(scheme, 1.0, n2, tree);
    } catch (const Error&) {
        return out;
    }
    int M = static_cast<int>(n2.size());
    out.unit_cost = costs[0];
    for (int i = 1; i <= M; ++i) out.unit_cost += groups.model_eval_count(i) * costs[i];
    try {
        auto matrices = compute_fF_continuous(groups);
        auto vr = predicted_variance(stats, matrices, 1.0);
        out.variance_factor = vr.variance / stats.var_q; // equals (1 - q)
        out.valid = true;
    } catch (const Error&) {
        out.valid = false;
    }
    return out;
}

std::vector<std::vector<double>> structured_starts(const ModelStats& stats, const std::vector<double>& costs,
                                                   Scheme scheme, std::uint64_t seed) {
    int M = stats.num_low_fidelity();
    Rng rng(derive_seed(seed, 0xa110ULL));

    // MFMC-style heuristic ratio per model.
    std::vector<double> heur(M);
    for (int i = 0; i < M; ++i) {
        double rho2 = stats.rho(i) * stats.rho(i);
        double denom = std::max(1.0 - rho2, 1e-12);
        double r = std::sqrt(rho2 / denom * costs[0] / std::max(costs[i + 1], 1e-12));
        heur[i] = std::clamp(r, 1.0 + 1e-3, 1e6);
    }
    auto to_steps = [&](const std::vector<double>& target_ratio) {
        std::vector<double> u(M);
        if (scheme == Scheme::Mfmc) {
            double prev = 1.0;
            for (int i = 0; i < M; ++i) {
                u[i] = std::max(target_ratio[i] - prev, 1e-3);
                prev += u[i];
            }
        } else {
            for (int i = 0; i < M; ++i) u[i] = std::max(target_ratio[i] - 1.0, 1e-3);
        }
        return u;
    };

    std::vector<std::vector<double>> starts;
    starts.push_back(to_steps(heur));                          // balanced
    starts.push_back(std::vector<double>(M, 0.01));            // MC-heavy
    starts.push_back(std::vector<double>(M, 100.0));           // all models heavy
    for (int i = 0; i < M && static_cast<int>(starts.size()) < 7; ++i) {
        std::vector<double> u(M, 0.05);
        u[i] = 100.0;
        starts.push_back(u); // one model heavy
    }
    while (starts.size() < 8) {
        auto u = to_steps(heur);
        for (double& v : u) v *= std::exp(0.5 * rng.normal());
        starts.push_back(u);
    }
    // switch to log coordinates
    for (auto& s : starts)
        for (double& v : s) v = std::log(std::max(v, 1e-9));
    return starts;
}

struct IntegerCandidate {
    AllocationProfile profile;
    double variance = 0.0;
    double cost = 0.0;
};

} // namespace

AllocationSolution optimize_allocation(const ModelStats& stats, const std::vector<double>& costs, double budget,
                                       Scheme scheme, const AllocationOptions& options,
                                       const std::optional<RecursionTree>& tree_opt) {
    int M = stats.num_low_fidelity();
    if (static_cast<int>(costs.size()) != M + 1) fail(ErrorKind::Domain, "cost vector length must be M+1");
    if (scheme == Scheme::Gmf && (!tree_opt || tree_opt->models() != M))
        fail(ErrorKind::Domain, "gmf allocation needs a recursion tree over all models");
    if (scheme == Scheme::Mc) fail(ErrorKind::Domain, "use the scheme-specific optimizer for non-MC allocations");

    double min_cost = 2.0 * costs[0];
    for (int i = 1; i <= M; ++i) min_cost += 2.0 * costs[i];
    if (budget < min_cost)
        fail(ErrorKind::Infeasible, "budget " + std::to_string(budget) + " cannot fund 2 samples of every model");

    const double n_floor = static_cast<double>(std::max<long long>(options.n_shared_floor, 2));
    const double cap = static_cast<double>(options.max_samples_per_model);

    // --- continuous relaxation over log steps -------------------------------
    auto objective = [&](const std::vector<double>& x) {
        std::vector<double> u(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) u[i] = std::exp(std::clamp(x[i], -40.0, 40.0));
        auto n2 = ratios_from_steps(scheme, u, tree_opt);
        auto ev = evaluate_ratios(stats, costs, scheme, n2, tree_opt);
        if (!ev.valid) return 1e30;
        double n_shared = budget / ev.unit_cost;

        double viol = 0.0;
        if (n_shared < n_floor) viol += (n_floor - n_shared) / n_floor;
        GroupDecomposition<double> groups = build_groups_continuous(scheme, 1.0, n2, tree_opt);
        for (int i = 1; i <= M; ++i) {
            double evals = groups.model_eval_count(i) * n_shared;
            if (options.per_model_floor > 0 && evals < options.per_model_floor)
                viol += (options.per_model_floor - evals) / options.per_model_floor;
            if (evals > cap) viol += (evals - cap) / cap;
        }
        double base = ev.unit_cost * std::max(ev.variance_factor, 0.0);
        return base * (1.0 + viol) * (1.0 + viol) + viol;
    };

    NelderMeadOptions nm;
    nm.max_iterations = options.max_iterations;
    nm.relative_tolerance = options.relative_tolerance;
    auto best = nelder_mead_multistart(objective, structured_starts(stats, costs, scheme, options.seed), nm);

    std::vector<double> u(best.x.size());
    for (std::size_t i = 0; i < best.x.size(); ++i) u[i] = std::exp(std::clamp(best.x[i], -40.0, 40.0));
    auto n2_ratio = ratios_from_steps(scheme, u, tree_opt);
    auto ev = evaluate_ratios(stats, costs, scheme, n2_ratio, tree_opt);
    if (!ev.valid) fail(ErrorKind::Numerical, "allocation optimizer failed to find a valid ratio configuration");
    double relaxed_n = std::max(budget / ev.unit_cost, n_floor);

    AllocationSolution sol;
    sol.scheme = scheme;
    sol.tree = tree_opt;
    sol.budget = budget;
    sol.relaxed_n_shared = relaxed_n;
    sol.relaxed_n_two.resize(M);
    for (int i = 0; i < M; ++i) sol.relaxed_n_two[i] = n2_ratio[i] * relaxed_n;
    sol.relaxed_variance = stats.var_q * ev.variance_factor / relaxed_n;
    sol.convergence_warning = !best.converged;

    // --- integerization ------------------------------------------------------
    auto try_candidate = [&](long long N, const std::vector<long long>& n2) -> std::optional<IntegerCandidate> {
        if (N < std::max<long long>(options.n_shared_floor, 2)) return std::nullopt;
        IntegerCandidate c;
        try {
            c.profile = build_profile(scheme, N, n2, tree_opt);
        } catch (const Error&) {
            return std::nullopt;
        }
        for (int i = 1; i <= M; ++i) {
            long long evals = c.profile.model_eval_count(i);
            if (options.per_model_floor > 0 && evals < options.per_model_floor) return std::nullopt;
            if (evals > options.max_samples_per_model) return std::nullopt;
        }
        c.cost = c.profile.cost(costs);
        if (c.cost > budget + 1e-9) return std::nullopt;
        try {
            auto vr = predicted_variance(stats, compute_fF(c.profile), static_cast<double>(N));
            c.variance = vr.variance;
        } catch (const Error&) {
            return std::nullopt;
        }
        return c;
    };

    // Floor the relaxed solution, then walk it into feasibility.
    long long N0 = static_cast<long long>(std::floor(relaxed_n));
    std::vector<long long> t0(M);
    for (int i = 0; i < M; ++i)
        t0[i] = std::min<long long>(static_cast<long long>(std::floor(sol.relaxed_n_two[i])),
                                    options.max_samples_per_model);

    auto enforce_structure = [&](long long N, std::vector<long long> t) {
        if (scheme == Scheme::AcvMf)
            for (int i = 0; i < M; ++i) t[i] = std::max(t[i], N + 1);
        if (scheme == Scheme::Mfmc) {
            long long prev = N;
            for (int i = 0; i < M; ++i) {
                t[i] = std::max(t[i], prev + 1);
                prev = t[i];
            }
        }
        if (scheme == Scheme::Gmf) {
            // repeated passes settle parent-child ordering (tree depth <= M)
            for (int pass = 0; pass < M; ++pass)
                for (int i = 0; i < M; ++i) {
                    int p = tree_opt->parent[i];
                    long long parent_total = p == 0 ? N : t[p - 1];
                    t[i] = std::max(t[i], parent_total + 1);
                }
        }
        if (scheme == Scheme::AcvIs || scheme == Scheme::Mlmc)
            for (int i = 0; i < M; ++i) t[i] = std::max<long long>(t[i], 1);
        if (options.per_model_floor > 0) {
            // raising the second set is always enough to lift a model's count
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i < M; ++i) {
                    AllocationProfile p;
                    try {
                        p = build_profile(scheme, N, t, tree_opt);
                    } catch (const Error&) {
                        break;
                    }
                    long long deficit = options.per_model_floor - p.model_eval_count(i + 1);
                    if (deficit > 0) t[i] += deficit;
                }
        }
        return t;
    };

    std::optional<IntegerCandidate> current;
    {
        long long N = std::max<long long>({N0, options.n_shared_floor, 2});
        for (int shrink = 0; shrink < 2000 && !current; ++shrink) {
            auto t = enforce_structure(N, t0);
            current = try_candidate(N, t);
            if (!current) {
                // over budget or structurally stuck: scale the extras down, then N
                bool shrunk = false;
                for (int i = 0; i < M; ++i)
                    if (t0[i] > 1) {
                        t0[i] = std::max<long long>(1, t0[i] - std::max<long long>(1, t0[i] / 10));
                        shrunk = true;
                    }
                if (!shrunk || (shrink % 8) == 7) {
                    if (N <= std::max<long long>(options.n_shared_floor, 2)) break;
                    N = std::max<long long>(options.n_shared_floor, std::max<long long>(2, N - std::max<long long>(1, N / 10)));
                }
            }
        }
    }

    // Greedy marginal repair: spend leftover budget where it reduces variance
    // most per unit cost.
    if (current) {
        for (int round = 0; round < 400; ++round) {
            double slack = budget - current->cost;
            std::optional<IntegerCandidate> pick;
            double pick_score = 0.0;
            auto consider = [&](long long N, const std::vector<long long>& t) {
                auto cand = try_candidate(N, t);
                if (!cand) return;
                double dcost = cand->cost - current->cost;
                double dvar = current->variance - cand->variance;
                if (dcost <= 0.0 || dvar <= 0.0) return;
                double score = dvar / dcost;
                if (!pick || score > pick_score) {
                    pick = cand;
                    pick_score = score;
                }
            };
            long long N = current->profile.n_shared;
            auto t = current->profile.n_two;
            for (long long dn : {1LL, std::max<long long>(1, N / 20)})
                if (static_cast<double>(dn) * costs[0] <= slack + 1e-9) consider(N + dn, enforce_structure(N + dn, t));
            for (int i = 0; i < M; ++i) {
                for (long long dt : {1LL, std::max<long long>(1, t[i] / 20)}) {
                    if (static_cast<double>(dt) * costs[i + 1] > slack + 1e-9) continue;
                    auto t2 = t;
                    t2[i] += dt;
                    consider(N, enforce_structure(N, t2));
                }
            }
            if (!pick) break;
            current = pick;
        }
        // Bulk-fill the cheapest models with any remaining slack.
        std::vector<int> by_cost(M);
        for (int i = 0; i < M; ++i) by_cost[i] = i;
        std::sort(by_cost.begin(), by_cost.end(), [&](int a, int b) { return costs[a + 1] < costs[b + 1]; });
        for (int i : by_cost) {
            double slack = budget - current->cost;
            long long extra = static_cast<long long>(std::floor(slack / costs[i + 1]));
            if (extra < 1) continue;
            auto t2 = current->profile.n_two;
            t2[i] += extra;
            auto cand = try_candidate(current->profile.n_shared, enforce_structure(current->profile.n_shared, t2));
            if (cand && cand->variance <= current->variance * (1.0 + 1e-12)) current = cand;
        }
    }

    // --- plain-MC comparison --------------------------------------------------
    // With reuse floors active the pilot's low-fidelity evaluations are sunk
    // spend the MC option still has to carry.
    double sunk_lf = 0.0;
    if (options.per_model_floor > 0)
        for (int i = 1; i <= M; ++i) sunk_lf += static_cast<double>(options.per_model_floor) * costs[i];
    long long n_mc = static_cast<long long>(std::floor((budget - sunk_lf) / costs[0]));
    bool mc_ok = n_mc >= 2 && n_mc >= options.n_shared_floor;
    double var_mc = mc_ok ? stats.var_q / static_cast<double>(n_mc) : std::numeric_limits<double>::infinity();

    if (!current || var_mc < current->variance) {
        if (!mc_ok)
            fail(ErrorKind::Infeasible,
                 "budget cannot fund a feasible allocation (even plain MC under the reuse bounds)");
        AllocationSolution mc = sol;
        mc.scheme = Scheme::Mc;
        mc.tree.reset();
        mc.mc_fallback = true;
        mc.profile = build_profile(Scheme::Mc, n_mc, {});
        mc.predicted_variance = var_mc;
        mc.alpha = Eigen::VectorXd::Zero(0);
        mc.achieved_cost = static_cast<double>(n_mc) * costs[0] + sunk_lf;
        return mc;
    }

    sol.profile = current->profile;
    sol.predicted_variance = current->variance;
    sol.achieved_cost = current->cost;
    auto vr = predicted_variance(stats, compute_fF(current->profile), static_cast<double>(current->profile.n_shared));
    sol.alpha = vr.alpha;
    return sol;
}

std::vector<RecursionTree> enumerate_trees(int M) {
    if (M < 1 || M > 6) fail(ErrorKind::Domain, "tree enumeration supports 1..6 models");
    std::vector<RecursionTree> trees;
    std::vector<int> parent(M, 0);
    for (;;) {
        RecursionTree t;
        t.parent.assign(parent.begin(), parent.end());
        bool valid = true;
        for (int i = 1; i <= M && valid; ++i) {
            if (parent[i - 1] == i) {
                valid = false;
                break;
            }
            int node = i, hops = 0;
            while (node != 0) {
                node = parent[node - 1];
                if (++hops > M) {
                    valid = false;
                    break;
                }
            }
        }
        if (valid) trees.push_back(t);
        int k = 0;
        while (k < M) {
            if (++parent[k] <= M) break;
            parent[k] = 0;
            ++k;
        }
        if (k == M) break;
    }
    return trees;
}

AllocationSolution optimize_allocation_gmf(const ModelStats& stats, const std::vector<double>& costs, double budget,
                                           const AllocationOptions& options) {
    auto trees = enumerate_trees(stats.num_low_fidelity());
    std::vector<std::optional<AllocationSolution>> results(trees.size());
    parallel_for(options.jobs, trees.size(), [&](std::size_t i) {
        try {
            results[i] = optimize_allocation(stats, costs, budget, Scheme::Gmf, options, trees[i]);
        } catch (const Error&) {
            results[i] = std::nullopt;
        }
    });
    std::optional<AllocationSolution> best;
    for (const auto& r : results)
        if (r && (!best || r->predicted_variance < best->predicted_variance)) best = r;
    if (!best) fail(ErrorKind::Infeasible, "no recursion tree admits a feasible allocation");
    return *best;
}

std::string solution_to_json(const AllocationSolution& s) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"scheme\":\"" << scheme_name(s.scheme) << "\"";
    if (s.tree) {
        os << ",\"tree\":[";
        for (std::size_t i = 0; i < s.tree->parent.size(); ++i) os << (i ? "," : "") << s.tree->parent[i];
        os << "]";
    }
    os << ",\"n_shared\":" << s.profile.n_shared << ",\"n_two\":[";
    for (std::size_t i = 0; i < s.profile.n_two.size(); ++i) os << (i ? "," : "") << s.profile.n_two[i];
    os << "],\"predicted_variance\":" << s.predicted_variance << ",\"achieved_cost\":" << s.achieved_cost
       << ",\"budget\":" << s.budget << ",\"relaxed\":{\"n_shared\":" << s.relaxed_n_shared << ",\"n_two\":[";
    for (std::size_t i = 0; i < s.relaxed_n_two.size(); ++i) os << (i ? "," : "") << s.relaxed_n_two[i];
    os << "],\"variance\":" << s.relaxed_variance << "}";
    os << ",\"mc_fallback\":" << (s.mc_fallback ? "true" : "false")
       << ",\"convergence_warning\":" << (s.convergence_warning ? "true" : "false") << "}";
    return os.str();
}

} // namespace mftune
