#include "mftune/tuning.hpp"

#include "mftune/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mftune {

int TuningConfig::resolved_n_init(int dim) const {
    if (n_init > 0) return n_init;
    if (dim == 1) return 3;
    if (dim == 2) return 6;
    return 3 * dim;
}

void TuningConfig::validate(int dim) const {
    if (budget <= 0.0) fail(ErrorKind::Config, "budget must be positive");
    if (n_pilot < 2) fail(ErrorKind::Config, "n_pilot must be >= 2");
    if (n_iter < 1) fail(ErrorKind::Config, "n_iter must be >= 1");
    int ninit = resolved_n_init(dim);
    if (ninit < 2) fail(ErrorKind::Config, "initial design needs at least 2 points");
    if (!skip_tuning && n_iter < ninit)
        fail(ErrorKind::Config, "n_iter counts all evaluated points and must be >= the initial design size " +
                                    std::to_string(ninit));
}

TrialPilotCache::TrialPilotCache(const ModelEnsemble& ensemble, int n_pilot, std::uint64_t seed, CostLedger& ledger)
    : ensemble_(ensemble), seed_(seed) {
    if (n_pilot < 2) fail(ErrorKind::Domain, "pilot needs at least 2 samples");
    Rng rng(derive_seed(seed, 0x9017ULL));
    points_ = ensemble.inputs.sample_batch(n_pilot, rng);

    fixed_columns_.resize(ensemble.models.size());
    double before = ledger.total();
    for (std::size_t m = 0; m < ensemble.models.size(); ++m) {
        if (ensemble.models[m].tunable) continue;
        fixed_columns_[m] = ensemble.evaluate(static_cast<int>(m), {}, points_, ledger, CostTag::Pilot);
    }
    base_cost_ = ledger.total() - before;
}

PilotSample TrialPilotCache::pilot_at(const std::vector<double>& beta, CostLedger& ledger, CostTag tag) const {
    auto split = ensemble_.split_beta(beta);
    PilotSample p;
    p.points = points_;
    p.beta = beta;
    p.seed = seed_;
    int n = static_cast<int>(points_.size());
    int cols = static_cast<int>(ensemble_.models.size());
    p.outputs.resize(n, cols);
    double spent = 0.0;
    for (int m = 0; m < cols; ++m) {
        if (ensemble_.models[m].tunable) {
            double before = ledger.total();
            auto vals = ensemble_.evaluate(m, split[m], points_, ledger, tag);
            spent += ledger.total() - before;
            for (int i = 0; i < n; ++i) p.outputs(i, m) = vals[i];
        } else {
            for (int i = 0; i < n; ++i) p.outputs(i, m) = fixed_columns_[m][i];
        }
    }
    p.cost = base_cost_ + spent;
    return p;
}

double TrialPilotCache::tunable_cost(const std::vector<double>& beta) const {
    auto split = ensemble_.split_beta(beta);
    double c = 0.0;
    for (std::size_t m = 0; m < ensemble_.models.size(); ++m)
        if (ensemble_.models[m].tunable) c += ensemble_.models[m].cost(split[m]) * n_pilot();
    return c;
}

ObjectiveValue tuning_objective(const TrialPilotCache& cache, const std::vector<double>& beta, double budget,
                                Scheme scheme, CostLedger& ledger, const AllocationOptions& options) {
    ObjectiveValue out;
    out.pilot = cache.pilot_at(beta, ledger);
    const auto& ensemble = cache.ensemble();
    try {
        auto stats = estimate_stats(out.pilot);
        AllocationOptions opts = options;
        opts.n_shared_floor = std::max<long long>(opts.n_shared_floor, cache.n_pilot());
        opts.per_model_floor = std::max<long long>(opts.per_model_floor, cache.n_pilot());
        AllocationSolution sol;
        if (scheme == Scheme::Gmf) {
            sol = optimize_allocation_gmf(stats, ensemble.costs_at(beta), budget, opts);
        } else {
            sol = optimize_allocation(stats, ensemble.costs_at(beta), budget, scheme, opts);
        }
        out.projected_variance = sol.predicted_variance;
        out.value = sol.predicted_variance;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateStats && e.kind() != ErrorKind::Infeasible &&
            e.kind() != ErrorKind::Singular)
            throw;
        // keep the outer loop well-defined on degenerate candidates
        double var_hint = 1.0;
        try {
            std::vector<double> hf(out.pilot.outputs.col(0).data(),
                                   out.pilot.outputs.col(0).data() + out.pilot.n());
            double mean = mc_estimate(hf);
            double v = 0.0;
            for (double q : hf) v += (q - mean) * (q - mean);
            var_hint = std::max(v / std::max(out.pilot.n() - 1, 1), 1e-12);
        } catch (...) {
        }
        out.value = 1e6 * var_hint;
        out.projected_variance = out.value;
        out.penalized = true;
    }
    return out;
}

double tuning_objective(const ModelEnsemble& ensemble, const std::vector<double>& beta, double budget, int n_pilot,
                        Scheme scheme, std::uint64_t seed) {
    CostLedger ledger;
    TrialPilotCache cache(ensemble, n_pilot, seed, ledger);
    return tuning_objective(cache, beta, budget, scheme, ledger).value;
}

namespace {

std::vector<double> from_unit(const std::vector<double>& x, const std::vector<std::pair<double, double>>& bounds) {
    std::vector<double> beta(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        double lo = std::log(bounds[k].first), hi = std::log(bounds[k].second);
        double u = std::clamp(x[k], 0.0, 1.0);
        beta[k] = std::exp(lo + (hi - lo) * u);
    }
    return beta;
}

} // namespace

TuningResult ego_tune(const ModelEnsemble& ensemble, const TuningConfig& config, CostLedger& ledger) {
    auto bounds = ensemble.beta_bounds();
    int dim = static_cast<int>(bounds.size());
    if (dim == 0) fail(ErrorKind::Config, "ensemble has no tunable hyperparameters");
    config.validate(dim);
    for (const auto& b : bounds)
        if (!(b.first > 0.0 && b.second > b.first))
            fail(ErrorKind::Config, "tuning expects positive hyperparameter bounds (log coordinates)");

    // Guard before any evaluation: even with every candidate at its cheapest
    // hyperparameters the overhead must fit the budget.
    {
        auto split_bounds = [&](bool upper) {
            std::vector<double> beta(dim);
            for (int k = 0; k < dim; ++k) beta[k] = upper ? bounds[k].second : bounds[k].first;
            return beta;
        };
        CostLedger scratch;
        double w_lo = 0.0;
        {
            auto s_lo = ensemble.split_beta(split_bounds(false));
            auto s_hi = ensemble.split_beta(split_bounds(true));
            for (std::size_t m = 0; m < ensemble.models.size(); ++m)
                if (ensemble.models[m].tunable)
                    w_lo += std::min(ensemble.models[m].cost(s_lo[m]), ensemble.models[m].cost(s_hi[m]));
        }
        (void)scratch;
        double optimistic = static_cast<double>(config.n_iter - 1) * config.n_pilot * w_lo;
        if (optimistic >= config.budget)
            fail(ErrorKind::Infeasible, "model tuning alone would consume the whole budget (lower bound " +
                                            std::to_string(optimistic) + " of " + std::to_string(config.budget) + ")");
    }

    TrialPilotCache cache(ensemble, config.n_pilot, config.seed, ledger);

    TuningResult result;
    std::vector<CostLedger> candidate_ledgers;
    std::vector<PilotSample> candidate_pilots;

    auto evaluate_candidate = [&](const std::vector<double>& beta, const Eigen::VectorXd& gp_params) {
        CostLedger cl;
        auto obj = tuning_objective(cache, beta, config.budget, config.scheme, cl, config.allocation);
        candidate_ledgers.push_back(cl);
        candidate_pilots.push_back(std::move(obj.pilot));
        EgoPointRecord rec;
        rec.beta = beta;
        rec.objective = obj.value;
        rec.penalized = obj.penalized;
        rec.gp_hyperparameters = gp_params;
        result.dataset.points.push_back(std::move(rec));
    };

    int n_init = config.resolved_n_init(dim);
    {
        Rng rng(derive_seed(config.seed, 0xde516ULL));
        auto design = maximin_latin_hypercube(n_init, dim, rng);
        for (const auto& x : design) evaluate_candidate(from_unit(x, bounds), {});
    }

    for (int t = n_init; t < config.n_iter; ++t) {
        // Fit the GP on unit-box coordinates of the evaluated candidates.
        int n = static_cast<int>(result.dataset.points.size());
        Eigen::MatrixXd X(n, dim);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < dim; ++k) {
                double lo = std::log(bounds[k].first), hi = std::log(bounds[k].second);
                X(i, k) = (std::log(result.dataset.points[i].beta[k]) - lo) / (hi - lo);
            }
            y(i) = result.dataset.points[i].objective;
        }

        GaussianProcess gp;
        GpConfig gc;
        gc.seed = derive_seed(config.seed, 0x69f1ULL, t);
        bool ok = gp.fit(X, y, gc);

        std::vector<double> next_x(dim);
        if (!ok) {
            std::cerr << "[mftune] warning: GP fit failed, falling back to a random candidate\n";
            result.gp_fallback_used = true;
            Rng rng(derive_seed(config.seed, 0xfa11ULL, t));
            for (int k = 0; k < dim; ++k) next_x[k] = rng.uniform01();
        } else {
            double best_y = y.minCoeff();
            auto neg_ei = [&](const std::vector<double>& xv) {
                Eigen::VectorXd x(dim);
                for (int k = 0; k < dim; ++k) x(k) = std::clamp(xv[k], 0.0, 1.0);
                auto pred = gp.predict(x);
                return -expected_improvement(pred.mean, pred.variance, best_y);
            };
            // dense quasi-random scan, then a short polish from the best few
            int n_candidates = 2048;
            std::vector<std::pair<double, std::vector<double>>> scored;
            scored.reserve(n_candidates);
            for (int c = 0; c < n_candidates; ++c) {
                auto x = halton_point(c + 1, dim);
                scored.emplace_back(neg_ei(x), x);
            }
            std::sort(scored.begin(), scored.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double best_val = scored[0].first;
            next_x = scored[0].second;
            NelderMeadOptions nm;
            nm.max_iterations = 120;
            nm.relative_tolerance = 1e-9;
            nm.initial_step = 0.05;
            for (int p = 0; p < std::min<int>(3, static_cast<int>(scored.size())); ++p) {
                auto r = nelder_mead(neg_ei, scored[p].second, nm);
                if (r.value < best_val) {
                    best_val = r.value;
                    next_x = r.x;
                    for (double& v : next_x) v = std::clamp(v, 0.0, 1.0);
                }
            }
        }
        evaluate_candidate(from_unit(next_x, bounds), ok ? gp.hyperparameters() : Eigen::VectorXd());
    }

    // argmin over the dataset; ties resolve to the earliest point
    int best = 0;
    for (int i = 1; i < static_cast<int>(result.dataset.points.size()); ++i)
        if (result.dataset.points[i].objective < result.dataset.points[best].objective) best = i;
    result.best_index = best;
    result.beta_star = result.dataset.points[best].beta;
    result.pilot_at_star = candidate_pilots[best];

    // Merge candidate ledgers: the winner's tunable columns are reusable pilot
    // cost, every other candidate's are overhead.
    double overhead = 0.0;
    for (std::size_t i = 0; i < candidate_ledgers.size(); ++i) {
        for (const auto& e : candidate_ledgers[i].entries()) {
            CostTag tag = static_cast<int>(i) == best ? CostTag::Pilot : CostTag::TuningOverhead;
            ledger.charge(e.model_id, e.count, e.unit_cost, tag, e.note);
            if (tag == CostTag::TuningOverhead) overhead += static_cast<double>(e.count) * e.unit_cost;
        }
        result.dataset.points[i].cumulative_overhead = overhead;
    }
    result.overhead = overhead;
    result.pilot_at_star.cost = cache.base_cost() + cache.tunable_cost(result.beta_star);
    return result;
}

EstimatorReport run_pipeline(const ModelEnsemble& ensemble, const TuningConfig& config, CostLedger& ledger,
                             TuningResult* tuning_out) {
    int dim = ensemble.beta_dimension();
    config.validate(dim);

    auto ledger_snapshot = [&ledger]() {
        std::ostringstream os;
        os << " [ledger: total=" << ledger.total() << " pilot=" << ledger.total_for(CostTag::Pilot)
           << " overhead=" << ledger.total_for(CostTag::TuningOverhead)
           << " allocation=" << ledger.total_for(CostTag::Allocation) << "]";
        return os.str();
    };

    std::vector<double> beta_star;
    double overhead = 0.0;
    PilotSample seed_pilot;
    if (config.skip_tuning) {
        if (static_cast<int>(config.fixed_beta.size()) != dim)
            fail(ErrorKind::Config, "skip_tuning requires fixed_beta of the ensemble's hyperparameter dimension");
        beta_star = config.fixed_beta;
        TrialPilotCache cache(ensemble, config.n_pilot, config.seed, ledger);
        seed_pilot = cache.pilot_at(beta_star, ledger, CostTag::Pilot);
        double per_point = 0.0;
        for (double w : ensemble.costs_at(beta_star)) per_point += w;
        if (static_cast<double>(config.n_pilot) * per_point >= config.budget)
            fail(ErrorKind::Infeasible, "pilot cost exceeds the budget" + ledger_snapshot());
    } else {
        auto tuning = ego_tune(ensemble, config, ledger);
        beta_star = tuning.beta_star;
        overhead = tuning.overhead;
        seed_pilot = tuning.pilot_at_star;
        if (tuning_out) *tuning_out = std::move(tuning);
    }

    double alloc_budget = config.budget - overhead;
    {
        double per_point = 0.0;
        for (double w : ensemble.costs_at(beta_star)) per_point += w;
        if (static_cast<double>(seed_pilot.n()) * per_point >= alloc_budget)
            fail(ErrorKind::Infeasible, "tuning overhead left no budget for estimation" + ledger_snapshot());
    }

    OnlineResult online;
    try {
        online = run_online_from(ensemble, std::move(seed_pilot), alloc_budget, config.scheme, config.relaxation,
                                 config.max_rounds, derive_seed(config.seed, 0x0511eULL), ledger, config.allocation);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Infeasible)
            fail(ErrorKind::Infeasible, std::string(e.what()) + ledger_snapshot());
        throw;
    }

    EstimatorReport report;
    if (online.solution.mc_fallback) {
        // plain MC on the shared set; the pilot's low-fidelity columns are sunk
        ModelStats mc_stats;
        mc_stats.var_q = online.stats.var_q;
        mc_stats.sigma.resize(0);
        mc_stats.rho.resize(0);
        mc_stats.P.resize(0, 0);
        report = run_estimator(ensemble, online.solution.profile, mc_stats, beta_star,
                               derive_seed(config.seed, 0xe7a1ULL), ledger, &online.pilot);
    } else {
        report = run_estimator(ensemble, online.solution.profile, online.stats, beta_star,
                               derive_seed(config.seed, 0xe7a1ULL), ledger, &online.pilot);
    }
    report.beta = beta_star;
    report.exhausted = online.exhausted;
    report.cost.pilot = ledger.total_for(CostTag::Pilot);
    report.cost.tuning_overhead = ledger.total_for(CostTag::TuningOverhead);
    report.cost.allocation = ledger.total_for(CostTag::Allocation);
    return report;
}

void write_tuning_trace_csv(const std::string& path, const TuningResult& result) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    os.precision(17);
    os << "iteration,";
    if (!result.dataset.points.empty())
        for (std::size_t k = 0; k < result.dataset.points[0].beta.size(); ++k) os << "beta" << k << ",";
    os << "objective,penalized,cumulative_overhead,gp_hyperparameters\n";
    for (std::size_t i = 0; i < result.dataset.points.size(); ++i) {
        const auto& p = result.dataset.points[i];
        os << i << ",";
        for (double b : p.beta) os << b << ",";
        os << p.objective << "," << (p.penalized ? 1 : 0) << "," << p.cumulative_overhead << ",";
        for (int k = 0; k < p.gp_hyperparameters.size(); ++k)
            os << (k ? ";" : "") << p.gp_hyperparameters(k);
        os << "\n";
    }
}

std::string tuning_result_to_json(const TuningResult& result) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"beta_star\":[";
    for (std::size_t i = 0; i < result.beta_star.size(); ++i) os << (i ? "," : "") << result.beta_star[i];
    os << "],\"overhead\":" << result.overhead << ",\"best_index\":" << result.best_index << ",\"points\":[";
    for (std::size_t i = 0; i < result.dataset.points.size(); ++i) {
        const auto& p = result.dataset.points[i];
        os << (i ? "," : "") << "{\"beta\":[";
        for (std::size_t k = 0; k < p.beta.size(); ++k) os << (k ? "," : "") << p.beta[k];
        os << "],\"objective\":" << p.objective << ",\"penalized\":" << (p.penalized ? "true" : "false")
           << ",\"cumulative_overhead\":" << p.cumulative_overhead << "}";
    }
    os << "],\"gp_fallback_used\":" << (result.gp_fallback_used ? "true" : "false") << "}";
    return os.str();
}

} // namespace mftune
