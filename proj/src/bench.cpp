#include "mftune/bench.hpp"

#include "mftune/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mftune {

SolutionType parse_solution_type(const std::string& name) {
    if (name == "mc" || name == "monte_carlo") return SolutionType::MonteCarlo;
    if (name == "hand" || name == "hand_selected") return SolutionType::HandSelected;
    if (name == "best" || name == "best_case") return SolutionType::BestCase;
    if (name == "tuned") return SolutionType::Tuned;
    fail(ErrorKind::Config, "unknown solution type '" + name + "'");
}

std::string solution_type_name(SolutionType t) {
    switch (t) {
        case SolutionType::MonteCarlo: return "mc";
        case SolutionType::HandSelected: return "hand_selected";
        case SolutionType::BestCase: return "best_case";
        case SolutionType::Tuned: return "tuned";
    }
    return "?";
}

namespace {

TrialRecord record_from_report(const EstimatorReport& report) {
    TrialRecord r;
    r.qtilde = report.qtilde;
    r.predicted_variance = report.predicted_variance;
    r.cost_pilot = report.cost.pilot;
    r.cost_overhead = report.cost.tuning_overhead;
    r.cost_allocation = report.cost.allocation;
    r.cost_total = report.cost.total();
    r.beta = report.beta;
    r.exhausted = report.exhausted;
    return r;
}

} // namespace

TrialBatch run_baseline(SolutionType kind, const ModelEnsemble& ensemble, const BaselineConfig& config, int n_trial,
                        std::uint64_t base_seed) {
    if (n_trial < 1) fail(ErrorKind::Domain, "n_trial must be >= 1");
    TrialBatch batch;
    batch.type = kind;
    batch.budget = config.budget;
    batch.base_seed = base_seed;
    batch.trials.resize(n_trial);

    // Best-case oracle inputs are shared across trials: exact a-priori
    // statistics and a fixed optimal allocation, obtained offline.
    AllocationSolution oracle_solution;
    ModelStats oracle_stats;
    if (kind == SolutionType::BestCase) {
        if (config.oracle_beta.empty())
            fail(ErrorKind::Config, "best-case baseline needs oracle hyperparameters; run the variance grid first");
        CostLedger offline;
        auto off = run_offline(ensemble, config.oracle_beta, config.budget, config.scheme, config.n_offline_ref,
                               derive_seed(base_seed, 0x07acULL), offline, config.allocation);
        oracle_solution = off.solution;
        oracle_stats = off.stats;
    }

    parallel_for(config.jobs, static_cast<std::size_t>(n_trial), [&](std::size_t i) {
        std::uint64_t seed = derive_seed(base_seed, 0x7e1a1ULL, i);
        TrialRecord rec;
        CostLedger ledger;
        switch (kind) {
            case SolutionType::MonteCarlo: {
                long long n = static_cast<long long>(std::floor(config.budget));
                if (n < 1) fail(ErrorKind::Infeasible, "budget below one high-fidelity evaluation");
                Rng rng(derive_seed(seed, 0x3cULL));
                auto points = ensemble.inputs.sample_batch(static_cast<int>(n), rng);
                auto vals = ensemble.evaluate(0, {}, points, ledger, CostTag::Allocation);
                rec.qtilde = mc_estimate(vals);
                double mean = rec.qtilde, ss = 0.0;
                for (double v : vals) ss += (v - mean) * (v - mean);
                double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
                rec.predicted_variance = var / static_cast<double>(n);
                break;
            }
            case SolutionType::HandSelected: {
                TuningConfig tc;
                tc.budget = config.budget;
                tc.n_pilot = config.n_pilot;
                tc.n_iter = std::max(config.n_iter, 2);
                tc.scheme = config.scheme;
                tc.seed = seed;
                tc.relaxation = config.relaxation;
                tc.max_rounds = config.max_rounds;
                tc.skip_tuning = true;
                tc.fixed_beta = config.hand_beta;
                tc.allocation = config.allocation;
                rec = record_from_report(run_pipeline(ensemble, tc, ledger));
                break;
            }
            case SolutionType::BestCase: {
                auto report = run_estimator(ensemble, oracle_solution.profile, oracle_stats, config.oracle_beta,
                                            derive_seed(seed, 0xe7a1ULL), ledger, nullptr);
                rec = record_from_report(report);
                break;
            }
            case SolutionType::Tuned: {
                TuningConfig tc;
                tc.budget = config.budget;
                tc.n_pilot = config.n_pilot;
                tc.n_iter = config.n_iter;
                tc.n_init = config.n_init;
                tc.scheme = config.scheme;
                tc.seed = seed;
                tc.relaxation = config.relaxation;
                tc.max_rounds = config.max_rounds;
                tc.allocation = config.allocation;
                rec = record_from_report(run_pipeline(ensemble, tc, ledger));
                break;
            }
        }
        rec.trial = static_cast<int>(i);
        rec.seed = seed;
        if (rec.cost_total == 0.0) rec.cost_total = ledger.budgeted();
        if (rec.cost_allocation == 0.0 && kind == SolutionType::MonteCarlo)
            rec.cost_allocation = ledger.budgeted();
        batch.trials[i] = std::move(rec);
    });
    return batch;
}

double compute_mse(const TrialBatch& batch, double q_ref) {
    if (batch.trials.empty()) fail(ErrorKind::Domain, "mse of an empty batch");
    double s = 0.0;
    for (const auto& t : batch.trials) {
        double d = t.qtilde - q_ref;
        s += d * d;
    }
    return s / static_cast<double>(batch.trials.size());
}

double variance_reduction(double v_mc, double v_est) {
    if (!(v_mc > 0.0) || !(v_est > 0.0)) fail(ErrorKind::Domain, "variance reduction needs positive variances");
    return v_mc / v_est;
}

double VarianceGrid::interpolate(const std::vector<double>& beta) const {
    int dim = static_cast<int>(axes.size());
    if (static_cast<int>(beta.size()) != dim) fail(ErrorKind::Domain, "interpolation point has wrong dimension");

    // locate the cell and the fractional position on each (log) axis
    std::vector<int> lo(dim);
    std::vector<double> frac(dim);
    for (int k = 0; k < dim; ++k) {
        const auto& ax = axes[k];
        double x = std::log(std::clamp(beta[k], ax.front(), ax.back()));
        int j = 0;
        while (j + 2 < static_cast<int>(ax.size()) && std::log(ax[j + 1]) < x) ++j;
        lo[k] = j;
        double a = std::log(ax[j]), b = std::log(ax[j + 1]);
        frac[k] = b > a ? (x - a) / (b - a) : 0.0;
        frac[k] = std::clamp(frac[k], 0.0, 1.0);
    }

    // strides for the row-major value layout
    std::vector<long long> stride(dim, 1);
    for (int k = dim - 2; k >= 0; --k) stride[k] = stride[k + 1] * static_cast<long long>(axes[k + 1].size());

    double result = 0.0;
    for (int corner = 0; corner < (1 << dim); ++corner) {
        double w = 1.0;
        long long idx = 0;
        for (int k = 0; k < dim; ++k) {
            int up = (corner >> k) & 1;
            w *= up ? frac[k] : 1.0 - frac[k];
            idx += stride[k] * (lo[k] + up);
        }
        result += w * values[idx];
    }
    return result;
}

VarianceGrid build_variance_grid(const ModelEnsemble& ensemble, double budget, Scheme scheme, int points_per_dim,
                                 int n_ref, std::uint64_t seed, int jobs, const AllocationOptions& options) {
    auto bounds = ensemble.beta_bounds();
    int dim = static_cast<int>(bounds.size());
    if (dim == 0) fail(ErrorKind::Config, "variance grid needs at least one tunable hyperparameter");
    if (points_per_dim < 2) fail(ErrorKind::Config, "grid needs at least 2 points per dimension");

    VarianceGrid grid;
    grid.budget = budget;
    grid.axes.resize(dim);
    for (int k = 0; k < dim; ++k) {
        grid.axes[k].resize(points_per_dim);
        double lo = std::log(bounds[k].first), hi = std::log(bounds[k].second);
        for (int j = 0; j < points_per_dim; ++j)
            grid.axes[k][j] = std::exp(lo + (hi - lo) * j / (points_per_dim - 1));
    }

    long long total = 1;
    for (int k = 0; k < dim; ++k) total *= points_per_dim;
    grid.values.assign(total, 0.0);

    // One shared reference pilot: the same input points (and high-fidelity /
    // fixed-model columns) back every node, so the landscape is smooth in beta.
    CostLedger offline;
    TrialPilotCache cache(ensemble, n_ref, derive_seed(seed, 0x9610ULL), offline);

    parallel_for(jobs, static_cast<std::size_t>(total), [&](std::size_t node) {
        std::vector<double> beta(dim);
        long long rem = static_cast<long long>(node);
        for (int k = dim - 1; k >= 0; --k) {
            beta[k] = grid.axes[k][rem % points_per_dim];
            rem /= points_per_dim;
        }
        CostLedger scratch;
        auto pilot = cache.pilot_at(beta, scratch, CostTag::Offline);
        auto stats = estimate_stats(pilot);
        AllocationSolution sol;
        if (scheme == Scheme::Gmf) {
            sol = optimize_allocation_gmf(stats, ensemble.costs_at(beta), budget, options);
        } else {
            sol = optimize_allocation(stats, ensemble.costs_at(beta), budget, scheme, options);
        }
        grid.values[node] = sol.predicted_variance;
    });

    long long best = 0;
    for (long long i = 1; i < total; ++i)
        if (grid.values[i] < grid.values[best]) best = i;
    grid.argmin_value = grid.values[best];
    grid.argmin_beta.resize(dim);
    long long rem = best;
    for (int k = dim - 1; k >= 0; --k) {
        grid.argmin_beta[k] = grid.axes[k][rem % points_per_dim];
        rem /= points_per_dim;
    }
    return grid;
}

double tuned_variance_estimate(const VarianceGrid& grid, const std::vector<double>& beta_star, double overhead,
                               double budget) {
    if (overhead >= budget) fail(ErrorKind::Domain, "tuning overhead exceeds the budget");
    return grid.interpolate(beta_star) * budget / (budget - overhead);
}

void write_batch_csv(const std::string& path, const TrialBatch& batch) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    os.precision(17);
    os << "type,budget,trial,seed,qtilde,predicted_variance,cost_pilot,cost_overhead,cost_allocation,cost_total,"
          "exhausted,beta\n";
    for (const auto& t : batch.trials) {
        os << solution_type_name(batch.type) << "," << batch.budget << "," << t.trial << "," << t.seed << ","
           << t.qtilde << "," << t.predicted_variance << "," << t.cost_pilot << "," << t.cost_overhead << ","
           << t.cost_allocation << "," << t.cost_total << "," << (t.exhausted ? 1 : 0) << ",";
        for (std::size_t k = 0; k < t.beta.size(); ++k) os << (k ? ";" : "") << t.beta[k];
        os << "\n";
    }
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) fail(ErrorKind::Domain, "quantile of an empty sample");
    std::sort(values.begin(), values.end());
    double pos = q * (values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

std::string batch_summary_json(const TrialBatch& batch, double q_ref) {
    std::vector<double> sq;
    sq.reserve(batch.trials.size());
    for (const auto& t : batch.trials) {
        double d = t.qtilde - q_ref;
        sq.push_back(d * d);
    }
    std::ostringstream os;
    os.precision(17);
    os << "{\"type\":\"" << solution_type_name(batch.type) << "\",\"budget\":" << batch.budget
       << ",\"n_trial\":" << batch.trials.size() << ",\"mse\":" << compute_mse(batch, q_ref)
       << ",\"squared_error_quantiles\":{\"min\":" << quantile(sq, 0.0) << ",\"q1\":" << quantile(sq, 0.25)
       << ",\"median\":" << quantile(sq, 0.5) << ",\"q3\":" << quantile(sq, 0.75) << ",\"max\":" << quantile(sq, 1.0)
       << "}}";
    return os.str();
}

void write_grid_csv(const std::string& path, const VarianceGrid& grid) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    os.precision(17);
    int dim = static_cast<int>(grid.axes.size());
    for (int k = 0; k < dim; ++k) os << "beta" << k << ",";
    os << "variance\n";
    long long total = static_cast<long long>(grid.values.size());
    for (long long node = 0; node < total; ++node) {
        long long rem = node;
        std::vector<double> beta(dim);
        for (int k = dim - 1; k >= 0; --k) {
            beta[k] = grid.axes[k][rem % grid.axes[k].size()];
            rem /= grid.axes[k].size();
        }
        for (int k = 0; k < dim; ++k) os << beta[k] << ",";
        os << grid.values[node] << "\n";
    }
}

} // namespace mftune
