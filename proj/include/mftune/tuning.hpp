#pragma once

#include "mftune/acv.hpp"
#include "mftune/allocation.hpp"
#include "mftune/gp.hpp"
#include "mftune/models.hpp"
#include "mftune/pilot.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mftune {

struct TuningConfig {
    double budget = 2000.0;
    int n_pilot = 50;
    int n_iter = 5;  // total evaluated candidates, initial design included
    int n_init = 0;  // 0 = automatic (3 in 1-D, 6 in 2-D, otherwise 3*d)
    Scheme scheme = Scheme::AcvMf;
    std::uint64_t seed = 7;

    // pipeline stage 2 (online allocation)
    double relaxation = 0.5;
    int max_rounds = 20;

    // Skip the optimization and run the pipeline at a fixed hyperparameter
    // vector (the hand-selected baseline path).
    bool skip_tuning = false;
    std::vector<double> fixed_beta;

    AllocationOptions allocation;

    int resolved_n_init(int dim) const;
    void validate(int dim) const;
};

// Trial-level pilot cache: the input points plus every hyperparameter-
// independent column (high-fidelity and fixed low-fidelity models) are
// evaluated once and shared across all candidate hyperparameters; only the
// tunable columns are re-evaluated per candidate.
class TrialPilotCache {
  public:
    TrialPilotCache(const ModelEnsemble& ensemble, int n_pilot, std::uint64_t seed, CostLedger& ledger);

    // Assembles the full pilot at `beta`. Tunable columns are evaluated fresh
    // and charged to `ledger` (the caller decides the tag); everything else is
    // reused from the cache at no extra charge.
    PilotSample pilot_at(const std::vector<double>& beta, CostLedger& ledger,
                         CostTag tag = CostTag::TuningOverhead) const;

    // Cost of the beta-independent columns (charged once at construction).
    double base_cost() const { return base_cost_; }
    // Pilot cost of one candidate's tunable columns.
    double tunable_cost(const std::vector<double>& beta) const;

    int n_pilot() const { return static_cast<int>(points_.size()); }
    const ModelEnsemble& ensemble() const { return ensemble_; }

  private:
    const ModelEnsemble& ensemble_;
    std::vector<Point> points_;
    std::vector<std::vector<double>> fixed_columns_; // [model] -> outputs (empty for tunable models)
    double base_cost_ = 0.0;
    std::uint64_t seed_ = 0;
};

struct ObjectiveValue {
    double value = 0.0;
    double projected_variance = 0.0;
    bool penalized = false;
    PilotSample pilot; // full pilot at the candidate (reusable if it wins)
};

// Inner objective of the bi-level problem: projected estimator variance of the
// pilot-projection allocation at `beta`, charging the candidate's tunable
// pilot columns. Degenerate statistics or an infeasible reuse constraint yield
// a large finite penalty instead of an exception.
ObjectiveValue tuning_objective(const TrialPilotCache& cache, const std::vector<double>& beta, double budget,
                                Scheme scheme, CostLedger& ledger, const AllocationOptions& options = {});

// Convenience overload drawing its own trial cache.
double tuning_objective(const ModelEnsemble& ensemble, const std::vector<double>& beta, double budget, int n_pilot,
                        Scheme scheme, std::uint64_t seed);

struct EgoPointRecord {
    std::vector<double> beta;
    double objective = 0.0;
    bool penalized = false;
    double cumulative_overhead = 0.0;
    Eigen::VectorXd gp_hyperparameters; // empty for initial-design points
};

struct EgoDataset {
    std::vector<EgoPointRecord> points;
};

struct TuningResult {
    std::vector<double> beta_star;
    double overhead = 0.0; // unreusable candidate pilot cost
    int best_index = -1;
    EgoDataset dataset;
    PilotSample pilot_at_star;
    bool gp_fallback_used = false;
};

// EGO over the tunable hyperparameters on log coordinates: maximin LHS initial
// design, then expected-improvement candidates until n_iter points total.
TuningResult ego_tune(const ModelEnsemble& ensemble, const TuningConfig& config, CostLedger& ledger);

// Full online pipeline: tune, re-allocate the remaining budget with the online
// pilot mode seeded by the winning candidate's pilot, evaluate the allocation
// reusing those samples, and assemble the estimator. `tuning_out`, when given,
// receives the tuning stage's result.
EstimatorReport run_pipeline(const ModelEnsemble& ensemble, const TuningConfig& config, CostLedger& ledger,
                             TuningResult* tuning_out = nullptr);

void write_tuning_trace_csv(const std::string& path, const TuningResult& result);
std::string tuning_result_to_json(const TuningResult& result);

} // namespace mftune
