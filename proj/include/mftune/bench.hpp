#pragma once

#include "mftune/allocation.hpp"
#include "mftune/models.hpp"
#include "mftune/tuning.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mftune {

enum class SolutionType { MonteCarlo, HandSelected, BestCase, Tuned };

SolutionType parse_solution_type(const std::string& name);
std::string solution_type_name(SolutionType t);

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    double qtilde = 0.0;
    double predicted_variance = 0.0;
    double cost_pilot = 0.0;
    double cost_overhead = 0.0;
    double cost_allocation = 0.0;
    double cost_total = 0.0;
    std::vector<double> beta;
    bool exhausted = false;
};

struct TrialBatch {
    SolutionType type = SolutionType::MonteCarlo;
    double budget = 0.0;
    std::uint64_t base_seed = 0;
    std::vector<TrialRecord> trials;
};

struct BaselineConfig {
    double budget = 2000.0;
    int n_pilot = 50;
    int n_iter = 5;
    int n_init = 0;
    Scheme scheme = Scheme::AcvMf;
    std::vector<double> hand_beta;   // HandSelected
    std::vector<double> oracle_beta; // BestCase; fails if missing
    int n_offline_ref = 10000;
    double relaxation = 0.5;
    int max_rounds = 20;
    AllocationOptions allocation;
    int jobs = 1;
};

// One batch of independent trials of a solution type. Trials use seeds derived
// from base_seed by index, so results do not depend on the job count.
TrialBatch run_baseline(SolutionType kind, const ModelEnsemble& ensemble, const BaselineConfig& config, int n_trial,
                        std::uint64_t base_seed);

// Mean squared deviation of the trial estimates from a reference value.
double compute_mse(const TrialBatch& batch, double q_ref);

// Ratio of MC variance to estimator variance at equal budget.
double variance_reduction(double v_mc, double v_est);

// Oracle variance landscape over the tunable hyperparameters: per grid node an
// offline-pilot allocation optimization, sharing one reference pilot's input
// points across nodes.
struct VarianceGrid {
    std::vector<std::vector<double>> axes; // per-dimension node coordinates (hyperparameter values)
    std::vector<double> values;            // row-major over axes
    std::vector<double> argmin_beta;
    double argmin_value = 0.0;
    double budget = 0.0;

    // Multilinear interpolation on log coordinates, exact at the nodes.
    double interpolate(const std::vector<double>& beta) const;
};

VarianceGrid build_variance_grid(const ModelEnsemble& ensemble, double budget, Scheme scheme, int points_per_dim,
                                 int n_ref, std::uint64_t seed, int jobs = 1,
                                 const AllocationOptions& options = {});

// Overhead-aware oracle variance of a tuned solution: the interpolated value
// scaled by budget / (budget - overhead).
double tuned_variance_estimate(const VarianceGrid& grid, const std::vector<double>& beta_star, double overhead,
                               double budget);

void write_batch_csv(const std::string& path, const TrialBatch& batch);
std::string batch_summary_json(const TrialBatch& batch, double q_ref);
void write_grid_csv(const std::string& path, const VarianceGrid& grid);

// Quantiles of a copy of the data (linear interpolation between order stats).
double quantile(std::vector<double> values, double q);

} // namespace mftune
