#pragma once

#include "mftune/ledger.hpp"
#include "mftune/models.hpp"
#include "mftune/sampleset.hpp"
#include "mftune/stats.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace mftune {

// Arithmetic mean of a nonempty list.
double mc_estimate(const std::vector<double>& values);

struct VarianceResult {
    double variance = 0.0;
    Eigen::VectorXd alpha;
    bool jitter_applied = false;
};

// Estimator variance under optimal weights,
//   Var = Var[Q]/N * (1 - [f o rho]^T [F o P]^{-1} [f o rho]),
// together with the weights themselves. N may be fractional during the
// continuous allocation search.
VarianceResult predicted_variance(const ModelStats& stats, const SchemeMatrices& matrices, double n_shared);

// Per-group model outputs: values[g][m] holds model m's outputs on group g and
// is empty when the model does not evaluate that group. Each participating
// model is evaluated exactly once per point; set means reuse these values.
struct GroupedOutputs {
    std::vector<std::vector<std::vector<double>>> values;
};

struct CostBreakdown {
    double pilot = 0.0;
    double tuning_overhead = 0.0;
    double allocation = 0.0;
    double total() const { return pilot + tuning_overhead + allocation; }
};

struct EstimatorReport {
    double qtilde = 0.0;
    Eigen::VectorXd alpha;
    double predicted_variance = 0.0;
    CostBreakdown cost;
    AllocationProfile profile;
    std::vector<double> beta;
    bool jitter_applied = false;
    bool exhausted = false;
};

// Combines the shared-set mean with the weighted difference estimators.
// Weights come from predicted_variance unless an override is supplied (the
// override reproduces fixed-weight conventions such as classical MLMC).
EstimatorReport assemble_estimator(const GroupedOutputs& outputs, const ModelStats& stats,
                                   const SchemeMatrices& matrices, const AllocationProfile& profile,
                                   const std::vector<double>& beta,
                                   const std::optional<Eigen::VectorXd>& alpha_override = std::nullopt);

// Materializes input points for every base group (reusing pilot points as the
// leading shared-set samples when given), evaluates each participating model
// once per group, and charges only the fresh evaluations.
GroupedOutputs evaluate_profile(const ModelEnsemble& ensemble, const AllocationProfile& profile,
                                const std::vector<double>& beta, std::uint64_t seed, CostLedger& ledger,
                                const PilotSample* reuse = nullptr, CostTag tag = CostTag::Allocation);

// evaluate_profile + compute_fF + assemble_estimator in one call.
EstimatorReport run_estimator(const ModelEnsemble& ensemble, const AllocationProfile& profile, const ModelStats& stats,
                              const std::vector<double>& beta, std::uint64_t seed, CostLedger& ledger,
                              const PilotSample* reuse = nullptr,
                              const std::optional<Eigen::VectorXd>& alpha_override = std::nullopt);

std::string report_to_json(const EstimatorReport& report);

} // namespace mftune
