#pragma once

#include "mftune/ledger.hpp"
#include "mftune/models.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace mftune {

// Shared-input pilot: every model evaluated on the same points.
struct PilotSample {
    std::vector<Point> points;
    Eigen::MatrixXd outputs; // n x (M+1); column m belongs to model m
    std::vector<double> beta; // collected hyperparameters of the low-fidelity columns
    std::uint64_t seed = 0;
    double cost = 0.0;

    int n() const { return static_cast<int>(outputs.rows()); }
    int num_models() const { return static_cast<int>(outputs.cols()); }
};

struct ModelStats {
    double var_q = 0.0;      // Var[Q] of the high-fidelity model
    Eigen::VectorXd sigma;   // low-fidelity standard deviations
    Eigen::VectorXd rho;     // correlations with the high-fidelity model
    Eigen::MatrixXd P;       // correlations among low-fidelity models

    int num_low_fidelity() const { return static_cast<int>(rho.size()); }
};

// Draws n_pilot fresh input points and evaluates every model on them.
// Deterministic given the seed; charges n_pilot * (1 + sum_i w_i(beta_i)).
PilotSample draw_pilot(const ModelEnsemble& ensemble, const std::vector<double>& beta, int n_pilot,
                       std::uint64_t seed, CostLedger& ledger, CostTag tag = CostTag::Pilot);

// Same, but on caller-supplied points (used when growing an existing pilot).
PilotSample draw_pilot_at_points(const ModelEnsemble& ensemble, const std::vector<double>& beta,
                                 const std::vector<Point>& points, std::uint64_t seed, CostLedger& ledger,
                                 CostTag tag = CostTag::Pilot);

// Unbiased sample variance (divisor n-1) and Pearson correlations; P comes out
// symmetric with a unit diagonal. A constant column is a degenerate-statistics
// error naming the model.
ModelStats estimate_stats(const PilotSample& pilot);

// Concatenation of two pilots drawn at the same beta.
PilotSample merge_pilots(const PilotSample& a, const PilotSample& b);

void write_pilot_csv(const std::string& path, const PilotSample& pilot);
PilotSample read_pilot_csv(const std::string& path);

} // namespace mftune
