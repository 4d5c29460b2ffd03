#pragma once

#include "mftune/models.hpp"
#include "mftune/stats.hpp"

#include <vector>

namespace mftune::testing {

// Deterministic ensemble with closed-form statistics: Z ~ N(0,1),
//   Q0 = Z^2,  Q_i = Z^2 + c_i * Z.
// All moments follow from E[Z^3] = 0 and Var[Z^2] = 2:
//   Var[Q0] = 2, Cov(Q0,Qi) = 2, Var(Qi) = 2 + c_i^2, Cov(Qi,Qj) = 2 + c_i c_j.
ModelEnsemble make_analytic_ensemble(const std::vector<double>& perturbations, const std::vector<double>& lf_costs);

ModelStats exact_analytic_stats(const std::vector<double>& perturbations);

inline double analytic_expected_value() { return 1.0; } // E[Z^2]

} // namespace mftune::testing
