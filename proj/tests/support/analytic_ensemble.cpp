#include "support/analytic_ensemble.hpp"

#include <cmath>

namespace mftune::testing {

ModelEnsemble make_analytic_ensemble(const std::vector<double>& perturbations, const std::vector<double>& lf_costs) {
    if (perturbations.size() != lf_costs.size()) throw std::invalid_argument("perturbations/costs size mismatch");
    ModelEnsemble e;
    e.inputs.dims = {{Distribution::Kind::Normal, 0.0, 1.0}};

    ModelSpec hf;
    hf.id = 0;
    hf.name = "square";
    hf.eval = [](const Point& z, const std::vector<double>&) { return z[0] * z[0]; };
    hf.cost = [](const std::vector<double>&) { return 1.0; };
    e.models.push_back(hf);

    for (std::size_t i = 0; i < perturbations.size(); ++i) {
        ModelSpec lf;
        lf.id = static_cast<int>(i) + 1;
        lf.name = "square_plus_" + std::to_string(perturbations[i]);
        lf.eval = [c = perturbations[i]](const Point& z, const std::vector<double>&) { return z[0] * z[0] + c * z[0]; };
        lf.cost = [w = lf_costs[i]](const std::vector<double>&) { return w; };
        e.models.push_back(lf);
    }
    e.validate();
    return e;
}

ModelStats exact_analytic_stats(const std::vector<double>& perturbations) {
    int M = static_cast<int>(perturbations.size());
    ModelStats s;
    s.var_q = 2.0;
    s.sigma.resize(M);
    s.rho.resize(M);
    s.P.resize(M, M);
    for (int i = 0; i < M; ++i) {
        double ci = perturbations[i];
        s.sigma(i) = std::sqrt(2.0 + ci * ci);
        s.rho(i) = 2.0 / std::sqrt(2.0 * (2.0 + ci * ci));
        for (int j = 0; j < M; ++j) {
            double cj = perturbations[j];
            s.P(i, j) = (2.0 + ci * cj) / std::sqrt((2.0 + ci * ci) * (2.0 + cj * cj));
        }
    }
    return s;
}

} // namespace mftune::testing
