#include "mftune/acv.hpp"

#include <cmath>
#include <sstream>

namespace mftune {

double mc_estimate(const std::vector<double>& values) {
    if (values.empty()) fail(ErrorKind::Domain, "mc_estimate on an empty sample");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

VarianceResult predicted_variance(const ModelStats& stats, const SchemeMatrices& matrices, double n_shared) {
    if (!(n_shared >= 1.0)) fail(ErrorKind::Domain, "predicted_variance needs N >= 1");
    int M = stats.num_low_fidelity();
    if (matrices.f.size() != M) fail(ErrorKind::Domain, "scheme matrices do not match the statistics dimension");

    VarianceResult out;
    out.alpha = Eigen::VectorXd::Zero(M);
    if (M == 0) {
        out.variance = stats.var_q / n_shared;
        return out;
    }

    Eigen::MatrixXd B = matrices.F.cwiseProduct(stats.P);
    Eigen::VectorXd a = matrices.f.cwiseProduct(stats.rho);

    auto solve = [&](const Eigen::MatrixXd& mat) -> std::optional<Eigen::VectorXd> {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(mat);
        if (ldlt.info() != Eigen::Success) return std::nullopt;
        Eigen::VectorXd d = ldlt.vectorD();
        double dmax = d.cwiseAbs().maxCoeff();
        double dmin = d.cwiseAbs().minCoeff();
        if (!(dmax > 0.0) || dmin < 1e-12 * dmax) return std::nullopt;
        Eigen::VectorXd y = ldlt.solve(a);
        if (!y.allFinite()) return std::nullopt;
        return y;
    };

    std::optional<Eigen::VectorXd> y = solve(B);
    if (!y) {
        out.jitter_applied = true;
        Eigen::MatrixXd Bj = B + 1e-10 * Eigen::MatrixXd::Identity(M, M);
        y = solve(Bj);
        if (!y) fail(ErrorKind::Singular, "F o P is singular beyond the jitter policy");
    }

    double q = a.dot(*y);
    double var = stats.var_q / n_shared * (1.0 - q);
    double floor = -1e-12 * stats.var_q / n_shared;
    if (var < floor)
        fail(ErrorKind::Numerical, "predicted variance " + std::to_string(var) + " is negative beyond tolerance");
    out.variance = std::max(var, 0.0);
    for (int i = 0; i < M; ++i) out.alpha(i) = -std::sqrt(stats.var_q) * (*y)(i) / stats.sigma(i);
    return out;
}

EstimatorReport assemble_estimator(const GroupedOutputs& outputs, const ModelStats& stats,
                                   const SchemeMatrices& matrices, const AllocationProfile& profile,
                                   const std::vector<double>& beta,
                                   const std::optional<Eigen::VectorXd>& alpha_override) {
    const auto& g = profile.groups;
    int M = profile.num_models();
    if (outputs.values.size() != g.sizes.size()) fail(ErrorKind::Assembly, "outputs do not cover every base group");

    // Per-set sums from group sums, in fixed group order.
    auto set_mean = [&](int set, int model) {
        std::uint64_t bit = std::uint64_t{1} << set;
        double sum = 0.0;
        long long count = 0;
        for (std::size_t gi = 0; gi < g.sizes.size(); ++gi) {
            if (!(g.member_of[gi] & bit)) continue;
            if (static_cast<int>(outputs.values[gi].size()) <= model || outputs.values[gi][model].empty())
                fail(ErrorKind::Assembly,
                     "missing outputs of model " + std::to_string(model) + " on group " + std::to_string(gi));
            const auto& vals = outputs.values[gi][model];
            if (static_cast<long long>(vals.size()) != g.sizes[gi])
                fail(ErrorKind::Assembly, "output count does not match group size");
            for (double v : vals) sum += v;
            count += g.sizes[gi];
        }
        if (count == 0) fail(ErrorKind::Assembly, "empty set in assembly");
        return sum / static_cast<double>(count);
    };

    EstimatorReport report;
    report.profile = profile;
    report.beta = beta;

    VarianceResult vr = predicted_variance(stats, matrices, static_cast<double>(profile.n_shared));
    report.predicted_variance = vr.variance;
    report.jitter_applied = vr.jitter_applied;
    report.alpha = alpha_override ? *alpha_override : vr.alpha;
    if (report.alpha.size() != M) fail(ErrorKind::Assembly, "weight vector has wrong dimension");

    double q = set_mean(0, 0);
    for (int i = 1; i <= M; ++i) {
        double delta = set_mean(g.set_one(i), i) - set_mean(g.set_two(i), i);
        q += report.alpha(i - 1) * delta;
    }
    report.qtilde = q;
    return report;
}

GroupedOutputs evaluate_profile(const ModelEnsemble& ensemble, const AllocationProfile& profile,
                                const std::vector<double>& beta, std::uint64_t seed, CostLedger& ledger,
                                const PilotSample* reuse, CostTag tag) {
    const auto& g = profile.groups;
    int M = profile.num_models();
    if (M != 0 && M != ensemble.num_low_fidelity())
        fail(ErrorKind::Domain, "profile model count does not match the ensemble");
    if (reuse && reuse->beta != beta)
        fail(ErrorKind::Assembly, "pilot cache was drawn at different hyperparameters");

    auto split = ensemble.split_beta(beta);

    // Materialize points per group. Pilot points occupy the leading slots of
    // the shared set's groups, in group order.
    std::vector<std::vector<Point>> pts(g.sizes.size());
    std::vector<long long> pilot_backed(g.sizes.size(), 0);
    std::vector<long long> pilot_offset(g.sizes.size(), 0);
    long long pilot_left = reuse ? reuse->n() : 0;
    long long pilot_at = 0;
    for (std::size_t gi = 0; gi < g.sizes.size(); ++gi) {
        long long size = g.sizes[gi];
        bool in_shared = g.member_of[gi] & 1ULL;
        Rng rng(derive_seed(seed, 0x9209ULL, gi));
        pts[gi].reserve(size);
        if (in_shared && pilot_left > 0) {
            long long take = std::min(pilot_left, size);
            pilot_offset[gi] = pilot_at;
            for (long long i = 0; i < take; ++i) pts[gi].push_back(reuse->points[pilot_at + i]);
            pilot_backed[gi] = take;
            pilot_left -= take;
            pilot_at += take;
        }
        while (static_cast<long long>(pts[gi].size()) < size) pts[gi].push_back(ensemble.inputs.sample(rng));
    }
    if (pilot_left > 0) fail(ErrorKind::Assembly, "pilot cache is larger than the shared sample set");

    GroupedOutputs out;
    out.values.assign(g.sizes.size(), std::vector<std::vector<double>>(M + 1));
    for (std::size_t gi = 0; gi < g.sizes.size(); ++gi) {
        for (int m = 0; m <= M; ++m) {
            std::uint64_t mask = m == 0 ? 1ULL
                                        : (std::uint64_t{1} << g.set_one(m)) | (std::uint64_t{1} << g.set_two(m));
            if (!(g.member_of[gi] & mask)) continue;
            long long cached = pilot_backed[gi];
            std::vector<double>& slot = out.values[gi][m];
            slot.reserve(pts[gi].size());
            for (long long i = 0; i < cached; ++i) slot.push_back(reuse->outputs(pilot_offset[gi] + i, m));
            if (cached < static_cast<long long>(pts[gi].size())) {
                std::vector<Point> fresh(pts[gi].begin() + cached, pts[gi].end());
                auto vals = ensemble.evaluate(m, split[m], fresh, ledger, tag);
                slot.insert(slot.end(), vals.begin(), vals.end());
            }
        }
    }
    return out;
}

EstimatorReport run_estimator(const ModelEnsemble& ensemble, const AllocationProfile& profile, const ModelStats& stats,
                              const std::vector<double>& beta, std::uint64_t seed, CostLedger& ledger,
                              const PilotSample* reuse, const std::optional<Eigen::VectorXd>& alpha_override) {
    auto outputs = evaluate_profile(ensemble, profile, beta, seed, ledger, reuse);
    auto matrices = compute_fF(profile);
    auto report = assemble_estimator(outputs, stats, matrices, profile, beta, alpha_override);
    report.cost.allocation = profile.cost(ensemble.costs_at(beta));
    return report;
}

std::string report_to_json(const EstimatorReport& report) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"qtilde\":" << report.qtilde << ",\"alpha\":[";
    for (int i = 0; i < report.alpha.size(); ++i) os << (i ? "," : "") << report.alpha(i);
    os << "],\"predicted_variance\":" << report.predicted_variance;
    os << ",\"cost\":{\"pilot\":" << report.cost.pilot << ",\"tuning_overhead\":" << report.cost.tuning_overhead
       << ",\"allocation\":" << report.cost.allocation << ",\"total\":" << report.cost.total() << "}";
    os << ",\"beta\":[";
    for (std::size_t i = 0; i < report.beta.size(); ++i) os << (i ? "," : "") << report.beta[i];
    os << "],\"jitter_applied\":" << (report.jitter_applied ? "true" : "false")
       << ",\"exhausted\":" << (report.exhausted ? "true" : "false");
    os << ",\"profile\":" << profile_to_json(report.profile) << "}";
    return os.str();
}

} // namespace mftune
