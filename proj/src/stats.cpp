#include "mftune/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mftune {

PilotSample draw_pilot(const ModelEnsemble& ensemble, const std::vector<double>& beta, int n_pilot,
                       std::uint64_t seed, CostLedger& ledger, CostTag tag) {
    if (n_pilot < 2) fail(ErrorKind::Domain, "pilot needs at least 2 samples");
    if (n_pilot < 10) std::cerr << "[mftune] warning: pilot of " << n_pilot << " samples gives rough statistics\n";
    Rng rng(derive_seed(seed, 0x9017ULL));
    auto points = ensemble.inputs.sample_batch(n_pilot, rng);
    return draw_pilot_at_points(ensemble, beta, points, seed, ledger, tag);
}

PilotSample draw_pilot_at_points(const ModelEnsemble& ensemble, const std::vector<double>& beta,
                                 const std::vector<Point>& points, std::uint64_t seed, CostLedger& ledger,
                                 CostTag tag) {
    PilotSample p;
    p.points = points;
    p.beta = beta;
    p.seed = seed;
    int n = static_cast<int>(points.size());
    int cols = static_cast<int>(ensemble.models.size());
    p.outputs.resize(n, cols);

    auto split = ensemble.split_beta(beta);
    double before = ledger.total();
    for (int m = 0; m < cols; ++m) {
        auto vals = ensemble.evaluate(m, split[m], points, ledger, tag);
        for (int i = 0; i < n; ++i) p.outputs(i, m) = vals[i];
    }
    p.cost = ledger.total() - before;
    return p;
}

ModelStats estimate_stats(const PilotSample& pilot) {
    int n = pilot.n();
    if (n < 2) fail(ErrorKind::Domain, "estimating statistics needs at least 2 pilot samples");
    int cols = pilot.num_models();
    int M = cols - 1;

    // Fixed summation order keeps results reproducible.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(cols);
    for (int i = 0; i < n; ++i)
        for (int m = 0; m < cols; ++m) mean(m) += pilot.outputs(i, m);
    mean /= static_cast<double>(n);

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(cols, cols);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < cols; ++a) {
            double da = pilot.outputs(i, a) - mean(a);
            for (int b = a; b < cols; ++b) cov(a, b) += da * (pilot.outputs(i, b) - mean(b));
        }
    cov /= static_cast<double>(n - 1);

    for (int m = 0; m < cols; ++m)
        if (!(cov(m, m) > 0.0))
            fail(ErrorKind::DegenerateStats, "model " + std::to_string(m) + " has a constant pilot column");

    ModelStats s;
    s.var_q = cov(0, 0);
    s.sigma.resize(M);
    s.rho.resize(M);
    s.P.resize(M, M);
    for (int i = 1; i <= M; ++i) {
        s.sigma(i - 1) = std::sqrt(cov(i, i));
        double r = cov(0, i) / std::sqrt(cov(0, 0) * cov(i, i));
        s.rho(i - 1) = std::clamp(r, -1.0, 1.0);
    }
    for (int i = 1; i <= M; ++i) {
        s.P(i - 1, i - 1) = 1.0;
        for (int j = i + 1; j <= M; ++j) {
            double r = cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
            r = std::clamp(r, -1.0, 1.0);
            s.P(i - 1, j - 1) = r;
            s.P(j - 1, i - 1) = r;
        }
    }
    return s;
}

PilotSample merge_pilots(const PilotSample& a, const PilotSample& b) {
    if (a.beta != b.beta) fail(ErrorKind::Domain, "cannot merge pilots drawn at different hyperparameters");
    if (a.outputs.cols() != b.outputs.cols()) fail(ErrorKind::Domain, "cannot merge pilots with different model counts");
    PilotSample out;
    out.beta = a.beta;
    out.seed = a.seed;
    out.cost = a.cost + b.cost;
    out.points = a.points;
    out.points.insert(out.points.end(), b.points.begin(), b.points.end());
    out.outputs.resize(a.outputs.rows() + b.outputs.rows(), a.outputs.cols());
    out.outputs.topRows(a.outputs.rows()) = a.outputs;
    out.outputs.bottomRows(b.outputs.rows()) = b.outputs;
    return out;
}

void write_pilot_csv(const std::string& path, const PilotSample& pilot) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    os.precision(17);
    os << "# seed=" << pilot.seed << " beta=";
    for (std::size_t i = 0; i < pilot.beta.size(); ++i) os << (i ? ";" : "") << pilot.beta[i];
    os << " cost=" << pilot.cost << "\n";
    int d = pilot.points.empty() ? 0 : static_cast<int>(pilot.points[0].size());
    for (int k = 0; k < d; ++k) os << "z" << k << ",";
    for (int m = 0; m < pilot.num_models(); ++m) os << (m ? "," : "") << "model" << m;
    os << "\n";
    for (int i = 0; i < pilot.n(); ++i) {
        for (int k = 0; k < d; ++k) os << pilot.points[i][k] << ",";
        for (int m = 0; m < pilot.num_models(); ++m) os << (m ? "," : "") << pilot.outputs(i, m);
        os << "\n";
    }
}

PilotSample read_pilot_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
    PilotSample p;
    std::string line;
    if (!std::getline(is, line) || line.rfind("# seed=", 0) != 0) fail(ErrorKind::Io, "bad pilot csv header");
    {
        std::istringstream hs(line.substr(2));
        std::string tok;
        while (hs >> tok) {
            if (tok.rfind("seed=", 0) == 0) p.seed = std::stoull(tok.substr(5));
            if (tok.rfind("beta=", 0) == 0) {
                std::istringstream bs(tok.substr(5));
                std::string val;
                while (std::getline(bs, val, ';'))
                    if (!val.empty()) p.beta.push_back(std::stod(val));
            }
            if (tok.rfind("cost=", 0) == 0) p.cost = std::stod(tok.substr(5));
        }
    }
    if (!std::getline(is, line)) fail(ErrorKind::Io, "missing pilot csv column header");
    int d = 0, cols = 0;
    {
        std::istringstream hs(line);
        std::string col;
        while (std::getline(hs, col, ',')) {
            if (col.rfind("z", 0) == 0) ++d;
            if (col.rfind("model", 0) == 0) ++cols;
        }
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> row;
        std::string val;
        while (std::getline(ls, val, ',')) row.push_back(std::stod(val));
        if (static_cast<int>(row.size()) != d + cols) fail(ErrorKind::Io, "pilot csv row has wrong arity");
        rows.push_back(std::move(row));
    }
    p.outputs.resize(rows.size(), cols);
    p.points.resize(rows.size(), Point(d));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int k = 0; k < d; ++k) p.points[i][k] = rows[i][k];
        for (int m = 0; m < cols; ++m) p.outputs(i, m) = rows[i][d + m];
    }
    return p;
}

} // namespace mftune
