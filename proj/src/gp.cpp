#include "mftune/gp.hpp"

#include "mftune/nelder_mead.hpp"
#include "mftune/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mftune {

namespace {

double se_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& theta) {
    int d = static_cast<int>(a.size());
    double s2 = std::exp(2.0 * theta(d));
    double q = 0.0;
    for (int k = 0; k < d; ++k) {
        double diff = (a(k) - b(k)) * std::exp(-theta(k));
        q += diff * diff;
    }
    return s2 * std::exp(-0.5 * q);
}

double negative_log_marginal(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                             bool fix_noise) {
    int n = static_cast<int>(X.rows());
    int d = static_cast<int>(X.cols());
    double noise2 = fix_noise ? 0.0 : std::exp(2.0 * theta(d + 1));
    double s2 = std::exp(2.0 * theta(d));

    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double v = se_kernel(X.row(i), X.row(j), theta);
            K(i, j) = v;
            K(j, i) = v;
        }
    K.diagonal().array() += noise2 + (fix_noise ? 1e-12 : 1e-10) * s2;

    Eigen::LLT<Eigen::MatrixXd> chol(K);
    if (chol.info() != Eigen::Success) return 1e30;
    Eigen::VectorXd a = chol.solve(y);
    double logdet = 0.0;
    for (int i = 0; i < n; ++i) logdet += std::log(chol.matrixLLT()(i, i));
    double nll = 0.5 * y.dot(a) + logdet + 0.5 * n * std::log(2.0 * 3.14159265358979323846);
    return std::isfinite(nll) ? nll : 1e30;
}

} // namespace

bool GaussianProcess::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpConfig& config) {
    int n = static_cast<int>(X.rows());
    int d = static_cast<int>(X.cols());
    fitted_ = false;
    if (n < 2) return false;

    y_mean_ = y.mean();
    Eigen::VectorXd yc = y.array() - y_mean_;
    y_scale_ = std::sqrt(yc.squaredNorm() / std::max(n - 1, 1));
    if (!(y_scale_ > 1e-300)) y_scale_ = 1.0;
    yc /= y_scale_;

    // Hyperparameter bounds keep the search away from flat likelihood plateaus.
    auto clamp_theta = [d](std::vector<double> t) {
        for (int k = 0; k < d; ++k) t[k] = std::clamp(t[k], std::log(0.01), std::log(10.0));
        t[d] = std::clamp(t[d], std::log(1e-3), std::log(10.0));
        t[d + 1] = std::clamp(t[d + 1], std::log(1e-6), std::log(2.0));
        return t;
    };
    auto objective = [&](const std::vector<double>& t_raw) {
        auto t = clamp_theta(t_raw);
        Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(t.data(), d + 2);
        return negative_log_marginal(X, yc, theta, config.fix_noise_to_zero);
    };

    Rng rng(derive_seed(config.seed, 0x69b0ULL));
    std::vector<std::vector<double>> starts;
    const double ell0[3] = {0.15, 0.5, 1.5};
    const double noise0[3] = {1e-2, 0.1, 0.4};
    for (int s = 0; s < std::max(config.mle_starts, 1); ++s) {
        std::vector<double> t(d + 2);
        for (int k = 0; k < d; ++k) t[k] = std::log(ell0[s % 3]) + 0.2 * rng.normal();
        t[d] = std::log(1.0) + 0.2 * rng.normal();
        t[d + 1] = std::log(noise0[(s / 3) % 3]) + 0.2 * rng.normal();
        starts.push_back(t);
    }
    NelderMeadOptions nm;
    nm.max_iterations = 300;
    nm.relative_tolerance = 1e-7;
    nm.initial_step = 0.4;
    auto best = nelder_mead_multistart(objective, starts, nm);
    if (best.value >= 1e29) return false;

    auto t = clamp_theta(best.x);
    theta_ = Eigen::Map<const Eigen::VectorXd>(t.data(), d + 2);
    if (config.fix_noise_to_zero) theta_(d + 1) = -std::numeric_limits<double>::infinity();

    X_ = X;
    y_centered_ = yc;
    double noise2 = config.fix_noise_to_zero ? 0.0 : std::exp(2.0 * theta_(d + 1));
    double s2 = std::exp(2.0 * theta_(d));
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double v = se_kernel(X.row(i), X.row(j), theta_);
            K(i, j) = v;
            K(j, i) = v;
        }
    K.diagonal().array() += noise2 + (config.fix_noise_to_zero ? 1e-12 : 1e-10) * s2;
    chol_.compute(K);
    if (chol_.info() != Eigen::Success) return false;
    alpha_ = chol_.solve(y_centered_);
    fitted_ = true;
    return true;
}

GaussianProcess::Prediction GaussianProcess::predict(const Eigen::VectorXd& x) const {
    Prediction out;
    if (!fitted_) return out;
    int n = static_cast<int>(X_.rows());
    int d = static_cast<int>(X_.cols());
    Eigen::VectorXd k(n);
    for (int i = 0; i < n; ++i) k(i) = se_kernel(X_.row(i), x, theta_);
    double mean = k.dot(alpha_);
    Eigen::VectorXd v = chol_.solve(k);
    double var = std::exp(2.0 * theta_(d)) - k.dot(v);
    out.mean = mean * y_scale_ + y_mean_;
    out.variance = std::max(var, 0.0) * y_scale_ * y_scale_;
    return out;
}

double expected_improvement(double mean, double variance, double best_observed) {
    double sd = std::sqrt(std::max(variance, 0.0));
    double delta = best_observed - mean;
    if (sd < 1e-300) return std::max(delta, 0.0);
    double z = delta / sd;
    double phi = std::exp(-0.5 * z * z) / 2.5066282746310005024;
    double Phi = 0.5 * std::erfc(-z / 1.4142135623730950488);
    double ei = delta * Phi + sd * phi;
    return std::max(ei, 0.0);
}

} // namespace mftune
