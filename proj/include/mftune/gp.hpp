#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace mftune {

struct GpConfig {
    int mle_starts = 5;
    bool fix_noise_to_zero = false;
    std::uint64_t seed = 0;
};

// Squared-exponential GP with per-dimension length scales, constant (centered)
// mean, and jointly estimated observation noise. Hyperparameters by multistart
// maximum likelihood over log coordinates.
class GaussianProcess {
  public:
    // X: one row per point, ideally scaled to the unit box. Returns false when
    // every likelihood evaluation failed; the model is unusable then.
    bool fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpConfig& config = {});

    struct Prediction {
        double mean = 0.0;
        double variance = 0.0; // latent (noise-free) posterior variance
    };
    Prediction predict(const Eigen::VectorXd& x) const;

    // log(length scales...), log(signal sd), log(noise sd)
    const Eigen::VectorXd& hyperparameters() const { return theta_; }
    bool fitted() const { return fitted_; }

  private:
    Eigen::MatrixXd X_;
    Eigen::VectorXd y_centered_;
    Eigen::VectorXd alpha_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::VectorXd theta_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    bool fitted_ = false;

    double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
};

// Expected improvement for minimization, given the posterior at a candidate
// and the best (lowest) observed value.
double expected_improvement(double mean, double variance, double best_observed);

} // namespace mftune
