#pragma once

#include "mftune/error.hpp"
#include "mftune/ledger.hpp"
#include "mftune/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace mftune {

using Point = std::vector<double>;

struct Distribution {
    enum class Kind { Uniform, Normal };
    Kind kind = Kind::Uniform;
    double a = 0.0; // lower bound / mean
    double b = 1.0; // upper bound / stddev

    double sample(Rng& rng) const;
    void validate() const;
};

struct InputSpec {
    std::vector<Distribution> dims;

    int dimension() const { return static_cast<int>(dims.size()); }
    void validate() const;
    Point sample(Rng& rng) const;
    std::vector<Point> sample_batch(int n, Rng& rng) const;
    // Latin hypercube sample mapped through each coordinate's distribution.
    std::vector<Point> sample_lhs(int n, Rng& rng) const;
};

struct ModelSpec {
    int id = 0;
    std::string name;
    bool tunable = false;
    std::vector<std::pair<double, double>> beta_bounds; // empty when fixed
    std::function<double(const Point&, const std::vector<double>&)> eval;
    std::function<double(const std::vector<double>&)> cost;

    int beta_dimension() const { return static_cast<int>(beta_bounds.size()); }
};

// One high-fidelity model (index 0, cost 1) plus M low-fidelity models.
struct ModelEnsemble {
    InputSpec inputs;
    std::vector<ModelSpec> models;

    int num_low_fidelity() const { return static_cast<int>(models.size()) - 1; }
    void validate() const;

    // Dispatch wrapper: bounds-checks beta, evaluates every point, verifies the
    // outputs are finite, and charges count * w_i(beta) to the ledger. Safe to
    // call concurrently on disjoint batches with per-caller ledgers.
    std::vector<double> evaluate(int model_id, const std::vector<double>& beta_i, const std::vector<Point>& points,
                                 CostLedger& ledger, CostTag tag = CostTag::Allocation) const;

    double model_cost(int model_id, const std::vector<double>& beta_i) const;

    // Collected hyperparameter vector over the tunable models, in model order.
    int beta_dimension() const;
    std::vector<std::pair<double, double>> beta_bounds() const;
    // Per-model slices of a collected vector (empty slice for fixed models).
    std::vector<std::vector<double>> split_beta(const std::vector<double>& collected) const;
    // Costs of all models at a collected beta, index 0 first.
    std::vector<double> costs_at(const std::vector<double>& collected) const;
};

enum class Qoi { TimeOfFlight, Downrange, SpeedAtHalfAltitude };

Qoi parse_qoi(const std::string& name);
std::string qoi_name(Qoi q);

// Synthetic four-model benchmark: a 2-D point-mass descent with quadratic drag
// and an exponential atmosphere, integrated by fixed-step RK4. The tunable
// knob of both low-fidelity physics models is the integration timestep.
struct BenchmarkConfig {
    std::string name = "ballistic2d";
    Qoi qoi = Qoi::TimeOfFlight;

    // Integrator. The timestep upper bound dt_hf * dt_max_factor keeps RK4
    // comfortably inside its stability region for the dynamics below (the
    // fastest drag rate is ~1 s^-1, far from the ~2.8/dt limit).
    double dt_hf = 0.001;
    double dt_max_factor = 250.0;
    double max_flight_time = 60.0;

    // Physics. reference_area_over_mass is A/m; the drag acceleration is
    // 0.5 * Cd * (A/m) * rho(h) * |v| * v with rho(h) = rho0 * exp(-h/H).
    double gravity = 9.81;
    double initial_altitude = 60.0;
    double scale_height = 25.0;
    double reference_area_over_mass = 0.01;

    // Uncertain inputs: speed (m/s), path angle (deg, negative = descending),
    // drag coefficient, surface density (kg/m^3). All uniform.
    double speed_lo = 32.0, speed_hi = 48.0;
    double angle_lo_deg = -46.0, angle_hi_deg = -22.0;
    double drag_coeff_lo = 0.92, drag_coeff_hi = 1.08;
    double density_lo = 1.15, density_hi = 1.30;

    // Cost model: w_i(dt) = c_i * dt_hf / dt (step-count law, not wall clock).
    double cost_scale_reduced_physics = 0.2;
    double cost_scale_coarse_timestep = 1.28;
    double surrogate_cost = 1e-5;

    // Hand-selected hyperparameters used by the fixed-model baselines.
    double hand_dt_reduced_physics = 0.001;
    double hand_dt_coarse_timestep = 0.1;

    // When true the reduced-physics model ships as a fixed model at its hand
    // timestep, leaving a single tunable hyperparameter.
    bool fix_reduced_physics = false;

    // Offline quadratic surrogate: least-squares fit to high-fidelity samples
    // drawn from the input box widened by training_box_scale. Training cost is
    // excluded from every ledger.
    int surrogate_training_samples = 500;
    double surrogate_training_box_scale = 6.0;
    std::uint64_t surrogate_training_seed = 20240817;
};

ModelEnsemble make_benchmark_ensemble(const BenchmarkConfig& config);

// Hand-analog collected beta for the benchmark (entries only for tunable models).
std::vector<double> benchmark_hand_beta(const BenchmarkConfig& config);

} // namespace mftune
