#include "mftune/models.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <sstream>

namespace mftune {

double Distribution::sample(Rng& rng) const {
    if (kind == Kind::Uniform) return rng.uniform(a, b);
    return rng.normal(a, b);
}

void Distribution::validate() const {
    if (kind == Kind::Uniform && !(a < b)) fail(ErrorKind::Config, "uniform distribution requires a < b");
    if (kind == Kind::Normal && !(b > 0.0)) fail(ErrorKind::Config, "normal distribution requires sigma > 0");
}

void InputSpec::validate() const {
    if (dims.empty()) fail(ErrorKind::Config, "input dimension must be >= 1");
    for (const auto& d : dims) d.validate();
}

Point InputSpec::sample(Rng& rng) const {
    Point p(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) p[k] = dims[k].sample(rng);
    return p;
}

std::vector<Point> InputSpec::sample_batch(int n, Rng& rng) const {
    std::vector<Point> pts(n);
    for (int i = 0; i < n; ++i) pts[i] = sample(rng);
    return pts;
}

std::vector<Point> InputSpec::sample_lhs(int n, Rng& rng) const {
    auto unit = latin_hypercube(n, dimension(), rng);
    std::vector<Point> pts(n, Point(dims.size()));
    for (int i = 0; i < n; ++i)
        for (std::size_t k = 0; k < dims.size(); ++k) {
            const auto& d = dims[k];
            if (d.kind == Distribution::Kind::Uniform) {
                pts[i][k] = d.a + (d.b - d.a) * unit[i][k];
            } else {
                pts[i][k] = d.a + d.b * normal_quantile(unit[i][k]);
            }
        }
    return pts;
}

void ModelEnsemble::validate() const {
    inputs.validate();
    if (models.size() < 2) fail(ErrorKind::Config, "ensemble needs one high-fidelity and at least one low-fidelity model");
    if (models[0].tunable || !models[0].beta_bounds.empty())
        fail(ErrorKind::Config, "the high-fidelity model is fixed and not tunable");
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (models[i].id != static_cast<int>(i)) fail(ErrorKind::Config, "model ids must be 0..M in order");
        if (!models[i].eval || !models[i].cost) fail(ErrorKind::Config, "model is missing eval or cost handle");
        if (models[i].tunable == models[i].beta_bounds.empty())
            fail(ErrorKind::Config, "tunable flag must match hyperparameter bounds");
    }
}

std::vector<double> ModelEnsemble::evaluate(int model_id, const std::vector<double>& beta_i,
                                            const std::vector<Point>& points, CostLedger& ledger, CostTag tag) const {
    if (model_id < 0 || model_id >= static_cast<int>(models.size()))
        fail(ErrorKind::Domain, "model id " + std::to_string(model_id) + " out of range");
    const ModelSpec& m = models[model_id];
    if (static_cast<int>(beta_i.size()) != m.beta_dimension())
        fail(ErrorKind::Domain, "model " + m.name + " expects " + std::to_string(m.beta_dimension()) +
                                    " hyperparameters, got " + std::to_string(beta_i.size()));
    for (std::size_t k = 0; k < beta_i.size(); ++k) {
        if (beta_i[k] < m.beta_bounds[k].first || beta_i[k] > m.beta_bounds[k].second) {
            std::ostringstream os;
            os << "hyperparameter " << k << " of model " << m.name << " out of bounds: " << beta_i[k] << " not in ["
               << m.beta_bounds[k].first << ", " << m.beta_bounds[k].second << "]";
            fail(ErrorKind::Domain, os.str());
        }
    }

    std::vector<double> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        out[i] = m.eval(points[i], beta_i);
        if (!std::isfinite(out[i])) {
            std::ostringstream os;
            os << "model " << m.name << " produced a non-finite value at point " << i << " = (";
            for (std::size_t k = 0; k < points[i].size(); ++k) os << (k ? ", " : "") << points[i][k];
            os << ")";
            fail(ErrorKind::Evaluation, os.str());
        }
    }
    ledger.charge(model_id, points.size(), m.cost(beta_i), tag, m.name);
    return out;
}

double ModelEnsemble::model_cost(int model_id, const std::vector<double>& beta_i) const {
    return models.at(model_id).cost(beta_i);
}

int ModelEnsemble::beta_dimension() const {
    int d = 0;
    for (const auto& m : models) d += m.beta_dimension();
    return d;
}

std::vector<std::pair<double, double>> ModelEnsemble::beta_bounds() const {
    std::vector<std::pair<double, double>> b;
    for (const auto& m : models)
        for (const auto& bb : m.beta_bounds) b.push_back(bb);
    return b;
}

std::vector<std::vector<double>> ModelEnsemble::split_beta(const std::vector<double>& collected) const {
    if (static_cast<int>(collected.size()) != beta_dimension())
        fail(ErrorKind::Domain, "collected beta has dimension " + std::to_string(collected.size()) + ", expected " +
                                    std::to_string(beta_dimension()));
    std::vector<std::vector<double>> split(models.size());
    std::size_t at = 0;
    for (std::size_t i = 0; i < models.size(); ++i) {
        int d = models[i].beta_dimension();
        split[i].assign(collected.begin() + at, collected.begin() + at + d);
        at += d;
    }
    return split;
}

std::vector<double> ModelEnsemble::costs_at(const std::vector<double>& collected) const {
    auto split = split_beta(collected);
    std::vector<double> w(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) w[i] = models[i].cost(split[i]);
    return w;
}

Qoi parse_qoi(const std::string& name) {
    if (name == "time_of_flight" || name == "tof") return Qoi::TimeOfFlight;
    if (name == "downrange") return Qoi::Downrange;
    if (name == "speed_at_half_altitude" || name == "speed") return Qoi::SpeedAtHalfAltitude;
    fail(ErrorKind::Config, "unknown qoi '" + name + "'");
}

std::string qoi_name(Qoi q) {
    switch (q) {
        case Qoi::TimeOfFlight: return "time_of_flight";
        case Qoi::Downrange: return "downrange";
        case Qoi::SpeedAtHalfAltitude: return "speed_at_half_altitude";
    }
    return "?";
}

namespace {

struct TrajectoryParams {
    double dt;
    bool constant_density;
    double gravity;
    double h0;
    double scale_height;
    double area_over_mass;
    double max_time;
    Qoi qoi;
};

// State: (x, h, vx, vh). Event detection happens at step boundaries, so the
// QoI carries a deliberate O(dt) discretization component; that is the signal
// the coarse-timestep model trades away for speed.
double integrate_trajectory(const Point& z, const TrajectoryParams& p) {
    const double v0 = z[0];
    const double gamma = z[1]; // radians
    const double cd = z[2];
    const double rho0 = z[3];
    const double k = 0.5 * cd * p.area_over_mass;

    double x = 0.0, h = p.h0;
    double vx = v0 * std::cos(gamma), vh = v0 * std::sin(gamma);

    auto deriv = [&](double state[4], double out[4]) {
        double rho = p.constant_density ? rho0 : rho0 * std::exp(-state[1] / p.scale_height);
        double speed = std::sqrt(state[2] * state[2] + state[3] * state[3]);
        double drag = k * rho * speed;
        out[0] = state[2];
        out[1] = state[3];
        out[2] = -drag * state[2];
        out[3] = -p.gravity - drag * state[3];
    };

    const double half_h = 0.5 * p.h0;
    const double dt = p.dt;
    double t = 0.0;
    long long step = 0;
    const long long max_steps = static_cast<long long>(p.max_time / dt) + 1;

    while (step < max_steps) {
        double s[4] = {x, h, vx, vh};
        double k1[4], k2[4], k3[4], k4[4], tmp[4];
        deriv(s, k1);
        for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * dt * k1[i];
        deriv(tmp, k2);
        for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * dt * k2[i];
        deriv(tmp, k3);
        for (int i = 0; i < 4; ++i) tmp[i] = s[i] + dt * k3[i];
        deriv(tmp, k4);
        x = s[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        h = s[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        vx = s[2] + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
        vh = s[3] + dt / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]);
        ++step;
        t = static_cast<double>(step) * dt;
        if (!std::isfinite(h) || !std::isfinite(vx) || !std::isfinite(vh))
            return std::numeric_limits<double>::quiet_NaN();
        if (p.qoi == Qoi::SpeedAtHalfAltitude && h <= half_h) return std::sqrt(vx * vx + vh * vh);
        if (h <= 0.0) {
            if (p.qoi == Qoi::TimeOfFlight) return t;
            if (p.qoi == Qoi::Downrange) return x;
            return std::numeric_limits<double>::quiet_NaN(); // half-altitude never crossed
        }
    }
    return std::numeric_limits<double>::quiet_NaN(); // did not land within max_time
}

// Full quadratic feature vector (1, z_k, z_k^2, cross terms) on coordinates
// standardized to the training box.
int quadratic_terms(int d) { return 1 + 2 * d + d * (d - 1) / 2; }

void quadratic_features(const Point& z, const std::vector<double>& lo, const std::vector<double>& hi, double* out) {
    int d = static_cast<int>(z.size());
    std::vector<double> u(d);
    for (int k = 0; k < d; ++k) u[k] = (z[k] - lo[k]) / (hi[k] - lo[k]) * 2.0 - 1.0;
    int at = 0;
    out[at++] = 1.0;
    for (int k = 0; k < d; ++k) out[at++] = u[k];
    for (int k = 0; k < d; ++k) out[at++] = u[k] * u[k];
    for (int k = 0; k < d; ++k)
        for (int j = k + 1; j < d; ++j) out[at++] = u[k] * u[j];
}

} // namespace

ModelEnsemble make_benchmark_ensemble(const BenchmarkConfig& config) {
    if (config.name != "ballistic2d") fail(ErrorKind::Config, "unknown benchmark '" + config.name + "'");

    const double deg = 3.14159265358979323846 / 180.0;
    ModelEnsemble e;
    e.inputs.dims = {
        {Distribution::Kind::Uniform, config.speed_lo, config.speed_hi},
        {Distribution::Kind::Uniform, config.angle_lo_deg * deg, config.angle_hi_deg * deg},
        {Distribution::Kind::Uniform, config.drag_coeff_lo, config.drag_coeff_hi},
        {Distribution::Kind::Uniform, config.density_lo, config.density_hi},
    };

    const double dt_lo = config.dt_hf;
    const double dt_hi = config.dt_hf * config.dt_max_factor;

    auto trajectory_eval = [config](bool constant_density) {
        return [config, constant_density](const Point& z, double dt) {
            TrajectoryParams p{dt,
                               constant_density,
                               config.gravity,
                               config.initial_altitude,
                               config.scale_height,
                               config.reference_area_over_mass,
                               config.max_flight_time,
                               config.qoi};
            return integrate_trajectory(z, p);
        };
    };
    auto full = trajectory_eval(false);
    auto reduced = trajectory_eval(true);

    ModelSpec hf;
    hf.id = 0;
    hf.name = "high_fidelity";
    hf.eval = [full, dt = config.dt_hf](const Point& z, const std::vector<double>&) { return full(z, dt); };
    hf.cost = [](const std::vector<double>&) { return 1.0; };
    e.models.push_back(hf);

    ModelSpec rp;
    rp.id = 1;
    rp.name = "reduced_physics";
    if (config.fix_reduced_physics) {
        double dt = config.hand_dt_reduced_physics;
        rp.eval = [reduced, dt](const Point& z, const std::vector<double>&) { return reduced(z, dt); };
        rp.cost = [c = config.cost_scale_reduced_physics, dt_hf = config.dt_hf, dt](const std::vector<double>&) {
            return c * dt_hf / dt;
        };
    } else {
        rp.tunable = true;
        rp.beta_bounds = {{dt_lo, dt_hi}};
        rp.eval = [reduced](const Point& z, const std::vector<double>& b) { return reduced(z, b[0]); };
        rp.cost = [c = config.cost_scale_reduced_physics, dt_hf = config.dt_hf](const std::vector<double>& b) {
            return c * dt_hf / b[0];
        };
    }
    e.models.push_back(rp);

    ModelSpec cst;
    cst.id = 2;
    cst.name = "coarse_timestep";
    cst.tunable = true;
    cst.beta_bounds = {{dt_lo, dt_hi}};
    cst.eval = [full](const Point& z, const std::vector<double>& b) { return full(z, b[0]); };
    cst.cost = [c = config.cost_scale_coarse_timestep, dt_hf = config.dt_hf](const std::vector<double>& b) {
        return c * dt_hf / b[0];
    };
    e.models.push_back(cst);

    // Frozen quadratic surrogate: training inputs come from the operational box
    // widened about its midpoint; the fit is deterministic in the config.
    {
        int d = e.inputs.dimension();
        std::vector<double> lo(d), hi(d);
        for (int k = 0; k < d; ++k) {
            double mid = 0.5 * (e.inputs.dims[k].a + e.inputs.dims[k].b);
            double half = 0.5 * (e.inputs.dims[k].b - e.inputs.dims[k].a) * config.surrogate_training_box_scale;
            lo[k] = mid - half;
            hi[k] = mid + half;
        }
        // keep physically meaningful signs
        lo[0] = std::max(lo[0], 1.0);   // speed
        lo[2] = std::max(lo[2], 0.05);  // drag coefficient
        lo[3] = std::max(lo[3], 0.05);  // density

        int n = config.surrogate_training_samples;
        int terms = quadratic_terms(d);
        Rng rng(derive_seed(config.surrogate_training_seed, 0x50ff17ULL));
        Eigen::MatrixXd X(n, terms);
        Eigen::VectorXd y(n);
        std::vector<double> feat(terms);
        TrajectoryParams hf_params{config.dt_hf,
                                   false,
                                   config.gravity,
                                   config.initial_altitude,
                                   config.scale_height,
                                   config.reference_area_over_mass,
                                   config.max_flight_time,
                                   config.qoi};
        for (int i = 0; i < n; ++i) {
            Point z(d);
            for (int k = 0; k < d; ++k) z[k] = rng.uniform(lo[k], hi[k]);
            double q = integrate_trajectory(z, hf_params);
            if (!std::isfinite(q)) { // re-draw; widened corners can fail to land in time
                --i;
                continue;
            }
            quadratic_features(z, lo, hi, feat.data());
            for (int c = 0; c < terms; ++c) X(i, c) = feat[c];
            y(i) = q;
        }
        Eigen::VectorXd coeff = X.colPivHouseholderQr().solve(y);
        std::vector<double> cvec(coeff.data(), coeff.data() + terms);

        ModelSpec ml;
        ml.id = 3;
        ml.name = "surrogate";
        ml.eval = [cvec, lo, hi, terms](const Point& z, const std::vector<double>&) {
            double feat[32];
            quadratic_features(z, lo, hi, feat);
            double s = 0.0;
            for (int c = 0; c < terms; ++c) s += cvec[c] * feat[c];
            return s;
        };
        ml.cost = [w = config.surrogate_cost](const std::vector<double>&) { return w; };
        e.models.push_back(ml);
    }

    e.validate();
    return e;
}

std::vector<double> benchmark_hand_beta(const BenchmarkConfig& config) {
    if (config.fix_reduced_physics) return {config.hand_dt_coarse_timestep};
    return {config.hand_dt_reduced_physics, config.hand_dt_coarse_timestep};
}

} // namespace mftune
