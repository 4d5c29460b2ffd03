// Command-line driver: configuration file + flag overrides, reproducible
// outputs. Subcommands: estimate, tune, baseline, grid, sweep.

#include "mftune/bench.hpp"
#include "mftune/models.hpp"
#include "mftune/parallel.hpp"
#include "mftune/pilot.hpp"
#include "mftune/tuning.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace mftune;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CliConfig {
    BenchmarkConfig benchmark;

    double budget = 2000.0;
    int n_pilot = 50;
    int n_iter = 5;
    int n_init = 0;
    std::string scheme = "acv-mf";
    std::uint64_t seed = 7;
    int trials = 100;
    double relaxation = 0.5;
    int max_rounds = 20;

    std::string kind = "tuned";
    int n_offline_ref = 10000;
    std::vector<double> oracle_beta;

    int grid_points = 25;
    int grid_n_ref = 10000;

    std::vector<double> sweep_budgets{500.0, 1000.0, 2000.0};
    std::vector<int> sweep_n_pilots{10, 50, 100};
    std::vector<int> sweep_n_iters{5, 10, 20};
    std::vector<std::string> sweep_types{"mc", "hand_selected", "best_case", "tuned"};
    long long reference_samples = 100000;
};

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void load_benchmark(const json& j, BenchmarkConfig& b) {
    maybe(j, "name", b.name);
    if (j.contains("qoi")) b.qoi = parse_qoi(j.at("qoi").get<std::string>());
    maybe(j, "dt_hf", b.dt_hf);
    maybe(j, "dt_max_factor", b.dt_max_factor);
    maybe(j, "max_flight_time", b.max_flight_time);
    maybe(j, "gravity", b.gravity);
    maybe(j, "initial_altitude", b.initial_altitude);
    maybe(j, "scale_height", b.scale_height);
    maybe(j, "reference_area_over_mass", b.reference_area_over_mass);
    maybe(j, "speed_lo", b.speed_lo);
    maybe(j, "speed_hi", b.speed_hi);
    maybe(j, "angle_lo_deg", b.angle_lo_deg);
    maybe(j, "angle_hi_deg", b.angle_hi_deg);
    maybe(j, "drag_coeff_lo", b.drag_coeff_lo);
    maybe(j, "drag_coeff_hi", b.drag_coeff_hi);
    maybe(j, "density_lo", b.density_lo);
    maybe(j, "density_hi", b.density_hi);
    maybe(j, "cost_scale_reduced_physics", b.cost_scale_reduced_physics);
    maybe(j, "cost_scale_coarse_timestep", b.cost_scale_coarse_timestep);
    maybe(j, "surrogate_cost", b.surrogate_cost);
    maybe(j, "hand_dt_reduced_physics", b.hand_dt_reduced_physics);
    maybe(j, "hand_dt_coarse_timestep", b.hand_dt_coarse_timestep);
    maybe(j, "fix_reduced_physics", b.fix_reduced_physics);
    maybe(j, "surrogate_training_samples", b.surrogate_training_samples);
    maybe(j, "surrogate_training_box_scale", b.surrogate_training_box_scale);
    maybe(j, "surrogate_training_seed", b.surrogate_training_seed);
}

json benchmark_to_json(const BenchmarkConfig& b) {
    json j;
    j["name"] = b.name;
    j["qoi"] = qoi_name(b.qoi);
    j["dt_hf"] = b.dt_hf;
    j["dt_max_factor"] = b.dt_max_factor;
    j["max_flight_time"] = b.max_flight_time;
    j["gravity"] = b.gravity;
    j["initial_altitude"] = b.initial_altitude;
    j["scale_height"] = b.scale_height;
    j["reference_area_over_mass"] = b.reference_area_over_mass;
    j["speed_lo"] = b.speed_lo;
    j["speed_hi"] = b.speed_hi;
    j["angle_lo_deg"] = b.angle_lo_deg;
    j["angle_hi_deg"] = b.angle_hi_deg;
    j["drag_coeff_lo"] = b.drag_coeff_lo;
    j["drag_coeff_hi"] = b.drag_coeff_hi;
    j["density_lo"] = b.density_lo;
    j["density_hi"] = b.density_hi;
    j["cost_scale_reduced_physics"] = b.cost_scale_reduced_physics;
    j["cost_scale_coarse_timestep"] = b.cost_scale_coarse_timestep;
    j["surrogate_cost"] = b.surrogate_cost;
    j["hand_dt_reduced_physics"] = b.hand_dt_reduced_physics;
    j["hand_dt_coarse_timestep"] = b.hand_dt_coarse_timestep;
    j["fix_reduced_physics"] = b.fix_reduced_physics;
    j["surrogate_training_samples"] = b.surrogate_training_samples;
    j["surrogate_training_box_scale"] = b.surrogate_training_box_scale;
    j["surrogate_training_seed"] = b.surrogate_training_seed;
    return j;
}

CliConfig load_config(const std::string& path) {
    CliConfig c;
    if (path.empty()) return c;
    std::ifstream is(path);
    if (!is) fail(ErrorKind::Config, "cannot open config file '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        fail(ErrorKind::Config, std::string("config parse error: ") + e.what());
    }
    if (j.contains("benchmark")) load_benchmark(j.at("benchmark"), c.benchmark);
    if (j.contains("run")) {
        const auto& r = j.at("run");
        maybe(r, "budget", c.budget);
        maybe(r, "n_pilot", c.n_pilot);
        maybe(r, "n_iter", c.n_iter);
        maybe(r, "n_init", c.n_init);
        maybe(r, "scheme", c.scheme);
        maybe(r, "seed", c.seed);
        maybe(r, "trials", c.trials);
        maybe(r, "relaxation", c.relaxation);
        maybe(r, "max_rounds", c.max_rounds);
    }
    if (j.contains("baseline")) {
        const auto& b = j.at("baseline");
        maybe(b, "kind", c.kind);
        maybe(b, "n_offline_ref", c.n_offline_ref);
        maybe(b, "oracle_beta", c.oracle_beta);
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        maybe(g, "points_per_dim", c.grid_points);
        maybe(g, "n_ref", c.grid_n_ref);
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        maybe(s, "budgets", c.sweep_budgets);
        maybe(s, "n_pilots", c.sweep_n_pilots);
        maybe(s, "n_iters", c.sweep_n_iters);
        maybe(s, "types", c.sweep_types);
        maybe(s, "reference_samples", c.reference_samples);
    }
    return c;
}

json manifest_json(const CliConfig& c, const std::string& subcommand) {
    json j;
    j["version"] = kVersion;
    j["subcommand"] = subcommand;
    j["benchmark"] = benchmark_to_json(c.benchmark);
    j["run"] = {{"budget", c.budget},     {"n_pilot", c.n_pilot},       {"n_iter", c.n_iter},
                {"n_init", c.n_init},     {"scheme", c.scheme},         {"seed", c.seed},
                {"trials", c.trials},     {"relaxation", c.relaxation}, {"max_rounds", c.max_rounds}};
    j["baseline"] = {{"kind", c.kind}, {"n_offline_ref", c.n_offline_ref}, {"oracle_beta", c.oracle_beta}};
    j["grid"] = {{"points_per_dim", c.grid_points}, {"n_ref", c.grid_n_ref}};
    j["sweep"] = {{"budgets", c.sweep_budgets},
                  {"n_pilots", c.sweep_n_pilots},
                  {"n_iters", c.sweep_n_iters},
                  {"types", c.sweep_types},
                  {"reference_samples", c.reference_samples}};
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
    os << text << "\n";
}

// Trial seeds are derived from the base seed by index; estimate uses trial 0
// so a one-trial sweep cell and an estimate run coincide.
std::uint64_t trial_seed(std::uint64_t base, std::size_t index) { return derive_seed(base, 0x7e1a1ULL, index); }

BaselineConfig baseline_config(const CliConfig& c, const ModelEnsemble& ensemble, double budget, int n_pilot,
                               int n_iter, int jobs) {
    BaselineConfig bc;
    bc.budget = budget;
    bc.n_pilot = n_pilot;
    bc.n_iter = n_iter;
    bc.n_init = c.n_init;
    bc.scheme = parse_scheme(c.scheme);
    bc.hand_beta = benchmark_hand_beta(c.benchmark);
    bc.oracle_beta = c.oracle_beta;
    bc.n_offline_ref = c.n_offline_ref;
    bc.relaxation = c.relaxation;
    bc.max_rounds = c.max_rounds;
    bc.jobs = jobs;
    (void)ensemble;
    return bc;
}

double reference_value(const ModelEnsemble& ensemble, long long n_ref, std::uint64_t seed, int jobs) {
    // Brute-force MC reference; chunked so it parallelizes deterministically.
    const long long chunk = 4096;
    long long n_chunks = (n_ref + chunk - 1) / chunk;
    std::vector<double> sums(n_chunks, 0.0);
    std::vector<long long> counts(n_chunks, 0);
    parallel_for(jobs, static_cast<std::size_t>(n_chunks), [&](std::size_t ci) {
        long long lo = static_cast<long long>(ci) * chunk;
        long long n = std::min(chunk, n_ref - lo);
        Rng rng(derive_seed(seed, 0x9ef5ULL, ci));
        CostLedger scratch;
        auto points = ensemble.inputs.sample_batch(static_cast<int>(n), rng);
        auto vals = ensemble.evaluate(0, {}, points, scratch, CostTag::Offline);
        double s = 0.0;
        for (double v : vals) s += v;
        sums[ci] = s;
        counts[ci] = n;
    });
    double total = 0.0;
    long long count = 0;
    for (std::size_t i = 0; i < sums.size(); ++i) {
        total += sums[i];
        count += counts[i];
    }
    return total / static_cast<double>(count);
}

int cmd_estimate(const CliConfig& c, const fs::path& out, int jobs) {
    auto ensemble = make_benchmark_ensemble(c.benchmark);
    TuningConfig tc;
    tc.budget = c.budget;
    tc.n_pilot = c.n_pilot;
    tc.n_iter = c.n_iter;
    tc.n_init = c.n_init;
    tc.scheme = parse_scheme(c.scheme);
    tc.seed = trial_seed(c.seed, 0);
    tc.relaxation = c.relaxation;
    tc.max_rounds = c.max_rounds;
    tc.allocation.jobs = jobs;

    if (ensemble.beta_dimension() == 0) fail(ErrorKind::Config, "benchmark has no tunable hyperparameters");
    CostLedger ledger;
    TuningResult tuning;
    EstimatorReport report = run_pipeline(ensemble, tc, ledger, &tuning);
    write_tuning_trace_csv((out / "tuning_trace.csv").string(), tuning);
    write_text(out / "tuning_result.json", tuning_result_to_json(tuning));
    write_text(out / "report.json", report_to_json(report));

    std::cout << "qtilde " << report.qtilde << "\n";
    std::cout << "predicted_variance " << report.predicted_variance << "\n";
    std::cout << "cost pilot=" << report.cost.pilot << " overhead=" << report.cost.tuning_overhead
              << " allocation=" << report.cost.allocation << " total=" << report.cost.total() << " budget=" << c.budget
              << "\n";
    return 0;
}

int cmd_tune(const CliConfig& c, const fs::path& out, int jobs) {
    auto ensemble = make_benchmark_ensemble(c.benchmark);
    TuningConfig tc;
    tc.budget = c.budget;
    tc.n_pilot = c.n_pilot;
    tc.n_iter = c.n_iter;
    tc.n_init = c.n_init;
    tc.scheme = parse_scheme(c.scheme);
    tc.seed = trial_seed(c.seed, 0);
    tc.allocation.jobs = jobs;
    CostLedger ledger;
    auto result = ego_tune(ensemble, tc, ledger);
    write_tuning_trace_csv((out / "tuning_trace.csv").string(), result);
    write_text(out / "tuning_result.json", tuning_result_to_json(result));
    std::cout << "beta_star";
    for (double b : result.beta_star) std::cout << " " << b;
    std::cout << "\noverhead " << result.overhead << "\n";
    return 0;
}

int cmd_baseline(const CliConfig& c, const fs::path& out, int jobs) {
    auto ensemble = make_benchmark_ensemble(c.benchmark);
    auto bc = baseline_config(c, ensemble, c.budget, c.n_pilot, c.n_iter, jobs);
    auto batch = run_baseline(parse_solution_type(c.kind), ensemble, bc, c.trials, c.seed);
    write_batch_csv((out / "trials.csv").string(), batch);
    std::cout << "type " << solution_type_name(batch.type) << " trials " << batch.trials.size() << "\n";
    return 0;
}

int cmd_grid(const CliConfig& c, const fs::path& out, int jobs) {
    auto ensemble = make_benchmark_ensemble(c.benchmark);
    auto grid = build_variance_grid(ensemble, c.budget, parse_scheme(c.scheme), c.grid_points, c.grid_n_ref,
                                    c.seed, jobs);
    write_grid_csv((out / "grid.csv").string(), grid);
    json j;
    j["argmin_beta"] = grid.argmin_beta;
    j["argmin_variance"] = grid.argmin_value;
    j["budget"] = grid.budget;
    write_text(out / "grid_summary.json", j.dump(2));
    std::cout << "argmin_beta";
    for (double b : grid.argmin_beta) std::cout << " " << b;
    std::cout << "\nargmin_variance " << grid.argmin_value << "\n";
    return 0;
}

int cmd_sweep(const CliConfig& c, const fs::path& out, int jobs) {
    if (c.sweep_budgets.empty() || c.sweep_n_pilots.empty() || c.sweep_n_iters.empty() || c.sweep_types.empty())
        fail(ErrorKind::Config, "sweep lists must be nonempty");
    auto ensemble = make_benchmark_ensemble(c.benchmark);

    std::vector<double> oracle_beta = c.oracle_beta;
    bool needs_best = false;
    for (const auto& t : c.sweep_types) needs_best |= parse_solution_type(t) == SolutionType::BestCase;
    if (needs_best && oracle_beta.empty()) {
        auto grid = build_variance_grid(ensemble, c.sweep_budgets.front(), parse_scheme(c.scheme), c.grid_points,
                                        c.grid_n_ref, c.seed, jobs);
        oracle_beta = grid.argmin_beta;
    }

    double q_ref = reference_value(ensemble, c.reference_samples, derive_seed(c.seed, 0x9efULL), jobs);

    std::ofstream trials_csv(out / "sweep_trials.csv");
    trials_csv.precision(17);
    trials_csv << "type,budget,n_pilot,n_iter,trial,seed,qtilde,predicted_variance,cost_pilot,cost_overhead,"
                  "cost_allocation,cost_total,exhausted,beta\n";
    json summary = json::array();
    for (double budget : c.sweep_budgets)
        for (int np : c.sweep_n_pilots)
            for (int ni : c.sweep_n_iters)
                for (const auto& type_name : c.sweep_types) {
                    auto type = parse_solution_type(type_name);
                    auto bc = baseline_config(c, ensemble, budget, np, ni, jobs);
                    bc.oracle_beta = oracle_beta;
                    auto batch = run_baseline(type, ensemble, bc, c.trials, c.seed);
                    for (const auto& t : batch.trials) {
                        trials_csv << solution_type_name(type) << "," << budget << "," << np << "," << ni << ","
                                   << t.trial << "," << t.seed << "," << t.qtilde << "," << t.predicted_variance
                                   << "," << t.cost_pilot << "," << t.cost_overhead << "," << t.cost_allocation << ","
                                   << t.cost_total << "," << (t.exhausted ? 1 : 0) << ",";
                        for (std::size_t k = 0; k < t.beta.size(); ++k) trials_csv << (k ? ";" : "") << t.beta[k];
                        trials_csv << "\n";
                    }
                    json cell = json::parse(batch_summary_json(batch, q_ref));
                    cell["n_pilot"] = np;
                    cell["n_iter"] = ni;
                    summary.push_back(cell);
                }
    json top;
    top["q_ref"] = q_ref;
    top["cells"] = summary;
    write_text(out / "sweep_summary.json", top.dump(2));
    std::cout << "cells " << summary.size() << " q_ref " << q_ref << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multifidelity ACV estimation with automated low-fidelity model tuning"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    bool have_seed = false, have_budget = false, have_np = false, have_ni = false, have_ninit = false;
    bool have_scheme = false, have_qoi = false, have_trials = false, have_kind = false;
    std::uint64_t seed = 0;
    double budget = 0.0;
    int n_pilot = 0, n_iter = 0, n_init = 0, trials = 0;
    std::string scheme, qoi, kind;

    app.add_option("--config", config_path, "JSON configuration file (a manifest works too)");
    app.add_option("--out", out_dir, "output directory (default: $MFTUNE_OUT or .)");
    app.add_option("--jobs", jobs, "worker threads; results are independent of this");
    auto* oseed = app.add_option("--seed", seed, "base random seed");
    auto* obudget = app.add_option("--budget", budget, "computational budget in high-fidelity evaluations");
    auto* onp = app.add_option("--n-pilot", n_pilot, "pilot samples per candidate");
    auto* oni = app.add_option("--n-iter", n_iter, "total tuning candidates (initial design included)");
    auto* oninit = app.add_option("--n-init", n_init, "initial design size (0 = automatic)");
    auto* oscheme = app.add_option("--scheme", scheme, "mlmc|mfmc|acv-is|acv-mf|gmf");
    auto* oqoi = app.add_option("--qoi", qoi, "time_of_flight|downrange|speed_at_half_altitude");
    auto* otrials = app.add_option("--trials", trials, "trials per batch");
    auto* okind = app.add_option("--kind", kind, "baseline kind: mc|hand|best|tuned");

    auto* sub_estimate = app.add_subcommand("estimate", "tune, allocate, evaluate, assemble");
    auto* sub_tune = app.add_subcommand("tune", "model tuning only");
    auto* sub_baseline = app.add_subcommand("baseline", "trial batch of one solution type");
    auto* sub_grid = app.add_subcommand("grid", "oracle variance landscape over hyperparameters");
    auto* sub_sweep = app.add_subcommand("sweep", "cartesian study over budgets, pilots, iterations, types");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    have_seed = oseed->count() > 0;
    have_budget = obudget->count() > 0;
    have_np = onp->count() > 0;
    have_ni = oni->count() > 0;
    have_ninit = oninit->count() > 0;
    have_scheme = oscheme->count() > 0;
    have_qoi = oqoi->count() > 0;
    have_trials = otrials->count() > 0;
    have_kind = okind->count() > 0;

    try {
        CliConfig config = load_config(config_path);
        if (have_seed) config.seed = seed;
        if (have_budget) config.budget = budget;
        if (have_np) config.n_pilot = n_pilot;
        if (have_ni) config.n_iter = n_iter;
        if (have_ninit) config.n_init = n_init;
        if (have_scheme) config.scheme = scheme;
        if (have_qoi) config.benchmark.qoi = parse_qoi(qoi);
        if (have_trials) config.trials = trials;
        if (have_kind) config.kind = kind;

        if (out_dir.empty()) {
            const char* env = std::getenv("MFTUNE_OUT");
            out_dir = env ? env : ".";
        }
        fs::path out(out_dir);
        fs::create_directories(out);

        std::string subname = sub_estimate->parsed()   ? "estimate"
                              : sub_tune->parsed()     ? "tune"
                              : sub_baseline->parsed() ? "baseline"
                              : sub_grid->parsed()     ? "grid"
                                                       : "sweep";
        write_text(out / "manifest.json", manifest_json(config, subname).dump(2));

        if (sub_estimate->parsed()) return cmd_estimate(config, out, jobs);
        if (sub_tune->parsed()) return cmd_tune(config, out, jobs);
        if (sub_baseline->parsed()) return cmd_baseline(config, out, jobs);
        if (sub_grid->parsed()) return cmd_grid(config, out, jobs);
        return cmd_sweep(config, out, jobs);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::Config ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
