// Scratch probe for benchmark calibration (not installed; dev aid).
#include "mftune/allocation.hpp"
#include "mftune/bench.hpp"
#include "mftune/models.hpp"
#include "mftune/stats.hpp"
#include "mftune/tuning.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

using namespace mftune;

int main(int argc, char** argv) {
    BenchmarkConfig cfg;
    cfg.fix_reduced_physics = true;
    for (int i = 1; i + 1 < argc; i += 2) {
        auto is = [&](const char* k) { return std::strcmp(argv[i], k) == 0; };
        double v = std::atof(argv[i + 1]);
        if (is("H")) cfg.scale_height = v;
        if (is("h0")) cfg.initial_altitude = v;
        if (is("am")) cfg.reference_area_over_mass = v;
        if (is("v_lo")) cfg.speed_lo = v;
        if (is("v_hi")) cfg.speed_hi = v;
        if (is("a_lo")) cfg.angle_lo_deg = v;
        if (is("a_hi")) cfg.angle_hi_deg = v;
        if (is("cd_lo")) cfg.drag_coeff_lo = v;
        if (is("cd_hi")) cfg.drag_coeff_hi = v;
        if (is("rho_lo")) cfg.density_lo = v;
        if (is("rho_hi")) cfg.density_hi = v;
        if (is("box")) cfg.surrogate_training_box_scale = v;
    }

    auto e = make_benchmark_ensemble(cfg);
    CostLedger ledger;
    {
        Rng rng(1);
        auto pts = e.inputs.sample_batch(200, rng);
        auto t0 = std::chrono::steady_clock::now();
        auto v = e.evaluate(0, {}, pts, ledger, CostTag::Offline);
        auto t1 = std::chrono::steady_clock::now();
        double us = std::chrono::duration<double, std::micro>(t1 - t0).count() / 200.0;
        double mean = 0, var = 0;
        for (double q : v) mean += q;
        mean /= v.size();
        for (double q : v) var += (q - mean) * (q - mean);
        var /= (v.size() - 1);
        std::printf("HF eval: %.1f us, tof mean %.3f s, sd %.4f s\n", us, mean, std::sqrt(var));
    }

    std::printf("\n dt      w2        rho2      rho1      rho3      P23\n");
    TrialPilotCache cache(e, 10000, 42, ledger);
    for (double dt : {0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.15, 0.25}) {
        auto pilot = cache.pilot_at({dt}, ledger, CostTag::Offline);
        auto s = estimate_stats(pilot);
        std::printf("%7.3f  %.5f  %.6f  %.6f  %.6f  %.6f\n", dt, e.models[2].cost({dt}), s.rho(1), s.rho(0), s.rho(2),
                    s.P(1, 2));
    }

    std::printf("\n dt      J(oracle,B=1000)   reduction_vs_mc\n");
    double jmin = 1e300, j_at_hand = 0;
    double dt_min = 0;
    for (double dt : {0.001, 0.002, 0.005, 0.01, 0.02, 0.04, 0.065, 0.1, 0.15, 0.25}) {
        auto pilot = cache.pilot_at({dt}, ledger, CostTag::Offline);
        auto s = estimate_stats(pilot);
        auto sol = optimize_allocation(s, e.costs_at({dt}), 1000.0, Scheme::AcvMf);
        std::printf("%7.3f  %.6e  %8.1f\n", dt, sol.predicted_variance, s.var_q / 1000.0 / sol.predicted_variance);
        if (sol.predicted_variance < jmin) {
            jmin = sol.predicted_variance;
            dt_min = dt;
        }
        if (dt == 0.1) j_at_hand = sol.predicted_variance;
    }
    std::printf("\nargmin dt=%.3f  J(hand)/J(min) = %.3f\n", dt_min, j_at_hand / jmin);

    bool run_trials = false;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "trials") == 0) run_trials = true;
    if (!run_trials) return 0;

    auto t0 = std::chrono::steady_clock::now();
    auto grid = build_variance_grid(e, 2000.0, Scheme::AcvMf, 25, 10000, 99, 4);
    auto t1 = std::chrono::steady_clock::now();
    std::printf("\ngrid built in %.1f s; argmin dt=%.4f value=%.4e\n",
                std::chrono::duration<double>(t1 - t0).count(), grid.argmin_beta[0], grid.argmin_value);
    double hand_oracle = grid.interpolate({0.1});
    std::printf("oracle at hand: %.4e  ratio=%.3f\n", hand_oracle, hand_oracle / grid.argmin_value);

    const int n_trials = 40;
    for (int np : {10, 25, 50, 100}) {
        int improved = 0;
        double avg_overhead = 0;
        t0 = std::chrono::steady_clock::now();
        for (int trial = 0; trial < n_trials; ++trial) {
            TuningConfig tc;
            tc.budget = 2000.0;
            tc.n_pilot = np;
            tc.n_iter = 5;
            tc.seed = derive_seed(1234, 0x7e1a1ULL, trial);
            CostLedger ledger;
            auto result = ego_tune(e, tc, ledger);
            if (grid.interpolate(result.beta_star) < hand_oracle) ++improved;
            avg_overhead += result.overhead / n_trials;
        }
        t1 = std::chrono::steady_clock::now();
        std::printf("n_pilot %3d: improved %2d/%d  avg_overhead %.2f  (%.2f s)\n", np, improved, n_trials,
                    avg_overhead, std::chrono::duration<double>(t1 - t0).count());
    }
    return 0;
}
