#include "mftune/pilot.hpp"

#include <cmath>
#include <fstream>

namespace mftune {

void PilotMode::validate() const {
    if (n_pilot < 2) fail(ErrorKind::Config, "pilot size must be >= 2");
    if (!(relaxation > 0.0 && relaxation <= 1.0)) fail(ErrorKind::Config, "relaxation must lie in (0, 1]");
    if (max_rounds < 1) fail(ErrorKind::Config, "max_rounds must be >= 1");
}

PilotResult run_offline(const ModelEnsemble& ensemble, const std::vector<double>& beta, double budget, Scheme scheme,
                        int n_ref, std::uint64_t seed, CostLedger& ledger, const AllocationOptions& options) {
    PilotResult out;
    out.pilot = draw_pilot(ensemble, beta, n_ref, seed, ledger, CostTag::Offline);
    out.stats = estimate_stats(out.pilot);
    if (scheme == Scheme::Gmf) {
        auto opts = options;
        out.solution = optimize_allocation_gmf(out.stats, ensemble.costs_at(beta), budget, opts);
    } else {
        out.solution = optimize_allocation(out.stats, ensemble.costs_at(beta), budget, scheme, options);
    }
    return out;
}

namespace {

AllocationSolution solve_with_floors(const ModelStats& stats, const std::vector<double>& costs, double budget,
                                     Scheme scheme, long long pilot_count, const AllocationOptions& base) {
    AllocationOptions opts = base;
    opts.n_shared_floor = std::max<long long>(opts.n_shared_floor, pilot_count);
    opts.per_model_floor = std::max<long long>(opts.per_model_floor, pilot_count);
    if (scheme == Scheme::Gmf) return optimize_allocation_gmf(stats, costs, budget, opts);
    return optimize_allocation(stats, costs, budget, scheme, opts);
}

} // namespace

PilotResult run_projection(const ModelEnsemble& ensemble, const std::vector<double>& beta, double budget,
                           Scheme scheme, int n_pilot, std::uint64_t seed, CostLedger& ledger,
                           const AllocationOptions& options) {
    auto costs = ensemble.costs_at(beta);
    double per_point = 0.0;
    for (double w : costs) per_point += w;
    if (static_cast<double>(n_pilot) * per_point >= budget)
        fail(ErrorKind::Infeasible, "pilot cost " + std::to_string(n_pilot * per_point) +
                                        " does not fit within budget " + std::to_string(budget));

    PilotResult out;
    out.pilot = draw_pilot(ensemble, beta, n_pilot, seed, ledger, CostTag::Pilot);
    out.stats = estimate_stats(out.pilot);
    out.solution = solve_with_floors(out.stats, costs, budget, scheme, n_pilot, options);
    return out;
}

OnlineResult run_online(const ModelEnsemble& ensemble, const std::vector<double>& beta, double budget, Scheme scheme,
                        int n_pilot_initial, double relaxation, int max_rounds, std::uint64_t seed, CostLedger& ledger,
                        const AllocationOptions& options) {
    auto costs = ensemble.costs_at(beta);
    double per_point = 0.0;
    for (double w : costs) per_point += w;
    if (static_cast<double>(n_pilot_initial) * per_point >= budget)
        fail(ErrorKind::Infeasible, "initial pilot does not fit within budget");
    PilotSample pilot = draw_pilot(ensemble, beta, n_pilot_initial, seed, ledger, CostTag::Pilot);
    return run_online_from(ensemble, std::move(pilot), budget, scheme, relaxation, max_rounds, seed, ledger, options);
}

OnlineResult run_online_from(const ModelEnsemble& ensemble, PilotSample pilot, double budget, Scheme scheme,
                             double relaxation, int max_rounds, std::uint64_t seed, CostLedger& ledger,
                             const AllocationOptions& options) {
    if (!(relaxation > 0.0 && relaxation <= 1.0)) fail(ErrorKind::Config, "relaxation must lie in (0, 1]");
    auto costs = ensemble.costs_at(pilot.beta);
    double per_point = 0.0;
    for (double w : costs) per_point += w;

    OnlineResult out;
    bool have_solution = false;
    for (int round = 1; round <= max_rounds; ++round) {
        out.stats = estimate_stats(pilot);
        AllocationSolution sol;
        try {
            sol = solve_with_floors(out.stats, costs, budget, scheme, pilot.n(), options);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Infeasible && have_solution) {
                out.exhausted = true; // pilot outgrew what the budget can reuse
                break;
            }
            throw;
        }
        out.solution = sol;
        have_solution = true;

        long long delta_n = sol.profile.n_shared - pilot.n();
        OnlineRound tr;
        tr.round = round;
        tr.shared_target = sol.profile.n_shared;
        tr.delta_n = delta_n;
        tr.cumulative_cost = static_cast<double>(pilot.n()) * per_point;
        tr.projected_variance = sol.predicted_variance;
        out.trace.push_back(tr);

        if (delta_n <= 0) break;

        long long grow = static_cast<long long>(std::ceil(relaxation * static_cast<double>(delta_n)));
        long long affordable =
            static_cast<long long>(std::floor(budget / per_point)) - static_cast<long long>(pilot.n());
        bool partial = false;
        if (grow > affordable) {
            grow = affordable;
            partial = true;
        }
        if (grow <= 0) {
            out.exhausted = true;
            break;
        }
        Rng rng(derive_seed(seed, 0x0411eULL, static_cast<std::uint64_t>(round)));
        auto points = ensemble.inputs.sample_batch(static_cast<int>(grow), rng);
        auto fresh = draw_pilot_at_points(ensemble, pilot.beta, points, seed, ledger, CostTag::Pilot);
        pilot = merge_pilots(pilot, fresh);

        if (partial) {
            // fund the affordable fraction, refresh the solution once, stop
            out.stats = estimate_stats(pilot);
            try {
                out.solution = solve_with_floors(out.stats, costs, budget, scheme, pilot.n(), options);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Infeasible) throw;
            }
            out.exhausted = true;
            break;
        }
    }
    out.pilot = std::move(pilot);
    return out;
}

void write_online_trace_csv(const std::string& path, const std::vector<OnlineRound>& trace) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    os.precision(17);
    os << "round,shared_target,delta_n,cumulative_cost,projected_variance\n";
    for (const auto& r : trace)
        os << r.round << "," << r.shared_target << "," << r.delta_n << "," << r.cumulative_cost << ","
           << r.projected_variance << "\n";
}

} // namespace mftune
