#pragma once

#include "mftune/allocation.hpp"
#include "mftune/models.hpp"
#include "mftune/stats.hpp"

#include <string>
#include <vector>

namespace mftune {

enum class PilotModeKind { Offline, Projection, Online };

struct PilotMode {
    PilotModeKind kind = PilotModeKind::Projection;
    int n_pilot = 50;        // reference size for Offline, initial size otherwise
    double relaxation = 0.5; // online under-relaxation gamma in (0, 1]
    int max_rounds = 20;     // online hard stop

    void validate() const;
};

struct PilotResult {
    AllocationSolution solution;
    ModelStats stats;
    PilotSample pilot;
    bool exhausted = false;
};

struct OnlineRound {
    int round = 0;
    long long shared_target = 0; // optimizer's N for this round
    long long delta_n = 0;       // shared_target minus current pilot count
    double cumulative_cost = 0.0;
    double projected_variance = 0.0;
};

struct OnlineResult : PilotResult {
    std::vector<OnlineRound> trace;
};

// Offline pilot: statistics come from a large reference pilot whose cost is
// excluded from the budget; the allocation then uses the full budget.
PilotResult run_offline(const ModelEnsemble& ensemble, const std::vector<double>& beta, double budget, Scheme scheme,
                        int n_ref, std::uint64_t seed, CostLedger& ledger, const AllocationOptions& options = {});

// Pilot projection: the pilot is charged and bounds the allocation from below
// (N >= n_pilot and every model's count >= n_pilot); no further model calls
// are made, the returned solution carries the projected variance.
PilotResult run_projection(const ModelEnsemble& ensemble, const std::vector<double>& beta, double budget,
                           Scheme scheme, int n_pilot, std::uint64_t seed, CostLedger& ledger,
                           const AllocationOptions& options = {});

// Online pilot: alternates allocation optimization with pilot growth by the
// under-relaxed shared-sample deficit, stopping once the optimizer asks for no
// more shared samples than the pilot already has.
OnlineResult run_online(const ModelEnsemble& ensemble, const std::vector<double>& beta, double budget, Scheme scheme,
                        int n_pilot_initial, double relaxation, int max_rounds, std::uint64_t seed, CostLedger& ledger,
                        const AllocationOptions& options = {});

// Same loop, seeded with an existing pilot (sample reuse across stages).
OnlineResult run_online_from(const ModelEnsemble& ensemble, PilotSample pilot, double budget, Scheme scheme,
                             double relaxation, int max_rounds, std::uint64_t seed, CostLedger& ledger,
                             const AllocationOptions& options = {});

void write_online_trace_csv(const std::string& path, const std::vector<OnlineRound>& trace);

} // namespace mftune
