#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "noisyges/graph.hpp"
#include "noisyges/mechanisms.hpp"
#include "noisyges/scoring.hpp"

namespace noisyges {

enum class DiscoveryMode { ExactSearch, NoisyGes, PlainGes };
enum class GraphMode { Cpdag, Dag };

struct DiscoveryConfig {
    DiscoveryMode mode = DiscoveryMode::PlainGes;
    PrivacyBudget budget;
    ScoreConfig score_cfg;
    GraphMode graph_mode = GraphMode::Cpdag;
    std::vector<Pdag> candidate_family;  // ExactSearch only
    int max_aux_pool = 12;

    void validate(const Dataset& data) const;
    bool noiseless() const { return mode == DiscoveryMode::PlainGes || budget.noiseless; }
};

/// One scored round of a greedy pass, with the noise that was consumed.
struct StepRecord {
    std::vector<Operator> operators;
    std::vector<double> gains;
    std::vector<double> xi;
    int chosen = -1;
    double eta = 0.0;
    bool accepted = false;
};

struct PassRecord {
    char sign = '+';  // '+' insert pass, '-' delete pass
    double nu = 0.0;
    std::vector<StepRecord> steps;
};

/// Replayable record of one discovery run: re-executing against the recorded
/// noise reproduces the final graph.
struct DiscoveryTrace {
    DiscoveryMode mode = DiscoveryMode::PlainGes;
    GraphMode graph_mode = GraphMode::Cpdag;
    // exact search
    std::vector<double> scores;
    std::vector<double> xi;
    int chosen = -1;
    // greedy search
    std::vector<PassRecord> passes;
    Pdag final_graph;
};

struct DiscoveryResult {
    Pdag graph;
    DiscoveryTrace trace;
};

/// Noise scales of one greedy pass; all zero in noiseless mode.
struct PassScales {
    double xi = 0.0;   // 4 tau / eps_score
    double nu = 0.0;   // 4 tau / eps_thresh
    double eta = 0.0;  // 8 tau / eps_thresh
};
PassScales pass_scales(const DiscoveryConfig& cfg);

/// Select the highest-scoring candidate after adding Laplace(2 tau_full /
/// eps_total) noise to each decomposable score, tau_full = d * C/(n sigma^2).
DiscoveryResult exact_noisy_search(const Dataset& data, const DiscoveryConfig& cfg, RngStream rng);

/// Noisy greedy equivalence search: forward insert pass then backward delete
/// pass from the empty graph, each capped at budget.e_max rounds.
DiscoveryResult noisy_ges(const Dataset& data, const DiscoveryConfig& cfg, RngStream rng);

/// One greedy pass. Draws a noisy zero threshold once; per round selects the
/// best operator by report-noisy-max and applies it if its (noisy) gain
/// clears the threshold, stopping at the first failure.
std::pair<Pdag, PassRecord> greedy_pass(const Pdag& g0, const Dataset& data, const DiscoveryConfig& cfg,
                                        RngStream rng, char sign);

/// Decoupled variant, stage 1: run e_max rounds of noisy argmax, applying
/// every selected operator unconditionally. Consumes the same score-noise
/// draws as greedy_pass on the same rng.
std::vector<Operator> propose_operators(const Pdag& g0, const Dataset& data, const DiscoveryConfig& cfg,
                                        RngStream rng, char sign);

/// Decoupled variant, stage 2: AboveThreshold over the proposed sequence;
/// returns the accepted prefix. Consumes the same threshold-noise draws as
/// greedy_pass on the same rng.
std::vector<Operator> select_operators(const Pdag& g0, const Dataset& data, const DiscoveryConfig& cfg,
                                       RngStream rng, char sign, const std::vector<Operator>& proposed);

/// Apply a sign-mode operator to a graph under the configured graph mode
/// (CPDAG re-completion or plain DAG edit).
Pdag apply_in_mode(const Pdag& g, const Operator& op, GraphMode mode);

/// Re-execute a greedy trace consuming its recorded noise.
Pdag replay_trace(const Dataset& data, const DiscoveryConfig& cfg, const DiscoveryTrace& trace);

nlohmann::ordered_json trace_to_json(const DiscoveryTrace& trace);
DiscoveryTrace trace_from_json(const nlohmann::json& j);

std::string to_string(DiscoveryMode mode);
std::string to_string(GraphMode mode);

}  // namespace noisyges
