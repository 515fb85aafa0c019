#pragma once

// Brute-force oracles used by the tests. Everything here is written as a
// literal transcription of the definitions, independent of the optimized
// library code paths it checks.

#include <vector>

#include "noisyges/graph.hpp"
#include "noisyges/scoring.hpp"

namespace oracles {

using noisyges::Dag;
using noisyges::Operator;
using noisyges::Pdag;

/// Every DAG on d labeled nodes (3 states per unordered pair, acyclic only).
std::vector<Dag> all_dags(int d);

/// Every CPDAG on d labeled nodes (deduplicated completions of all DAGs).
std::vector<Pdag> all_cpdags(int d);

/// CPDAG by equivalence-class enumeration: an edge is directed iff every DAG
/// with the same skeleton and v-structures orients it the same way.
Pdag cpdag_by_enumeration(const Dag& g, const std::vector<Dag>& dags_same_d);

bool same_skeleton_and_vstructures(const Dag& g1, const Dag& g2);

/// Literal Appendix-style operator validity: clique by pairwise adjacency and
/// an explicit enumeration of all simple semi-directed paths.
bool operator_valid_literal(const Pdag& g, const Operator& op);

/// Every valid operator by exhaustive (a, b, aux-subset) scan with the
/// literal validity check, sorted.
std::vector<Operator> enumerate_operators_literal(const Pdag& g, noisyges::OpKind kind);

/// Pair-status SHD, written independently.
int shd_literal(const Pdag& g1, const Pdag& g2);

/// Dense grid search for the 1-parameter clipped loss over theta in
/// [-10, 10] with step 1e-3; returns the best loss found.
double clipped_loss_grid_1d(const noisyges::Dataset& data, double clip, int target, int parent);

/// Clipped objective (1/(n sigma^2)) sum min(r^2, C) at an explicit theta.
double clipped_loss_at(const noisyges::Dataset& data, double clip, int target,
                       const std::vector<int>& parents, const std::vector<double>& theta);

/// Unclipped OLS BIC local score via QR (independent solver route).
double ols_bic_qr(const noisyges::Dataset& data, int target, const std::vector<int>& parents);

/// Normal quantile by bisection on erfc (independent of AS 241).
double normal_quantile_bisect(double p);

/// E[min(Z^2, c)] for standard normal Z, in closed form.
double clipped_chisq1_mean(double c);

/// All valid backdoor adjustment sets for cause -> outcome in a DAG:
/// subsets of the other nodes with no descendant of cause, blocking every
/// backdoor path (checked by d-separation on the graph with the cause's
/// outgoing edges removed).
std::vector<std::vector<int>> all_backdoor_sets(const Dag& g, int cause, int outcome);

}  // namespace oracles
