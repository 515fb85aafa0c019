#pragma once

#include <limits>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "noisyges/graph.hpp"

namespace noisyges {

/// n x d data matrix with known noise variance sigma^2.
struct Dataset {
    Eigen::MatrixXd x;
    double sigma2 = 1.0;

    long n() const { return x.rows(); }
    int d() const { return static_cast<int>(x.cols()); }
    void validate() const;
};

/// Clipping threshold C (+inf sentinel = unclipped) and a multiplier on the
/// (|Pa| log n)/n penalty.
struct ScoreConfig {
    double clip = std::numeric_limits<double>::infinity();
    double penalty_scale = 1.0;

    bool clipped() const { return std::isfinite(clip); }
    void validate() const;
};

/// Identity of one local score: target node and sorted parent set.
struct LocalScoreKey {
    int target = 0;
    std::vector<int> parents;

    bool operator==(const LocalScoreKey& other) const {
        return target == other.target && parents == other.parents;
    }
};

struct LocalScoreKeyHash {
    std::size_t operator()(const LocalScoreKey& k) const;
};

struct ClippedFit {
    Eigen::VectorXd theta;
    double loss = 0.0;  // (1/(n sigma^2)) sum_k min{r_k^2, C} at theta
};

/// Deterministic clipped-OLS fit: start from the full-data OLS solution,
/// repeatedly refit on the rows whose squared residual is below the clip,
/// stop when the active set stabilizes (or after 50 rounds), and return the
/// iterate with the lowest clipped loss seen. With clip = +inf this is plain
/// OLS.
ClippedFit fit_clipped_ols(const Dataset& data, const ScoreConfig& cfg, const LocalScoreKey& key);

/// Local clipped BIC score:
/// -(1/(n sigma^2)) sum_k min{r_k^2, C} - penalty_scale * (|Pa|/n) log n.
double local_clipped_bic(const Dataset& data, const ScoreConfig& cfg, const LocalScoreKey& key);

/// Local score sensitivity under single-row replacement: C/(n sigma^2).
/// Throws InfiniteClip when the score is unclipped.
double local_score_sensitivity(const Dataset& data, const ScoreConfig& cfg);

/// Memoizing wrapper around local_clipped_bic for one (data, config) pair.
/// Greedy search re-evaluates identical local scores heavily; caching changes
/// no semantics.
class LocalScorer {
public:
    LocalScorer(const Dataset& data, const ScoreConfig& cfg) : data_(data), cfg_(cfg) {}

    double local_score(const LocalScoreKey& key) const;
    double local_score(int target, const std::vector<int>& sorted_parents) const;

    /// Decomposable score of a DAG: sum of local scores over all nodes.
    double dag_score(const Dag& g) const;

    const Dataset& data() const { return data_; }
    const ScoreConfig& config() const { return cfg_; }

private:
    const Dataset& data_;
    ScoreConfig cfg_;
    mutable std::unordered_map<LocalScoreKey, double, LocalScoreKeyHash> cache_;
};

/// Score gain of a valid operator on a CPDAG (or of a single-edge move on a
/// DAG-mode graph, where aux is empty and NA plays no role):
///   Insert(a,b,T):  s(b, NA u T u Pa_b u {a}) - s(b, NA u T u Pa_b)
///   Delete(a,b,H):  s(b, {NA \ H} u {Pa_b \ a}) - s(b, {NA \ H} u Pa_b u {a})
double score_gain(const LocalScorer& scorer, const Pdag& g, const Operator& op);
double score_gain(const Dataset& data, const ScoreConfig& cfg, const Pdag& g, const Operator& op);

}  // namespace noisyges
