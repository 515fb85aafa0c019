#pragma once

#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "noisyges/discovery.hpp"
#include "noisyges/graph.hpp"
#include "noisyges/scoring.hpp"

namespace noisyges {

/// A causal query: effect of `cause` on `outcome` adjusting for `adjustment`.
struct EffectTarget {
    int cause = 0;
    int outcome = 0;
    std::vector<int> adjustment;  // sorted, excludes cause and outcome

    void validate(int d) const;
};

struct EffectReport {
    EffectTarget target;
    double beta_hat = 0.0;
    double se = 0.0;
    double alpha = 0.0;
    double alpha_tilde = 0.0;
    double naive_lo = 0.0, naive_hi = 0.0;
    double corr_lo = 0.0, corr_hi = 0.0;
    bool ridged = false;  // degenerate design hit the ridge fallback
};

/// Inputs of the max-information level correction.
struct CorrectionInputs {
    long n = 0;
    double eps_total = 0.0;
    double alpha = 0.05;
    std::optional<double> gamma;  // optimized over a grid when absent
    bool log_arg_two = true;      // log(2/gamma) bound; false uses log(1/gamma)
};

struct CorrectedAlpha {
    double alpha_tilde = 0.0;
    double gamma_star = 0.0;
};

/// Adjustment set for the edge i->j: parents of i in the deterministic
/// consistent extension of g (a valid backdoor set in that DAG). Throws
/// NoSuchEdge when the extension does not orient an i->j edge.
EffectTarget choose_adjustment(const Pdag& g, int i, int j);

struct OlsEffect {
    double beta_hat = 0.0;
    double se = 0.0;
    bool ridged = false;
};

/// Regress X_outcome on {X_cause} u adjustment without intercept (optionally
/// with one); beta_hat is the cause coefficient and se its classical standard
/// error with sigma^2 estimated as RSS/(n-p).
OlsEffect ols_effect(const Dataset& data, const EffectTarget& target, bool intercept = false);

/// Corrected level alpha_tilde = (alpha - gamma) exp(-max_info_bound(n,
/// eps_total, gamma)), maximized over a 1000-point log-spaced gamma grid in
/// (1e-12 alpha, alpha) when gamma is not fixed. eps_total = 0 returns alpha.
CorrectedAlpha corrected_alpha(const CorrectionInputs& ci);

EffectReport build_report(const Dataset& data, const Pdag& g, const EffectTarget& target, double alpha,
                          const CorrectionInputs& correction);

/// Splitting fraction that equalizes interval widths between data splitting
/// and the max-information correction:
/// p = (z_{1-alpha/2} / z_{1-((alpha-gamma)/2) exp(-I)})^2, clamped to (0,1].
double fair_split_fraction(double i_bound, double alpha, double gamma);

struct SplitResult {
    Pdag graph;
    std::optional<EffectReport> report;  // absent when the learned graph has no edges
};

/// Data-splitting baseline: plain GES on the first ceil((1-p) n) rows, then a
/// naive interval at level alpha on the remaining rows for a uniformly random
/// edge of the learned graph's consistent extension.
SplitResult split_pipeline(const Dataset& data, double p, double alpha, const DiscoveryConfig& cfg, RngStream rng);

/// {"i","j","adjustment","beta_hat","se","alpha","alpha_tilde","naive_lo",
///  "naive_hi","corr_lo","corr_hi"}
nlohmann::ordered_json report_to_json(const EffectReport& r);

}  // namespace noisyges
