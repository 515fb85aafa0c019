#pragma once

#include <cstddef>
#include <span>

#include "noisyges/rng.hpp"

namespace noisyges {

/// Laplace inverse CDF at u in (0,1): -scale * sgn(u - 1/2) * ln(1 - 2|u - 1/2|).
double laplace_icdf(double u, double scale);

/// Laplace(0, scale) draw. scale = 0 returns exactly 0 without consuming
/// randomness, so noiseless runs degenerate to their deterministic
/// counterparts.
double laplace(RngStream& rng, double scale);

/// Report Noisy Max: argmax of values[i] + Lap(scale). Exact ties break to
/// the lowest index (only reachable with scale = 0).
std::size_t report_noisy_max(std::span<const double> values, double scale, RngStream& rng);

/// AboveThreshold session. The noisy threshold is drawn once at construction;
/// each query adds fresh Laplace noise to q and compares against it strictly.
class AboveThresholdSession {
public:
    AboveThresholdSession(double threshold, double noise_scale_nu, double noise_scale_eta, RngStream rng);

    /// True iff q + eta > noisy threshold, eta ~ Lap(noise_scale_eta) fresh.
    bool query(double q);

    double noisy_threshold() const { return noisy_threshold_; }
    double last_eta() const { return last_eta_; }

private:
    double noisy_threshold_;
    double noise_scale_eta_;
    double last_eta_ = 0.0;
    RngStream rng_;
};

/// Privacy parameters for one discovery run. `tau` is the local score
/// sensitivity the noise scales are calibrated against. `noiseless` is an
/// explicit epsilon = infinity sentinel: every mechanism then degenerates to
/// its deterministic counterpart.
struct PrivacyBudget {
    double eps_score = 0.0;
    double eps_thresh = 0.0;
    int e_max = 0;
    double tau = 0.0;
    bool noiseless = false;

    static PrivacyBudget none() { return PrivacyBudget{0.0, 0.0, 0, 0.0, true}; }

    void validate() const;
};

/// Total epsilon of a two-pass greedy run: 2*eps_thresh + 2*e_max*eps_score.
/// Exact-search callers encode their single epsilon as
/// (eps_thresh = 0, e_max = 1, eps_score = eps/2). Throws NoiselessBudget on
/// the epsilon = infinity sentinel.
double total_epsilon(const PrivacyBudget& b);

/// Max-information bound of an eps-differentially-private selection:
/// (n/2) eps^2 + eps sqrt(n log(log_numerator/gamma) / 2).
/// log_numerator = 2 is the standard bound; 1 matches the variant with
/// log(1/gamma) inside the square root.
double max_info_bound(long n, double eps, double gamma, double log_numerator = 2.0);

struct MaxInfoBound {
    double i_bound = 0.0;
    double gamma = 0.0;
};

}  // namespace noisyges
