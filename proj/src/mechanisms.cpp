#include "noisyges/mechanisms.hpp"

#include <cmath>
#include <stdexcept>

#include "noisyges/errors.hpp"

namespace noisyges {

double laplace_icdf(double u, double scale) {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("laplace_icdf: u outside (0,1)");
    if (scale < 0.0) throw std::domain_error("laplace_icdf: negative scale");
    const double c = u - 0.5;
    const double sgn = (c > 0.0) ? 1.0 : (c < 0.0 ? -1.0 : 0.0);
    return -scale * sgn * std::log(1.0 - 2.0 * std::fabs(c));
}

double laplace(RngStream& rng, double scale) {
    if (scale < 0.0) throw std::domain_error("laplace: negative scale");
    if (scale == 0.0) return 0.0;
    return laplace_icdf(rng.next_uniform(), scale);
}

std::size_t report_noisy_max(std::span<const double> values, double scale, RngStream& rng) {
    if (values.empty()) throw EmptyCandidates("report_noisy_max: empty candidate list");
    std::size_t best = 0;
    double best_val = values[0] + laplace(rng, scale);
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double v = values[i] + laplace(rng, scale);
        if (v > best_val) {
            best = i;
            best_val = v;
        }
    }
    return best;
}

AboveThresholdSession::AboveThresholdSession(double threshold, double noise_scale_nu, double noise_scale_eta,
                                             RngStream rng)
    : noise_scale_eta_(noise_scale_eta), rng_(rng) {
    noisy_threshold_ = threshold + laplace(rng_, noise_scale_nu);
}

bool AboveThresholdSession::query(double q) {
    last_eta_ = laplace(rng_, noise_scale_eta_);
    return q + last_eta_ > noisy_threshold_;
}

void PrivacyBudget::validate() const {
    if (e_max < 0) throw ConfigError("privacy budget: e_max must be >= 0");
    if (noiseless) return;
    if (!(eps_score > 0.0) || !(eps_thresh >= 0.0))
        throw ConfigError("privacy budget: eps_score must be positive (eps_thresh nonnegative) unless noiseless");
    if (!(tau > 0.0)) throw ConfigError("privacy budget: tau must be positive unless noiseless");
}

double total_epsilon(const PrivacyBudget& b) {
    if (b.noiseless) throw NoiselessBudget("total_epsilon: budget is the epsilon = infinity sentinel");
    return 2.0 * b.eps_thresh + 2.0 * static_cast<double>(b.e_max) * b.eps_score;
}

double max_info_bound(long n, double eps, double gamma, double log_numerator) {
    if (n < 1) throw std::domain_error("max_info_bound: n must be >= 1");
    if (eps < 0.0) throw std::domain_error("max_info_bound: eps must be >= 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::domain_error("max_info_bound: gamma outside (0,1)");
    const double nn = static_cast<double>(n);
    return 0.5 * nn * eps * eps + eps * std::sqrt(nn * std::log(log_numerator / gamma) / 2.0);
}

}  // namespace noisyges
