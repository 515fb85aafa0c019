#include "noisyges/inference.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "noisyges/errors.hpp"
#include "noisyges/rng.hpp"

namespace noisyges {

void EffectTarget::validate(int d) const {
    if (cause == outcome) throw ConfigError("effect target: cause == outcome");
    if (cause < 0 || cause >= d || outcome < 0 || outcome >= d) throw IndexError("effect target: node out of range");
    for (int a : adjustment) {
        if (a < 0 || a >= d) throw IndexError("effect target: adjustment node out of range");
        if (a == cause || a == outcome) throw ConfigError("effect target: adjustment overlaps cause/outcome");
    }
}

EffectTarget choose_adjustment(const Pdag& g, int i, int j) {
    const Dag ext = pdag_to_dag(g);
    if (!ext.has_edge(i, j)) throw NoSuchEdge("choose_adjustment: extension has no edge i->j");
    EffectTarget t;
    t.cause = i;
    t.outcome = j;
    t.adjustment = ext.parents(i);
    t.validate(g.d());
    return t;
}

OlsEffect ols_effect(const Dataset& data, const EffectTarget& target, bool intercept) {
    target.validate(data.d());
    const long n = data.n();
    const int p = 1 + static_cast<int>(target.adjustment.size()) + (intercept ? 1 : 0);
    if (n <= static_cast<long>(target.adjustment.size()) + 2)
        throw ConfigError("ols_effect: need n > |adjustment| + 2");

    Eigen::MatrixXd m(n, p);
    m.col(0) = data.x.col(target.cause);
    for (std::size_t k = 0; k < target.adjustment.size(); ++k)
        m.col(1 + static_cast<long>(k)) = data.x.col(target.adjustment[k]);
    if (intercept) m.col(p - 1).setOnes();
    const Eigen::VectorXd y = data.x.col(target.outcome);

    OlsEffect out;
    Eigen::MatrixXd gram = m.transpose() * m;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        gram.diagonal().array() += 1e-10 * static_cast<double>(n);
        llt.compute(gram);
        out.ridged = true;
    }
    const Eigen::VectorXd beta = llt.solve(m.transpose() * y);
    const double rss = (y - m * beta).squaredNorm();
    const double dof = static_cast<double>(n - p);
    const double sigma2_hat = std::max(rss, 0.0) / dof;
    const Eigen::MatrixXd gram_inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
    out.beta_hat = beta[0];
    out.se = std::sqrt(std::max(sigma2_hat * gram_inv(0, 0), 0.0));
    return out;
}

CorrectedAlpha corrected_alpha(const CorrectionInputs& ci) {
    if (!(ci.alpha > 0.0 && ci.alpha < 1.0)) throw ConfigError("corrected_alpha: alpha outside (0,1)");
    if (ci.eps_total < 0.0) throw ConfigError("corrected_alpha: negative eps_total");
    if (ci.n < 1) throw ConfigError("corrected_alpha: n must be >= 1");
    if (ci.gamma && !(*ci.gamma > 0.0 && *ci.gamma < ci.alpha))
        throw ConfigError("corrected_alpha: gamma must lie in (0, alpha)");
    if (ci.eps_total == 0.0) return {ci.alpha, 0.0};

    const double log_num = ci.log_arg_two ? 2.0 : 1.0;
    auto value = [&](double gamma) {
        return (ci.alpha - gamma) * std::exp(-max_info_bound(ci.n, ci.eps_total, gamma, log_num));
    };
    if (ci.gamma) return {value(*ci.gamma), *ci.gamma};

    // log-spaced grid over (1e-12 alpha, alpha); the objective vanishes at
    // both ends so interior points carry the max
    CorrectedAlpha best{-1.0, 0.0};
    for (int k = 0; k < 1000; ++k) {
        const double gamma = ci.alpha * std::pow(10.0, -12.0 * static_cast<double>(999 - k) / 999.0);
        if (!(gamma < ci.alpha)) continue;
        const double v = value(gamma);
        if (v > best.alpha_tilde) best = {v, gamma};
    }
    return best;
}

EffectReport build_report(const Dataset& data, const Pdag& g, const EffectTarget& target, double alpha,
                          const CorrectionInputs& correction) {
    (void)g;
    EffectReport r;
    r.target = target;
    const OlsEffect fit = ols_effect(data, target);
    r.beta_hat = fit.beta_hat;
    r.se = fit.se;
    r.ridged = fit.ridged;
    r.alpha = alpha;
    CorrectionInputs ci = correction;
    ci.alpha = alpha;
    const CorrectedAlpha ca = corrected_alpha(ci);
    r.alpha_tilde = ca.alpha_tilde;

    const double z_naive = normal_quantile(1.0 - alpha / 2.0);
    const double z_corr = normal_quantile(1.0 - r.alpha_tilde / 2.0);
    r.naive_lo = r.beta_hat - z_naive * r.se;
    r.naive_hi = r.beta_hat + z_naive * r.se;
    r.corr_lo = r.beta_hat - z_corr * r.se;
    r.corr_hi = r.beta_hat + z_corr * r.se;
    return r;
}

double fair_split_fraction(double i_bound, double alpha, double gamma) {
    if (!(i_bound >= 0.0)) throw ConfigError("fair_split_fraction: I must be >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("fair_split_fraction: alpha outside (0,1)");
    if (!(gamma > 0.0 && gamma < alpha)) throw ConfigError("fair_split_fraction: gamma must lie in (0, alpha)");
    const double inner = 0.5 * (alpha - gamma) * std::exp(-i_bound);
    const double z_num = normal_quantile(1.0 - alpha / 2.0);
    const double z_den = normal_quantile(1.0 - inner);
    double p = (z_num / z_den) * (z_num / z_den);
    if (std::isnan(p)) p = 0.0;  // z_den = +inf when alpha_tilde underflows
    return std::min(1.0, std::max(p, std::numeric_limits<double>::min()));
}

SplitResult split_pipeline(const Dataset& data, double p, double alpha, const DiscoveryConfig& cfg, RngStream rng) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("split_pipeline: p must lie in (0,1)");
    const long n = data.n();
    const long n_discovery = static_cast<long>(std::ceil((1.0 - p) * static_cast<double>(n)));
    const long n_inference = n - n_discovery;
    if (n_discovery < 3 || n_inference < 3) throw ChunkTooSmall("split_pipeline: both chunks need >= 3 rows");

    Dataset discovery_chunk{data.x.topRows(n_discovery), data.sigma2};
    Dataset inference_chunk{data.x.bottomRows(n_inference), data.sigma2};

    DiscoveryConfig plain = cfg;
    plain.mode = DiscoveryMode::PlainGes;
    plain.budget.noiseless = true;

    SplitResult out;
    out.graph = noisy_ges(discovery_chunk, plain, rng.substream(1)).graph;

    const Dag ext = pdag_to_dag(out.graph);
    std::vector<std::pair<int, int>> edges;
    for (int j = 0; j < ext.d(); ++j)
        for (int a : ext.parents(j)) edges.emplace_back(a, j);
    if (edges.empty()) return out;
    std::sort(edges.begin(), edges.end());

    RngStream pick = rng.substream(2);
    const auto [i, j] = edges[static_cast<std::size_t>(pick.next_below(edges.size()))];
    const EffectTarget target = choose_adjustment(out.graph, i, j);
    // independent chunks: no correction needed
    CorrectionInputs ci;
    ci.n = n_inference;
    ci.eps_total = 0.0;
    ci.alpha = alpha;
    out.report = build_report(inference_chunk, out.graph, target, alpha, ci);
    return out;
}

nlohmann::ordered_json report_to_json(const EffectReport& r) {
    nlohmann::ordered_json j;
    j["i"] = r.target.cause;
    j["j"] = r.target.outcome;
    j["adjustment"] = r.target.adjustment;
    j["beta_hat"] = r.beta_hat;
    j["se"] = r.se;
    j["alpha"] = r.alpha;
    j["alpha_tilde"] = r.alpha_tilde;
    j["naive_lo"] = r.naive_lo;
    j["naive_hi"] = r.naive_hi;
    j["corr_lo"] = r.corr_lo;
    j["corr_hi"] = r.corr_hi;
    return j;
}

}  // namespace noisyges
