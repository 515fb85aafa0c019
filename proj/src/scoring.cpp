#include "noisyges/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "noisyges/errors.hpp"

namespace noisyges {

void Dataset::validate() const {
    if (x.rows() < 1) throw ConfigError("dataset: needs at least one row");
    if (!x.allFinite()) throw ParseError("dataset: non-finite entries");
    if (!(sigma2 > 0.0)) throw ConfigError("dataset: sigma2 must be positive");
}

void ScoreConfig::validate() const {
    if (!(clip > 0.0)) throw ConfigError("score config: clip must be positive");
}

std::size_t LocalScoreKeyHash::operator()(const LocalScoreKey& k) const {
    std::size_t h = std::hash<int>{}(k.target);
    for (int p : k.parents) h = h * 1000003u + static_cast<std::size_t>(p) + 0x9e3779b9u;
    return h;
}

namespace {

// Normal equations with an SPD factorization; degenerate designs fall back to
// a small ridge.
Eigen::VectorXd solve_ols(const Eigen::MatrixXd& m, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd gram = m.transpose() * m;
    const Eigen::VectorXd rhs = m.transpose() * y;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() == Eigen::Success) {
        Eigen::VectorXd theta = llt.solve(rhs);
        if (theta.allFinite()) return theta;
    }
    const double ridge = 1e-10 * static_cast<double>(m.rows());
    Eigen::MatrixXd reg = gram;
    reg.diagonal().array() += ridge;
    return Eigen::LLT<Eigen::MatrixXd>(reg).solve(rhs);
}

double clipped_loss(const Eigen::MatrixXd& m, const Eigen::VectorXd& y, const Eigen::VectorXd& theta, double clip,
                    double sigma2) {
    const Eigen::VectorXd r = (m.cols() > 0) ? (y - m * theta).eval() : y;
    double total = 0.0;
    for (long k = 0; k < r.size(); ++k) total += std::min(r[k] * r[k], clip);
    return total / (static_cast<double>(r.size()) * sigma2);
}

}  // namespace

namespace {

/// Iterative trimming at clip level `level` from a given start; every iterate
/// is scored in the target clipped objective and `best` keeps the lowest.
void trim_iterate(const Eigen::MatrixXd& m, const Eigen::VectorXd& y, double level, double clip, double sigma2,
                  Eigen::VectorXd theta, ClippedFit& best) {
    const long n = m.rows();
    std::vector<long> active_for_theta;  // rows the current theta was fit on; empty = unknown start
    for (int iter = 0; iter < 50; ++iter) {
        const double loss = clipped_loss(m, y, theta, clip, sigma2);
        if (loss < best.loss) best = {theta, loss};
        const Eigen::VectorXd r = y - m * theta;
        std::vector<long> keep;
        keep.reserve(static_cast<std::size_t>(n));
        for (long k = 0; k < n; ++k)
            if (r[k] * r[k] < level) keep.push_back(k);
        if (keep.empty() || keep == active_for_theta) break;
        Eigen::MatrixXd mk(static_cast<long>(keep.size()), m.cols());
        Eigen::VectorXd yk(static_cast<long>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i) {
            mk.row(static_cast<long>(i)) = m.row(keep[i]);
            yk[static_cast<long>(i)] = y[keep[i]];
        }
        theta = solve_ols(mk, yk);
        active_for_theta = std::move(keep);
    }
}

/// Exact global minimizer for one predictor: the clipped loss is piecewise
/// quadratic in theta with breakpoints (y_k -+ sqrt(C))/x_k, so a sweep over
/// segments with running active-set sums finds the minimum in O(n log n).
void exact_single_predictor(const Eigen::MatrixXd& m, const Eigen::VectorXd& y, double clip, double sigma2,
                            ClippedFit& best) {
    const long n = m.rows();
    const double root = std::sqrt(clip);
    struct Event {
        double theta;
        long row;
        bool enter;
    };
    std::vector<Event> events;
    events.reserve(2 * static_cast<std::size_t>(n));
    for (long k = 0; k < n; ++k) {
        const double xk = m(k, 0);
        if (xk == 0.0) continue;  // constant contribution, never active
        const double a = (y[k] - root) / xk;
        const double b = (y[k] + root) / xk;
        events.push_back({std::min(a, b), k, true});
        events.push_back({std::max(a, b), k, false});
    }
    if (events.empty()) return;
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.theta < b.theta; });

    double sxx = 0.0, sxy = 0.0;
    std::vector<char> active(static_cast<std::size_t>(n), 0);
    double best_theta = 0.0;
    bool found = false;
    double best_val = std::numeric_limits<double>::infinity();
    auto consider = [&](double theta, double lo, double hi) {
        const double th = std::min(hi, std::max(lo, theta));
        // evaluate only the active quadratic part; constants are shared
        double val = 0.0;
        for (long k = 0; k < n; ++k) {
            const double r = y[k] - th * m(k, 0);
            val += std::min(r * r, clip);
        }
        if (val < best_val) {
            best_val = val;
            best_theta = th;
            found = true;
        }
    };
    std::size_t i = 0;
    while (i < events.size()) {
        const double lo = events[i].theta;
        while (i < events.size() && events[i].theta == lo) {
            const auto& e = events[i];
            const double xk = m(e.row, 0);
            if (e.enter) {
                active[static_cast<std::size_t>(e.row)] = 1;
                sxx += xk * xk;
                sxy += xk * y[e.row];
            } else {
                active[static_cast<std::size_t>(e.row)] = 0;
                sxx -= xk * xk;
                sxy -= xk * y[e.row];
            }
            ++i;
        }
        const double hi = (i < events.size()) ? events[i].theta : lo;
        if (sxx > 0.0) consider(sxy / sxx, lo, hi);
    }
    if (found) {
        Eigen::VectorXd theta(1);
        theta[0] = best_theta;
        const double loss = best_val / (static_cast<double>(n) * sigma2);
        if (loss < best.loss) best = {theta, loss};
    }
}

}  // namespace

ClippedFit fit_clipped_ols(const Dataset& data, const ScoreConfig& cfg, const LocalScoreKey& key) {
    const long n = data.n();
    if (key.target < 0 || key.target >= data.d()) throw IndexError("fit_clipped_ols: target out of range");
    for (int p : key.parents) {
        if (p < 0 || p >= data.d()) throw IndexError("fit_clipped_ols: parent out of range");
        if (p == key.target) throw ConfigError("fit_clipped_ols: target in parent set");
    }

    const Eigen::VectorXd y = data.x.col(key.target);
    const int p = static_cast<int>(key.parents.size());
    Eigen::MatrixXd m(n, p);
    for (int c = 0; c < p; ++c) m.col(c) = data.x.col(key.parents[static_cast<std::size_t>(c)]);

    ClippedFit best;
    if (p == 0) {
        best.theta.resize(0);
        best.loss = clipped_loss(m, y, best.theta, cfg.clip, data.sigma2);
        return best;
    }

    const Eigen::VectorXd theta0 = solve_ols(m, y);
    best = {theta0, clipped_loss(m, y, theta0, cfg.clip, data.sigma2)};
    if (!cfg.clipped()) return best;

    // Baseline: iterative trimming from the OLS start. The clipped objective
    // is multi-modal, so the refinements below add deterministic restarts
    // that only ever lower the returned loss.
    trim_iterate(m, y, cfg.clip, cfg.clip, data.sigma2, theta0, best);

    if (p == 1) {
        exact_single_predictor(m, y, cfg.clip, data.sigma2, best);
        return best;
    }

    // Clip continuation: trim at levels halving from "nothing clips" down to
    // the target clip, restarting each level from the incumbent.
    const Eigen::VectorXd r0 = y - m * theta0;
    double level = cfg.clip;
    for (long k = 0; k < n; ++k) level = std::max(level, r0[k] * r0[k]);
    while (level > cfg.clip) {
        level = std::max(cfg.clip, 0.5 * level);
        trim_iterate(m, y, level, cfg.clip, data.sigma2, best.theta, best);
    }

    // Small problems: exact-fit starts from every p-row subset (the classic
    // elemental-set device for trimmed squares).
    if (n <= 64 && p <= 3) {
        std::vector<long> rows(static_cast<std::size_t>(p));
        std::function<void(long, int)> recurse = [&](long from, int depth) {
            if (depth == p) {
                Eigen::MatrixXd msub(p, p);
                Eigen::VectorXd ysub(p);
                for (int i = 0; i < p; ++i) {
                    msub.row(i) = m.row(rows[static_cast<std::size_t>(i)]);
                    ysub[i] = y[rows[static_cast<std::size_t>(i)]];
                }
                const Eigen::FullPivLU<Eigen::MatrixXd> lu(msub);
                if (!lu.isInvertible()) return;
                trim_iterate(m, y, cfg.clip, cfg.clip, data.sigma2, lu.solve(ysub), best);
                return;
            }
            for (long k = from; k < n; ++k) {
                rows[static_cast<std::size_t>(depth)] = k;
                recurse(k + 1, depth + 1);
            }
        };
        recurse(0, 0);
    }
    return best;
}

double local_clipped_bic(const Dataset& data, const ScoreConfig& cfg, const LocalScoreKey& key) {
    const double n = static_cast<double>(data.n());
    const double penalty =
        cfg.penalty_scale * static_cast<double>(key.parents.size()) * std::log(n) / n;
    return -fit_clipped_ols(data, cfg, key).loss - penalty;
}

double local_score_sensitivity(const Dataset& data, const ScoreConfig& cfg) {
    if (!cfg.clipped()) throw InfiniteClip("local_score_sensitivity: unclipped score has unbounded sensitivity");
    return cfg.clip / (static_cast<double>(data.n()) * data.sigma2);
}

double LocalScorer::local_score(const LocalScoreKey& key) const {
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double s = local_clipped_bic(data_, cfg_, key);
    cache_.emplace(key, s);
    return s;
}

double LocalScorer::local_score(int target, const std::vector<int>& sorted_parents) const {
    return local_score(LocalScoreKey{target, sorted_parents});
}

double LocalScorer::dag_score(const Dag& g) const {
    double total = 0.0;
    for (int j = 0; j < g.d(); ++j) total += local_score(j, g.parents(j));
    return total;
}

namespace {

std::vector<int> sorted_union(std::vector<int> xs, std::initializer_list<int> extra) {
    for (int e : extra) xs.push_back(e);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

}  // namespace

double score_gain(const LocalScorer& scorer, const Pdag& g, const Operator& op) {
    if (!is_operator_valid(g, op)) throw InvalidOperator("score_gain: " + op.to_string() + " invalid");
    const std::vector<int> na = neighbors_na(g, op.a, op.b);
    const auto& pa_set = g.parents_of(op.b);
    std::vector<int> pa(pa_set.begin(), pa_set.end());

    if (op.kind == OpKind::Insert) {
        std::vector<int> base = na;
        base.insert(base.end(), op.aux.begin(), op.aux.end());
        base.insert(base.end(), pa.begin(), pa.end());
        base = sorted_union(std::move(base), {});
        const std::vector<int> with_a = sorted_union(base, {op.a});
        return scorer.local_score(op.b, with_a) - scorer.local_score(op.b, base);
    }
    // Delete: NA \ H, plus the parents; the pre-deletion set includes a
    // whether a->b was directed or a-b undirected.
    std::vector<int> na_minus_h;
    for (int x : na)
        if (!std::binary_search(op.aux.begin(), op.aux.end(), x)) na_minus_h.push_back(x);
    std::vector<int> base = na_minus_h;
    base.insert(base.end(), pa.begin(), pa.end());
    const std::vector<int> with_a = sorted_union(base, {op.a});
    std::vector<int> without_a;
    for (int x : with_a)
        if (x != op.a) without_a.push_back(x);
    return scorer.local_score(op.b, without_a) - scorer.local_score(op.b, with_a);
}

double score_gain(const Dataset& data, const ScoreConfig& cfg, const Pdag& g, const Operator& op) {
    LocalScorer scorer(data, cfg);
    return score_gain(scorer, g, op);
}

}  // namespace noisyges
