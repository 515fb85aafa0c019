#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include <Eigen/Dense>

#include "noisyges/errors.hpp"

namespace oracles {

using noisyges::OpKind;

std::vector<Dag> all_dags(int d) {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) pairs.emplace_back(a, b);
    std::vector<Dag> out;
    std::vector<int> state(pairs.size(), 0);  // 0 none, 1 a->b, 2 b->a
    const auto total = static_cast<long>(std::pow(3.0, static_cast<double>(pairs.size())));
    for (long code = 0; code < total; ++code) {
        long c = code;
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            state[k] = static_cast<int>(c % 3);
            c /= 3;
        }
        try {
            Dag g(d);
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                if (state[k] == 1) g.add_edge(pairs[k].first, pairs[k].second);
                if (state[k] == 2) g.add_edge(pairs[k].second, pairs[k].first);
            }
            g.topological_order();
            out.push_back(std::move(g));
        } catch (const noisyges::ExtensionFailure&) {
        }
    }
    return out;
}

bool same_skeleton_and_vstructures(const Dag& g1, const Dag& g2) {
    const int d = g1.d();
    auto adjacent = [](const Dag& g, int a, int b) { return g.has_edge(a, b) || g.has_edge(b, a); };
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b)
            if (adjacent(g1, a, b) != adjacent(g2, a, b)) return false;
    auto vstructs = [&](const Dag& g) {
        std::set<std::tuple<int, int, int>> vs;
        for (int c = 0; c < d; ++c) {
            const auto& ps = g.parents(c);
            for (std::size_t i = 0; i < ps.size(); ++i)
                for (std::size_t k = i + 1; k < ps.size(); ++k)
                    if (!adjacent(g, ps[i], ps[k])) vs.insert({ps[i], ps[k], c});
        }
        return vs;
    };
    return vstructs(g1) == vstructs(g2);
}

Pdag cpdag_by_enumeration(const Dag& g, const std::vector<Dag>& dags_same_d) {
    std::vector<const Dag*> eq_class;
    for (const auto& other : dags_same_d)
        if (same_skeleton_and_vstructures(g, other)) eq_class.push_back(&other);
    Pdag out(g.d());
    for (int a = 0; a < g.d(); ++a) {
        for (int b = a + 1; b < g.d(); ++b) {
            if (!(g.has_edge(a, b) || g.has_edge(b, a))) continue;
            bool all_ab = true, all_ba = true;
            for (const Dag* m : eq_class) {
                if (!m->has_edge(a, b)) all_ab = false;
                if (!m->has_edge(b, a)) all_ba = false;
            }
            if (all_ab)
                out.add_directed_edge(a, b);
            else if (all_ba)
                out.add_directed_edge(b, a);
            else
                out.add_undirected_edge(a, b);
        }
    }
    return out;
}

std::vector<Pdag> all_cpdags(int d) {
    const auto dags = all_dags(d);
    std::vector<Pdag> out;
    for (const auto& g : dags) {
        Pdag c = cpdag_by_enumeration(g, dags);
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(std::move(c));
    }
    return out;
}

namespace {

std::vector<int> na_literal(const Pdag& g, int a, int b) {
    std::vector<int> out;
    for (int nb : g.neighbors_of(b))
        if (nb != a && g.adjacent(nb, a)) out.push_back(nb);
    return out;
}

bool clique_literal(const Pdag& g, const std::vector<int>& nodes) {
    for (int x : nodes)
        for (int y : nodes)
            if (x != y && !g.adjacent(x, y)) return false;
    return true;
}

/// Enumerate every simple semi-directed path from `from` to `to` by DFS and
/// report whether each one touches `blocked`.
bool every_path_blocked(const Pdag& g, int from, int to, const std::vector<int>& blocked) {
    std::set<int> blocked_set(blocked.begin(), blocked.end());
    std::vector<char> on_path(static_cast<std::size_t>(g.d()), 0);
    bool all_blocked = true;
    std::function<void(int, bool)> dfs = [&](int node, bool touched) {
        if (!all_blocked) return;
        touched = touched || blocked_set.count(node) > 0;
        if (node == to) {
            if (!touched) all_blocked = false;
            return;
        }
        on_path[static_cast<std::size_t>(node)] = 1;
        std::set<int> next(g.children_of(node));
        next.insert(g.neighbors_of(node).begin(), g.neighbors_of(node).end());
        for (int x : next)
            if (!on_path[static_cast<std::size_t>(x)]) dfs(x, touched);
        on_path[static_cast<std::size_t>(node)] = 0;
    };
    dfs(from, false);
    return all_blocked;
}

}  // namespace

bool operator_valid_literal(const Pdag& g, const Operator& op) {
    if (op.a == op.b) return false;
    if (op.kind == OpKind::Insert) {
        if (g.adjacent(op.a, op.b)) return false;
        for (int t : op.aux)
            if (!g.has_undirected_edge(t, op.b) || g.adjacent(t, op.a)) return false;
        std::vector<int> na_t = na_literal(g, op.a, op.b);
        na_t.insert(na_t.end(), op.aux.begin(), op.aux.end());
        std::sort(na_t.begin(), na_t.end());
        na_t.erase(std::unique(na_t.begin(), na_t.end()), na_t.end());
        if (!clique_literal(g, na_t)) return false;
        return every_path_blocked(g, op.b, op.a, na_t);
    }
    if (!g.has_undirected_edge(op.a, op.b) && !g.has_directed_edge(op.a, op.b)) return false;
    const std::vector<int> na = na_literal(g, op.a, op.b);
    for (int h : op.aux)
        if (std::find(na.begin(), na.end(), h) == na.end()) return false;
    std::vector<int> remaining;
    for (int x : na)
        if (std::find(op.aux.begin(), op.aux.end(), x) == op.aux.end()) remaining.push_back(x);
    return clique_literal(g, remaining);
}

std::vector<Operator> enumerate_operators_literal(const Pdag& g, OpKind kind) {
    std::vector<Operator> out;
    for (int a = 0; a < g.d(); ++a) {
        for (int b = 0; b < g.d(); ++b) {
            if (a == b) continue;
            std::vector<int> pool;
            if (kind == OpKind::Insert) {
                for (int nb : g.neighbors_of(b))
                    if (!g.adjacent(nb, a)) pool.push_back(nb);
            } else {
                pool = na_literal(g, a, b);
            }
            for (unsigned mask = 0; mask < (1u << pool.size()); ++mask) {
                Operator op{kind, a, b, {}};
                for (std::size_t k = 0; k < pool.size(); ++k)
                    if (mask & (1u << k)) op.aux.push_back(pool[k]);
                std::sort(op.aux.begin(), op.aux.end());
                if (operator_valid_literal(g, op)) out.push_back(std::move(op));
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

int shd_literal(const Pdag& g1, const Pdag& g2) {
    int dist = 0;
    for (int a = 0; a < g1.d(); ++a) {
        for (int b = a + 1; b < g1.d(); ++b) {
            auto code = [&](const Pdag& g) {
                if (g.has_directed_edge(a, b)) return 'f';
                if (g.has_directed_edge(b, a)) return 'r';
                if (g.has_undirected_edge(a, b)) return 'u';
                return '0';
            };
            if (code(g1) != code(g2)) ++dist;
        }
    }
    return dist;
}

double clipped_loss_at(const noisyges::Dataset& data, double clip, int target, const std::vector<int>& parents,
                       const std::vector<double>& theta) {
    double total = 0.0;
    for (long k = 0; k < data.n(); ++k) {
        double r = data.x(k, target);
        for (std::size_t c = 0; c < parents.size(); ++c) r -= theta[c] * data.x(k, parents[c]);
        total += std::min(r * r, clip);
    }
    return total / (static_cast<double>(data.n()) * data.sigma2);
}

double clipped_loss_grid_1d(const noisyges::Dataset& data, double clip, int target, int parent) {
    double best = std::numeric_limits<double>::infinity();
    for (double theta = -10.0; theta <= 10.0 + 1e-12; theta += 1e-3)
        best = std::min(best, clipped_loss_at(data, clip, target, {parent}, {theta}));
    return best;
}

double ols_bic_qr(const noisyges::Dataset& data, int target, const std::vector<int>& parents) {
    const long n = data.n();
    const Eigen::VectorXd y = data.x.col(target);
    double rss;
    if (parents.empty()) {
        rss = y.squaredNorm();
    } else {
        Eigen::MatrixXd m(n, static_cast<int>(parents.size()));
        for (std::size_t c = 0; c < parents.size(); ++c) m.col(static_cast<long>(c)) = data.x.col(parents[c]);
        const Eigen::VectorXd beta = m.colPivHouseholderQr().solve(y);
        rss = (y - m * beta).squaredNorm();
    }
    const double nn = static_cast<double>(n);
    return -rss / (nn * data.sigma2) - static_cast<double>(parents.size()) * std::log(nn) / nn;
}

double normal_quantile_bisect(double p) {
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double clipped_chisq1_mean(double c) {
    const double s = std::sqrt(c);
    const double phi = std::exp(-0.5 * c) / std::sqrt(2.0 * M_PI);
    const double upper_tail = std::erfc(s / std::sqrt(2.0));  // 2(1 - Phi(s))
    const double inner = (1.0 - upper_tail) - 2.0 * s * phi;  // E[Z^2; |Z| <= s]
    return inner + c * upper_tail;
}

namespace {

std::set<int> descendants(const Dag& g, int node) {
    std::set<int> out;
    std::function<void(int)> dfs = [&](int x) {
        for (int j = 0; j < g.d(); ++j) {
            if (g.has_edge(x, j) && !out.count(j)) {
                out.insert(j);
                dfs(j);
            }
        }
    };
    dfs(node);
    return out;
}

/// d-separation via the moralized ancestral graph.
bool d_separated(const Dag& g, int i, int j, const std::vector<int>& z) {
    std::set<int> keep{i, j};
    keep.insert(z.begin(), z.end());
    // ancestors
    bool grew = true;
    while (grew) {
        grew = false;
        for (int x : std::set<int>(keep))
            for (int p : g.parents(x))
                if (keep.insert(p).second) grew = true;
    }
    // moralize and drop directions
    std::set<std::pair<int, int>> und;
    auto link = [&](int a, int b) { und.insert({std::min(a, b), std::max(a, b)}); };
    for (int x : keep) {
        const auto& ps = g.parents(x);
        for (int p : ps)
            if (keep.count(p)) link(p, x);
        for (std::size_t u = 0; u < ps.size(); ++u)
            for (std::size_t v = u + 1; v < ps.size(); ++v)
                if (keep.count(ps[u]) && keep.count(ps[v])) link(ps[u], ps[v]);
    }
    // remove z and test connectivity
    std::set<int> zset(z.begin(), z.end());
    std::set<int> frontier{i}, seen{i};
    while (!frontier.empty()) {
        std::set<int> next;
        for (int x : frontier) {
            for (auto [a, b] : und) {
                int other = -1;
                if (a == x) other = b;
                if (b == x) other = a;
                if (other < 0 || zset.count(other) || seen.count(other)) continue;
                if (other == j) return false;
                next.insert(other);
                seen.insert(other);
            }
        }
        frontier = std::move(next);
    }
    return true;
}

}  // namespace

std::vector<std::vector<int>> all_backdoor_sets(const Dag& g, int cause, int outcome) {
    // backdoor graph: cause's outgoing edges removed
    Dag backdoor(g.d());
    for (int j = 0; j < g.d(); ++j)
        for (int p : g.parents(j))
            if (p != cause) backdoor.add_edge(p, j);
    const std::set<int> desc = descendants(g, cause);

    std::vector<int> others;
    for (int x = 0; x < g.d(); ++x)
        if (x != cause && x != outcome) others.push_back(x);
    std::vector<std::vector<int>> out;
    for (unsigned mask = 0; mask < (1u << others.size()); ++mask) {
        std::vector<int> z;
        bool ok = true;
        for (std::size_t k = 0; k < others.size(); ++k) {
            if (mask & (1u << k)) {
                if (desc.count(others[k])) {
                    ok = false;
                    break;
                }
                z.push_back(others[k]);
            }
        }
        if (ok && d_separated(backdoor, cause, outcome, z)) out.push_back(std::move(z));
    }
    return out;
}

}  // namespace oracles
