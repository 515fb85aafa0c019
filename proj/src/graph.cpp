#include "noisyges/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include <nlohmann/json.hpp>

#include "noisyges/errors.hpp"

namespace noisyges {

// ---------------------------------------------------------------------------
// Dag

Dag::Dag(int d) : d_(d), parents_(static_cast<std::size_t>(d)) {
    if (d < 1) throw DimensionMismatch("Dag: node count must be >= 1");
}

Dag::Dag(int d, const std::vector<std::vector<int>>& parents) : Dag(d) {
    if (static_cast<int>(parents.size()) != d) throw DimensionMismatch("Dag: parents list size != d");
    for (int j = 0; j < d; ++j) {
        for (int p : parents[j]) add_edge(p, j);
    }
    topological_order();  // throws on cycles
}

void Dag::check_node(int node) const {
    if (node < 0 || node >= d_) throw IndexError("Dag: node index out of range");
}

const std::vector<int>& Dag::parents(int node) const {
    check_node(node);
    return parents_[static_cast<std::size_t>(node)];
}

bool Dag::has_edge(int from, int to) const {
    check_node(from);
    check_node(to);
    const auto& ps = parents_[static_cast<std::size_t>(to)];
    return std::binary_search(ps.begin(), ps.end(), from);
}

void Dag::add_edge(int from, int to) {
    check_node(from);
    check_node(to);
    if (from == to) throw InvalidOperator("Dag: self loop");
    auto& ps = parents_[static_cast<std::size_t>(to)];
    auto it = std::lower_bound(ps.begin(), ps.end(), from);
    if (it != ps.end() && *it == from) throw InvalidOperator("Dag: duplicate edge");
    ps.insert(it, from);
}

std::vector<int> Dag::topological_order() const {
    std::vector<int> remaining_parents(static_cast<std::size_t>(d_));
    std::vector<std::vector<int>> children(static_cast<std::size_t>(d_));
    for (int j = 0; j < d_; ++j) {
        remaining_parents[static_cast<std::size_t>(j)] = static_cast<int>(parents_[static_cast<std::size_t>(j)].size());
        for (int p : parents_[static_cast<std::size_t>(j)]) children[static_cast<std::size_t>(p)].push_back(j);
    }
    std::set<int> ready;
    for (int j = 0; j < d_; ++j)
        if (remaining_parents[static_cast<std::size_t>(j)] == 0) ready.insert(j);
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(d_));
    while (!ready.empty()) {
        const int node = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(node);
        for (int c : children[static_cast<std::size_t>(node)])
            if (--remaining_parents[static_cast<std::size_t>(c)] == 0) ready.insert(c);
    }
    if (static_cast<int>(order.size()) != d_) throw ExtensionFailure("Dag: directed cycle");
    return order;
}

Pdag Dag::to_pdag() const {
    Pdag g(d_);
    for (int j = 0; j < d_; ++j)
        for (int p : parents_[static_cast<std::size_t>(j)]) g.add_directed_edge(p, j);
    return g;
}

bool Dag::operator==(const Dag& other) const { return d_ == other.d_ && parents_ == other.parents_; }

// ---------------------------------------------------------------------------
// Pdag

Pdag::Pdag(int d)
    : d_(d),
      parents_(static_cast<std::size_t>(d)),
      children_(static_cast<std::size_t>(d)),
      neighbors_(static_cast<std::size_t>(d)) {
    if (d < 1) throw DimensionMismatch("Pdag: node count must be >= 1");
}

void Pdag::check_node(int node) const {
    if (node < 0 || node >= d_) throw IndexError("Pdag: node index out of range");
}

bool Pdag::has_directed_edge(int from, int to) const {
    check_node(from);
    check_node(to);
    return children_[static_cast<std::size_t>(from)].count(to) > 0;
}

bool Pdag::has_undirected_edge(int a, int b) const {
    check_node(a);
    check_node(b);
    return neighbors_[static_cast<std::size_t>(a)].count(b) > 0;
}

bool Pdag::adjacent(int a, int b) const {
    return has_directed_edge(a, b) || has_directed_edge(b, a) || has_undirected_edge(a, b);
}

void Pdag::add_directed_edge(int from, int to) {
    check_node(from);
    check_node(to);
    if (from == to) throw InvalidOperator("Pdag: self loop");
    if (adjacent(from, to)) throw InvalidOperator("Pdag: nodes already adjacent");
    children_[static_cast<std::size_t>(from)].insert(to);
    parents_[static_cast<std::size_t>(to)].insert(from);
}

void Pdag::add_undirected_edge(int a, int b) {
    check_node(a);
    check_node(b);
    if (a == b) throw InvalidOperator("Pdag: self loop");
    if (adjacent(a, b)) throw InvalidOperator("Pdag: nodes already adjacent");
    neighbors_[static_cast<std::size_t>(a)].insert(b);
    neighbors_[static_cast<std::size_t>(b)].insert(a);
}

void Pdag::remove_directed_edge(int from, int to) {
    if (!has_directed_edge(from, to)) throw InvalidOperator("Pdag: no such directed edge");
    children_[static_cast<std::size_t>(from)].erase(to);
    parents_[static_cast<std::size_t>(to)].erase(from);
}

void Pdag::remove_undirected_edge(int a, int b) {
    if (!has_undirected_edge(a, b)) throw InvalidOperator("Pdag: no such undirected edge");
    neighbors_[static_cast<std::size_t>(a)].erase(b);
    neighbors_[static_cast<std::size_t>(b)].erase(a);
}

void Pdag::orient_edge(int from, int to) {
    remove_undirected_edge(from, to);
    add_directed_edge(from, to);
}

const std::set<int>& Pdag::parents_of(int node) const {
    check_node(node);
    return parents_[static_cast<std::size_t>(node)];
}

const std::set<int>& Pdag::children_of(int node) const {
    check_node(node);
    return children_[static_cast<std::size_t>(node)];
}

const std::set<int>& Pdag::neighbors_of(int node) const {
    check_node(node);
    return neighbors_[static_cast<std::size_t>(node)];
}

std::set<int> Pdag::adjacent_of(int node) const {
    check_node(node);
    std::set<int> out = neighbors_[static_cast<std::size_t>(node)];
    out.insert(parents_[static_cast<std::size_t>(node)].begin(), parents_[static_cast<std::size_t>(node)].end());
    out.insert(children_[static_cast<std::size_t>(node)].begin(), children_[static_cast<std::size_t>(node)].end());
    return out;
}

int Pdag::num_edges() const {
    int nd = 0, nu = 0;
    for (int j = 0; j < d_; ++j) {
        nd += static_cast<int>(children_[static_cast<std::size_t>(j)].size());
        nu += static_cast<int>(neighbors_[static_cast<std::size_t>(j)].size());
    }
    return nd + nu / 2;  // undirected edges are stored at both endpoints
}

std::vector<std::pair<int, int>> Pdag::directed_edges() const {
    std::vector<std::pair<int, int>> out;
    for (int j = 0; j < d_; ++j)
        for (int c : children_[static_cast<std::size_t>(j)]) out.emplace_back(j, c);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<int, int>> Pdag::undirected_edges() const {
    std::vector<std::pair<int, int>> out;
    for (int j = 0; j < d_; ++j)
        for (int nb : neighbors_[static_cast<std::size_t>(j)])
            if (j < nb) out.emplace_back(j, nb);
    std::sort(out.begin(), out.end());
    return out;
}

bool Pdag::operator==(const Pdag& other) const {
    return d_ == other.d_ && children_ == other.children_ && neighbors_ == other.neighbors_;
}

bool Pdag::operator<(const Pdag& other) const {
    if (d_ != other.d_) return d_ < other.d_;
    if (children_ != other.children_) return children_ < other.children_;
    return neighbors_ < other.neighbors_;
}

std::string Pdag::to_string() const {
    std::ostringstream os;
    os << "{d=" << d_;
    for (auto [a, b] : directed_edges()) os << " " << a << "->" << b;
    for (auto [a, b] : undirected_edges()) os << " " << a << "--" << b;
    os << "}";
    return os.str();
}

// ---------------------------------------------------------------------------
// Operator

bool Operator::operator==(const Operator& other) const {
    return kind == other.kind && a == other.a && b == other.b && aux == other.aux;
}

bool Operator::operator<(const Operator& other) const {
    if (kind != other.kind) return kind < other.kind;
    if (a != other.a) return a < other.a;
    if (b != other.b) return b < other.b;
    return aux < other.aux;
}

std::string Operator::to_string() const {
    std::ostringstream os;
    os << (kind == OpKind::Insert ? "Insert(" : "Delete(") << a << "," << b << ",{";
    for (std::size_t i = 0; i < aux.size(); ++i) os << (i ? "," : "") << aux[i];
    os << "})";
    return os.str();
}

// ---------------------------------------------------------------------------
// Operator calculus

std::vector<int> neighbors_na(const Pdag& g, int a, int b) {
    if (a == b) throw IndexError("neighbors_na: a == b");
    std::vector<int> out;
    for (int nb : g.neighbors_of(b))
        if (nb != a && g.adjacent(nb, a)) out.push_back(nb);
    return out;
}

bool is_clique(const Pdag& g, const std::vector<int>& nodes) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
            if (!g.adjacent(nodes[i], nodes[j])) return false;
    return true;
}

bool blocks_all_semidirected_paths(const Pdag& g, int from, int to, const std::vector<int>& blocked) {
    // BFS over undirected + outgoing directed edges, skipping blocked nodes.
    std::vector<char> visited(static_cast<std::size_t>(g.d()), 0);
    std::vector<char> is_blocked(static_cast<std::size_t>(g.d()), 0);
    for (int x : blocked) is_blocked[static_cast<std::size_t>(x)] = 1;
    if (is_blocked[static_cast<std::size_t>(from)]) return true;
    std::deque<int> queue{from};
    visited[static_cast<std::size_t>(from)] = 1;
    while (!queue.empty()) {
        const int node = queue.front();
        queue.pop_front();
        auto visit = [&](int next) {
            if (next == to) return true;
            if (!visited[static_cast<std::size_t>(next)] && !is_blocked[static_cast<std::size_t>(next)]) {
                visited[static_cast<std::size_t>(next)] = 1;
                queue.push_back(next);
            }
            return false;
        };
        for (int next : g.children_of(node))
            if (visit(next)) return false;
        for (int next : g.neighbors_of(node))
            if (visit(next)) return false;
    }
    return true;
}

namespace {

bool insert_structure_ok(const Pdag& g, const Operator& op) {
    if (op.a == op.b || op.a < 0 || op.b < 0 || op.a >= g.d() || op.b >= g.d()) return false;
    if (g.adjacent(op.a, op.b)) return false;
    for (int t : op.aux) {
        if (!g.has_undirected_edge(t, op.b)) return false;
        if (g.adjacent(t, op.a)) return false;
    }
    return true;
}

bool delete_structure_ok(const Pdag& g, const Operator& op) {
    if (op.a == op.b || op.a < 0 || op.b < 0 || op.a >= g.d() || op.b >= g.d()) return false;
    if (!g.has_undirected_edge(op.a, op.b) && !g.has_directed_edge(op.a, op.b)) return false;
    for (int h : op.aux) {
        if (!g.has_undirected_edge(h, op.b)) return false;
        if (!g.adjacent(h, op.a)) return false;
    }
    return true;
}

std::vector<int> set_union_sorted(std::vector<int> xs, const std::vector<int>& ys) {
    xs.insert(xs.end(), ys.begin(), ys.end());
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

}  // namespace

bool is_operator_valid(const Pdag& g, const Operator& op) {
    if (op.kind == OpKind::Insert) {
        if (!insert_structure_ok(g, op)) return false;
        const std::vector<int> na_t = set_union_sorted(neighbors_na(g, op.a, op.b), op.aux);
        if (!is_clique(g, na_t)) return false;
        return blocks_all_semidirected_paths(g, op.b, op.a, na_t);
    }
    if (!delete_structure_ok(g, op)) return false;
    std::vector<int> na = neighbors_na(g, op.a, op.b);
    std::vector<int> na_minus_h;
    for (int x : na)
        if (!std::binary_search(op.aux.begin(), op.aux.end(), x)) na_minus_h.push_back(x);
    return is_clique(g, na_minus_h);
}

std::vector<Operator> enumerate_valid_operators(const Pdag& g, OpKind kind, int max_aux_pool) {
    std::vector<Operator> out;
    const int d = g.d();
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            if (a == b) continue;
            std::vector<int> pool;
            if (kind == OpKind::Insert) {
                if (g.adjacent(a, b)) continue;
                for (int nb : g.neighbors_of(b))
                    if (!g.adjacent(nb, a)) pool.push_back(nb);
            } else {
                if (!g.has_undirected_edge(a, b) && !g.has_directed_edge(a, b)) continue;
                pool = neighbors_na(g, a, b);
            }
            if (static_cast<int>(pool.size()) > max_aux_pool)
                throw OperatorPoolTooLarge("enumerate_valid_operators: aux pool exceeds cap at pair (" +
                                           std::to_string(a) + "," + std::to_string(b) + ")");
            // All subsets of the pool; a non-clique NA u T stays non-clique
            // under supersets, so those branches are cut early for inserts.
            const std::vector<int> na = (kind == OpKind::Insert) ? neighbors_na(g, a, b) : pool;
            std::vector<int> aux;
            auto recurse = [&](auto&& self, std::size_t idx) -> void {
                Operator op{kind, a, b, aux};
                if (kind == OpKind::Insert) {
                    const std::vector<int> na_t = set_union_sorted(na, aux);
                    if (!is_clique(g, na_t)) return;  // prunes all supersets
                    if (blocks_all_semidirected_paths(g, b, a, na_t)) out.push_back(std::move(op));
                } else {
                    if (is_operator_valid(g, op)) out.push_back(std::move(op));
                }
                for (std::size_t k = idx; k < pool.size(); ++k) {
                    aux.push_back(pool[k]);
                    self(self, k + 1);
                    aux.pop_back();
                }
            };
            recurse(recurse, 0);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Cpdag apply_operator(const Cpdag& g, const Operator& op) {
    if (!is_operator_valid(g, op)) throw InvalidOperator("apply_operator: " + op.to_string() + " invalid for " + g.to_string());
    Pdag p = g;
    if (op.kind == OpKind::Insert) {
        p.add_directed_edge(op.a, op.b);
        for (int t : op.aux) p.orient_edge(t, op.b);
    } else {
        if (p.has_undirected_edge(op.a, op.b))
            p.remove_undirected_edge(op.a, op.b);
        else
            p.remove_directed_edge(op.a, op.b);
        for (int h : op.aux) {
            p.orient_edge(op.b, h);
            if (p.has_undirected_edge(op.a, h)) p.orient_edge(op.a, h);
        }
    }
    return dag_to_cpdag(pdag_to_dag(p));
}

Dag pdag_to_dag(const Pdag& g) {
    const int d = g.d();
    Pdag work = g;
    Dag result(d);
    for (auto [from, to] : g.directed_edges()) result.add_edge(from, to);

    std::vector<char> removed(static_cast<std::size_t>(d), 0);
    for (int round = 0; round < d; ++round) {
        // A node can be eliminated when it has no outgoing directed edge and
        // its undirected neighbors are adjacent to all of its other adjacent
        // nodes. Scanning from the highest index keeps low-index nodes early
        // in the implied topological order.
        int sink = -1;
        for (int x = d - 1; x >= 0; --x) {
            if (removed[static_cast<std::size_t>(x)]) continue;
            if (!work.children_of(x).empty()) continue;
            bool ok = true;
            const auto adj_x = work.adjacent_of(x);
            for (int y : work.neighbors_of(x)) {
                for (int z : adj_x) {
                    if (z != y && !work.adjacent(y, z)) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) break;
            }
            if (ok) {
                sink = x;
                break;
            }
        }
        if (sink < 0) throw ExtensionFailure("pdag_to_dag: no consistent extension");
        const std::vector<int> nbs(work.neighbors_of(sink).begin(), work.neighbors_of(sink).end());
        for (int y : nbs) {
            work.remove_undirected_edge(y, sink);
            result.add_edge(y, sink);
        }
        const std::vector<int> ps(work.parents_of(sink).begin(), work.parents_of(sink).end());
        for (int p : ps) work.remove_directed_edge(p, sink);
        removed[static_cast<std::size_t>(sink)] = 1;
    }
    result.topological_order();  // sanity: extension must be acyclic
    return result;
}

Cpdag dag_to_cpdag(const Dag& g) {
    const int d = g.d();
    Pdag skel(d);
    // Start from the pattern: v-structure edges directed, the rest undirected.
    auto dag_adjacent = [&](int a, int b) { return g.has_edge(a, b) || g.has_edge(b, a); };
    std::set<std::pair<int, int>> compelled;
    for (int j = 0; j < d; ++j) {
        const auto& ps = g.parents(j);
        for (std::size_t i = 0; i < ps.size(); ++i)
            for (std::size_t k = i + 1; k < ps.size(); ++k)
                if (!dag_adjacent(ps[i], ps[k])) {
                    compelled.insert({ps[i], j});
                    compelled.insert({ps[k], j});
                }
    }
    for (int j = 0; j < d; ++j) {
        for (int p : g.parents(j)) {
            if (compelled.count({p, j}))
                skel.add_directed_edge(p, j);
            else
                skel.add_undirected_edge(p, j);
        }
    }

    // Meek rules R1-R3 to fixpoint; starting from a DAG pattern this closure
    // is exactly the CPDAG.
    bool changed = true;
    while (changed) {
        changed = false;
        for (int b = 0; b < d; ++b) {
            const std::vector<int> nbs(skel.neighbors_of(b).begin(), skel.neighbors_of(b).end());
            for (int c : nbs) {
                if (!skel.has_undirected_edge(b, c)) continue;
                bool orient = false;
                // R1: a -> b - c with a, c non-adjacent  =>  b -> c
                for (int a : skel.parents_of(b)) {
                    if (a != c && !skel.adjacent(a, c)) {
                        orient = true;
                        break;
                    }
                }
                // R2: b -> x -> c with b - c  =>  b -> c
                if (!orient) {
                    for (int x : skel.children_of(b)) {
                        if (skel.has_directed_edge(x, c)) {
                            orient = true;
                            break;
                        }
                    }
                }
                // R3: b - x, b - y, x -> c, y -> c, x, y non-adjacent  =>  b -> c
                if (!orient) {
                    const auto& bn = skel.neighbors_of(b);
                    std::vector<int> into_c;
                    for (int x : bn)
                        if (x != c && skel.has_directed_edge(x, c)) into_c.push_back(x);
                    for (std::size_t i = 0; i < into_c.size() && !orient; ++i)
                        for (std::size_t k = i + 1; k < into_c.size(); ++k)
                            if (!skel.adjacent(into_c[i], into_c[k])) {
                                orient = true;
                                break;
                            }
                }
                if (orient) {
                    skel.orient_edge(b, c);
                    changed = true;
                }
            }
        }
    }
    return skel;
}

int shd(const Pdag& g1, const Pdag& g2) {
    if (g1.d() != g2.d()) throw DimensionMismatch("shd: node counts differ");
    auto status = [](const Pdag& g, int a, int b) -> int {
        if (g.has_directed_edge(a, b)) return 1;
        if (g.has_directed_edge(b, a)) return 2;
        if (g.has_undirected_edge(a, b)) return 3;
        return 0;
    };
    int dist = 0;
    for (int a = 0; a < g1.d(); ++a)
        for (int b = a + 1; b < g1.d(); ++b)
            if (status(g1, a, b) != status(g2, a, b)) ++dist;
    return dist;
}

nlohmann::ordered_json graph_to_json(const Pdag& g) {
    nlohmann::ordered_json j;
    j["d"] = g.d();
    j["directed"] = nlohmann::json::array();
    for (auto [a, b] : g.directed_edges()) j["directed"].push_back({a, b});
    j["undirected"] = nlohmann::json::array();
    for (auto [a, b] : g.undirected_edges()) j["undirected"].push_back({a, b});
    return j;
}

Pdag graph_from_json(const nlohmann::json& j) {
    try {
        Pdag g(j.at("d").get<int>());
        for (const auto& e : j.at("directed")) g.add_directed_edge(e.at(0).get<int>(), e.at(1).get<int>());
        for (const auto& e : j.at("undirected")) g.add_undirected_edge(e.at(0).get<int>(), e.at(1).get<int>());
        return g;
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("graph_from_json: ") + ex.what());
    }
}

}  // namespace noisyges
