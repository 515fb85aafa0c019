#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace noisyges {

class Pdag;

/// Directed acyclic graph stored as per-node parent sets.
class Dag {
public:
    Dag() = default;
    explicit Dag(int d);
    Dag(int d, const std::vector<std::vector<int>>& parents);

    int d() const { return d_; }
    const std::vector<int>& parents(int node) const;
    bool has_edge(int from, int to) const;
    void add_edge(int from, int to);

    /// Topological order (lowest-index-first among available sources).
    /// Throws ExtensionFailure if the graph has a cycle.
    std::vector<int> topological_order() const;

    /// The same graph as a partially directed graph with no undirected edges.
    Pdag to_pdag() const;

    bool operator==(const Dag& other) const;

private:
    void check_node(int node) const;

    int d_ = 0;
    std::vector<std::vector<int>> parents_;  // each sorted ascending
};

/// Partially directed graph over nodes 0..d-1 with directed and undirected
/// edges kept in per-node adjacency sets. Completed instances represent
/// CPDAGs; the same type carries the intermediate PDAG states of operator
/// application.
class Pdag {
public:
    Pdag() = default;
    explicit Pdag(int d);

    int d() const { return d_; }

    bool has_directed_edge(int from, int to) const;
    bool has_undirected_edge(int a, int b) const;
    bool adjacent(int a, int b) const;

    void add_directed_edge(int from, int to);
    void add_undirected_edge(int a, int b);
    void remove_directed_edge(int from, int to);
    void remove_undirected_edge(int a, int b);
    /// Replace an undirected a-b edge by a directed from->to edge.
    void orient_edge(int from, int to);

    const std::set<int>& parents_of(int node) const;
    const std::set<int>& children_of(int node) const;
    const std::set<int>& neighbors_of(int node) const;  // undirected only
    std::set<int> adjacent_of(int node) const;          // any edge

    int num_edges() const;

    /// Edges as sorted pair lists; undirected pairs are reported as (min, max).
    std::vector<std::pair<int, int>> directed_edges() const;
    std::vector<std::pair<int, int>> undirected_edges() const;

    bool operator==(const Pdag& other) const;
    bool operator<(const Pdag& other) const;  // lexicographic, for use as map key

    std::string to_string() const;

private:
    void check_node(int node) const;

    int d_ = 0;
    std::vector<std::set<int>> parents_, children_, neighbors_;
};

/// A CPDAG is a completed Pdag. Completedness is a semantic invariant
/// (closure under the extend/re-complete round trip), checked by tests and
/// guaranteed for outputs of dag_to_cpdag / apply_operator.
using Cpdag = Pdag;

enum class OpKind { Insert, Delete };

/// An Insert(a, b, T) or Delete(a, b, H) move. `aux` holds T resp. H, sorted.
struct Operator {
    OpKind kind = OpKind::Insert;
    int a = 0;
    int b = 0;
    std::vector<int> aux;

    bool operator==(const Operator& other) const;
    bool operator<(const Operator& other) const;
    std::string to_string() const;
};

/// NA_{b,a}: neighbors of b (undirected) that are adjacent to a.
std::vector<int> neighbors_na(const Pdag& g, int a, int b);

bool is_clique(const Pdag& g, const std::vector<int>& nodes);

/// True iff every semi-directed path from `from` to `to` contains a node of
/// `blocked`. A path is semi-directed if each edge is undirected or points
/// away from `from`.
bool blocks_all_semidirected_paths(const Pdag& g, int from, int to, const std::vector<int>& blocked);

bool is_operator_valid(const Pdag& g, const Operator& op);

/// All valid operators of one kind, sorted by (kind, a, b, aux). Aux sets are
/// enumerated exhaustively over the candidate pool; pools larger than
/// `max_aux_pool` raise OperatorPoolTooLarge.
std::vector<Operator> enumerate_valid_operators(const Pdag& g, OpKind kind, int max_aux_pool = 12);

/// Apply a valid operator: perform the edge modifications, extend the
/// resulting PDAG to a consistent DAG, and re-complete to a CPDAG.
Cpdag apply_operator(const Cpdag& g, const Operator& op);

/// Deterministic consistent extension (Dor-Tarsi sink elimination). Ties are
/// broken so that lower-index nodes come earlier in the topological order.
/// Throws ExtensionFailure when no extension exists.
Dag pdag_to_dag(const Pdag& g);

/// Complete a DAG to the CPDAG of its Markov equivalence class (shared
/// skeleton and v-structures).
Cpdag dag_to_cpdag(const Dag& g);

/// Structural Hamming distance: number of node pairs whose edge status
/// (none / a->b / b->a / undirected) differs. Any mismatch costs 1.
int shd(const Pdag& g1, const Pdag& g2);

/// Graph JSON: {"d": int, "directed": [[a,b],...], "undirected": [[a,b],...]},
/// 0-based, pairs sorted lexicographically.
nlohmann::ordered_json graph_to_json(const Pdag& g);
Pdag graph_from_json(const nlohmann::json& j);

}  // namespace noisyges
