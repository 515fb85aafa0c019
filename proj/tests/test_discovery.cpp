#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "noisyges/discovery.hpp"
#include "noisyges/errors.hpp"
#include "noisyges/simulate.hpp"

using namespace noisyges;

namespace {

SemModel chain2(double weight = 3.0) {
    SemModel m = gen_empty(2);
    m.true_dag.add_edge(0, 1);
    m.w(0, 1) = weight;
    m.true_cpdag = dag_to_cpdag(m.true_dag);
    return m;
}

DiscoveryConfig plain_cfg(int e_max = 10) {
    DiscoveryConfig cfg;
    cfg.mode = DiscoveryMode::PlainGes;
    cfg.budget = PrivacyBudget::none();
    cfg.budget.e_max = e_max;
    cfg.score_cfg.clip = std::numeric_limits<double>::infinity();
    return cfg;
}

DiscoveryConfig noisy_cfg(const Dataset& data, double eps_coeff = 1.0, int e_max = 10) {
    DiscoveryConfig cfg;
    cfg.mode = DiscoveryMode::NoisyGes;
    const double n = static_cast<double>(data.n());
    cfg.score_cfg.clip = std::log(n) / 3.0;
    cfg.budget.e_max = e_max;
    cfg.budget.eps_score = eps_coeff / std::sqrt(n);
    cfg.budget.eps_thresh = static_cast<double>(e_max) * cfg.budget.eps_score;
    cfg.budget.tau = local_score_sensitivity(data, cfg.score_cfg);
    return cfg;
}

}  // namespace

TEST_CASE("exact search: two-candidate example and degenerate cases") {
    const Dataset data = sample_sem(chain2(), 2000, RngStream(41, 0));
    DiscoveryConfig cfg;
    cfg.mode = DiscoveryMode::ExactSearch;
    cfg.budget = PrivacyBudget::none();
    cfg.score_cfg.clip = std::numeric_limits<double>::infinity();
    Pdag g1(2);
    g1.add_directed_edge(0, 1);
    cfg.candidate_family = {g1, Pdag(2)};

    SUBCASE("dependent data, noiseless: the edge wins") {
        const auto res = exact_noisy_search(data, cfg, RngStream(42, 0));
        CHECK(res.graph == g1);
        CHECK(res.trace.chosen == 0);
        CHECK(res.trace.scores[0] > res.trace.scores[1]);
    }
    SUBCASE("single candidate is returned regardless of noise") {
        cfg.candidate_family = {Pdag(2)};
        cfg.budget = PrivacyBudget{0.5, 0.0, 1, 1e-3, false};
        cfg.score_cfg.clip = 1.0;
        const auto res = exact_noisy_search(data, cfg, RngStream(43, 0));
        CHECK(res.graph == Pdag(2));
    }
    SUBCASE("empty family throws") {
        cfg.candidate_family.clear();
        CHECK_THROWS_AS(exact_noisy_search(data, cfg, RngStream(0, 0)), EmptyCandidates);
    }
    SUBCASE("finite epsilon with infinite clip throws") {
        cfg.budget = PrivacyBudget{0.5, 0.0, 1, 1e-3, false};
        CHECK_THROWS_AS(exact_noisy_search(data, cfg, RngStream(0, 0)), InfiniteClip);
    }
}

TEST_CASE("exact search: independent columns select the empty graph") {
    int empty_wins = 0;
    DiscoveryConfig cfg;
    cfg.mode = DiscoveryMode::ExactSearch;
    cfg.budget = PrivacyBudget::none();
    cfg.score_cfg.clip = std::numeric_limits<double>::infinity();
    Pdag g1(2);
    g1.add_directed_edge(0, 1);
    for (int trial = 0; trial < 40; ++trial) {
        const Dataset data = sample_sem(gen_empty(2), 10000, RngStream(44, static_cast<std::uint64_t>(trial)));
        cfg.candidate_family = {g1, Pdag(2)};
        if (exact_noisy_search(data, cfg, RngStream(45, 0)).graph == Pdag(2)) ++empty_wins;
    }
    CHECK(empty_wins >= 38);  // >= 95%
}

TEST_CASE("noisy_ges noiseless: chain data recovers the single-edge class") {
    int hits = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const Dataset data = sample_sem(chain2(), 1000, RngStream(46, static_cast<std::uint64_t>(trial)));
        const auto res = noisy_ges(data, plain_cfg(), RngStream(47, 0));
        Pdag want(2);
        want.add_undirected_edge(0, 1);
        if (res.graph == want) ++hits;
    }
    CHECK(hits >= 38);
}

TEST_CASE("noisy_ges noiseless: independent columns stay empty") {
    int hits = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const Dataset data = sample_sem(gen_empty(3), 10000, RngStream(48, static_cast<std::uint64_t>(trial)));
        if (noisy_ges(data, plain_cfg(), RngStream(49, 0)).graph == Pdag(3)) ++hits;
    }
    CHECK(hits >= 38);
}

TEST_CASE("noisy_ges: E_max = 0 returns the empty graph") {
    const Dataset data = sample_sem(chain2(), 500, RngStream(50, 0));
    const auto res = noisy_ges(data, plain_cfg(0), RngStream(51, 0));
    CHECK(res.graph == Pdag(2));
    CHECK(res.trace.passes[0].steps.empty());
}

TEST_CASE("greedy_pass spec behaviors") {
    const Dataset data = sample_sem(chain2(), 2000, RngStream(52, 0));
    const DiscoveryConfig cfg = plain_cfg();

    SUBCASE("no valid operators: unchanged graph, empty trace") {
        Pdag full(2);
        full.add_undirected_edge(0, 1);
        // forward pass on a fully connected 2-node graph has no inserts
        const auto [g, rec] = greedy_pass(full, data, cfg, RngStream(53, 0), '+');
        CHECK(g == full);
        CHECK(rec.steps.empty());
    }
    SUBCASE("noiseless with all gains negative stops at t=1") {
        const Dataset indep = sample_sem(gen_empty(2), 5000, RngStream(54, 0));
        const auto [g, rec] = greedy_pass(Pdag(2), indep, cfg, RngStream(55, 0), '+');
        CHECK(g == Pdag(2));
        REQUIRE(rec.steps.size() == 1);
        CHECK_FALSE(rec.steps[0].accepted);
    }
    SUBCASE("noiseless forward pass on dependent 2-var data applies exactly one insert") {
        const auto [g, rec] = greedy_pass(Pdag(2), data, cfg, RngStream(56, 0), '+');
        CHECK(g.num_edges() == 1);
        // second step has no operators left on d=2, so exactly one step ran
        REQUIRE(rec.steps.size() == 1);
        CHECK(rec.steps[0].accepted);
    }
}

TEST_CASE("propose/select: noiseless first proposal matches greedy selection") {
    const Dataset data = sample_sem(chain2(), 1000, RngStream(57, 0));
    const DiscoveryConfig cfg = plain_cfg();
    const auto proposed = propose_operators(Pdag(2), data, cfg, RngStream(58, 0), '+');
    const auto [g, rec] = greedy_pass(Pdag(2), data, cfg, RngStream(58, 0), '+');
    REQUIRE(!proposed.empty());
    REQUIRE(!rec.steps.empty());
    CHECK(proposed[0] == rec.steps[0].operators[static_cast<std::size_t>(rec.steps[0].chosen)]);
}

TEST_CASE("propose/select: empty proposal and all-positive prefix") {
    const Dataset data = sample_sem(chain2(), 1000, RngStream(59, 0));
    const DiscoveryConfig cfg = plain_cfg();
    CHECK(select_operators(Pdag(2), data, cfg, RngStream(60, 0), '+', {}).empty());

    const auto proposed = propose_operators(Pdag(2), data, cfg, RngStream(61, 0), '+');
    const auto accepted = select_operators(Pdag(2), data, cfg, RngStream(61, 0), '+', proposed);
    // the only proposal has positive gain, so the full prefix is accepted
    CHECK(accepted.size() == 1);
}

TEST_CASE("coupled and decoupled passes coincide under shared noise streams") {
    for (int trial = 0; trial < 30; ++trial) {
        RngStream data_rng(62, static_cast<std::uint64_t>(trial));
        const int d = 2 + static_cast<int>(data_rng.next_below(3));
        const SemModel model = gen_er(d, 0.5, 3.0, data_rng.substream(0));
        const Dataset data = sample_sem(model, 60 + 40 * trial % 300, data_rng.substream(1));
        const DiscoveryConfig cfg = noisy_cfg(data, 1.0, 4);
        RngStream pass_rng(63, static_cast<std::uint64_t>(trial));

        for (char sign : {'+', '-'}) {
            Pdag g0(d);
            if (sign == '-') {
                // start the delete pass from a forward-pass result
                g0 = greedy_pass(g0, data, cfg, pass_rng.substream(99), '+').first;
            }
            const auto [g_greedy, rec] = greedy_pass(g0, data, cfg, pass_rng, sign);
            const auto proposed = propose_operators(g0, data, cfg, pass_rng, sign);
            const auto accepted = select_operators(g0, data, cfg, pass_rng, sign, proposed);
            Pdag g_dec = g0;
            for (const auto& op : accepted) g_dec = apply_in_mode(g_dec, op, cfg.graph_mode);
            CHECK(g_greedy == g_dec);
        }
    }
}

TEST_CASE("noiseless noisy_ges equals plain GES") {
    for (int trial = 0; trial < 25; ++trial) {
        RngStream rng(64, static_cast<std::uint64_t>(trial));
        const int d = 2 + static_cast<int>(rng.next_below(4));
        const SemModel model = gen_er(d, 0.4, 3.0, rng.substream(0));
        const Dataset data = sample_sem(model, 200, rng.substream(1));

        DiscoveryConfig noiseless;
        noiseless.mode = DiscoveryMode::NoisyGes;
        noiseless.budget = PrivacyBudget::none();
        noiseless.budget.e_max = 10;
        noiseless.score_cfg.clip = std::numeric_limits<double>::infinity();
        const auto a = noisy_ges(data, noiseless, RngStream(65, 0));
        const auto b = noisy_ges(data, plain_cfg(), RngStream(66, 1234));
        CHECK(a.graph == b.graph);
    }
}

TEST_CASE("plain GES output is a local optimum") {
    for (int trial = 0; trial < 15; ++trial) {
        RngStream rng(67, static_cast<std::uint64_t>(trial));
        const int d = 3 + static_cast<int>(rng.next_below(2));
        const SemModel model = gen_er(d, 0.4, 3.0, rng.substream(0));
        const Dataset data = sample_sem(model, 400, rng.substream(1));
        const auto res = noisy_ges(data, plain_cfg(), RngStream(68, 0));
        LocalScorer scorer(data, ScoreConfig{});
        for (auto kind : {OpKind::Insert, OpKind::Delete}) {
            for (const auto& op : enumerate_valid_operators(res.graph, kind)) {
                CHECK(score_gain(scorer, res.graph, op) <= 1e-9);
            }
        }
    }
}

TEST_CASE("forward pass adds at most e_max edges") {
    for (int trial = 0; trial < 10; ++trial) {
        RngStream rng(69, static_cast<std::uint64_t>(trial));
        const SemModel model = gen_er(5, 0.6, 3.0, rng.substream(0));
        const Dataset data = sample_sem(model, 150, rng.substream(1));
        const DiscoveryConfig cfg = noisy_cfg(data, 1.0, 3);
        const auto [g, rec] = greedy_pass(Pdag(5), data, cfg, RngStream(70, 0), '+');
        CHECK(g.num_edges() <= 3);
        const Pdag final_g = noisy_ges(data, cfg, RngStream(71, 0)).graph;
        CHECK(dag_to_cpdag(pdag_to_dag(final_g)) == final_g);  // valid CPDAG out
    }
}

TEST_CASE("discovery is deterministic given the seed and replayable from the trace") {
    const SemModel model = gen_er(4, 0.5, 3.0, RngStream(72, 0));
    const Dataset data = sample_sem(model, 120, RngStream(72, 1));
    const DiscoveryConfig cfg = noisy_cfg(data);

    const auto a = noisy_ges(data, cfg, RngStream(73, 5));
    const auto b = noisy_ges(data, cfg, RngStream(73, 5));
    CHECK(a.graph == b.graph);
    CHECK(trace_to_json(a.trace).dump() == trace_to_json(b.trace).dump());

    const auto c = noisy_ges(data, cfg, RngStream(73, 6));
    CHECK(trace_to_json(a.trace).dump() != trace_to_json(c.trace).dump());

    // replay from the recorded noise reproduces the final graph
    CHECK(replay_trace(data, cfg, a.trace) == a.graph);
    // and survives a JSON round trip
    const auto round = trace_from_json(nlohmann::json::parse(trace_to_json(a.trace).dump()));
    CHECK(replay_trace(data, cfg, round) == a.graph);
}

TEST_CASE("dag graph-mode runs single-edge moves") {
    const Dataset data = sample_sem(chain2(), 1000, RngStream(74, 0));
    DiscoveryConfig cfg = plain_cfg();
    cfg.graph_mode = GraphMode::Dag;
    const auto res = noisy_ges(data, cfg, RngStream(75, 0));
    CHECK(res.graph.undirected_edges().empty());
    CHECK(res.graph.num_edges() == 1);
}
