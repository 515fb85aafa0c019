#include "noisyges/discovery.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "noisyges/errors.hpp"

namespace noisyges {

namespace {

// Substream tags; keyed draws keep greedy_pass and the decoupled
// propose/select pair consuming identical noise from a shared stream.
constexpr std::uint64_t kTagNu = 1;
constexpr std::uint64_t kTagXi = 2;
constexpr std::uint64_t kTagEta = 3;
constexpr std::uint64_t kTagForward = 10;
constexpr std::uint64_t kTagBackward = 11;

struct PassNoise {
    virtual ~PassNoise() = default;
    virtual double nu() = 0;
    virtual double xi(int step, std::size_t op_index) = 0;
    virtual double eta(int step) = 0;
};

struct LiveNoise final : PassNoise {
    LiveNoise(RngStream base, PassScales scales) : base_(base), scales_(scales) {}

    double nu() override {
        RngStream s = base_.substream(kTagNu);
        return laplace(s, scales_.nu);
    }
    double xi(int step, std::size_t op_index) override {
        if (step != xi_step_) {
            xi_stream_ = base_.substream(kTagXi).substream(static_cast<std::uint64_t>(step));
            xi_step_ = step;
            xi_index_ = 0;
        }
        // draws are sequential within a step; enumeration order is deterministic
        while (xi_index_ <= op_index) {
            xi_last_ = laplace(xi_stream_, scales_.xi);
            ++xi_index_;
        }
        return xi_last_;
    }
    double eta(int step) override {
        RngStream s = base_.substream(kTagEta).substream(static_cast<std::uint64_t>(step));
        return laplace(s, scales_.eta);
    }

    RngStream base_;
    PassScales scales_;
    RngStream xi_stream_;
    int xi_step_ = -1;
    std::size_t xi_index_ = 0;
    double xi_last_ = 0.0;
};

struct RecordedNoise final : PassNoise {
    explicit RecordedNoise(const PassRecord& rec) : rec_(rec) {}

    double nu() override { return rec_.nu; }
    double xi(int step, std::size_t op_index) override {
        return rec_.steps.at(static_cast<std::size_t>(step)).xi.at(op_index);
    }
    double eta(int step) override { return rec_.steps.at(static_cast<std::size_t>(step)).eta; }

    const PassRecord& rec_;
};

OpKind kind_for_sign(char sign) { return sign == '+' ? OpKind::Insert : OpKind::Delete; }

std::pair<Pdag, PassRecord> run_pass(Pdag g, const DiscoveryConfig& cfg,
                                     const LocalScorer& scorer, PassNoise& noise, char sign) {
    PassRecord rec;
    rec.sign = sign;
    rec.nu = noise.nu();  // threshold is 0; nu carries the full noisy threshold
    const OpKind kind = kind_for_sign(sign);
    for (int t = 0; t < cfg.budget.e_max; ++t) {
        StepRecord step;
        step.operators = enumerate_valid_operators(g, kind, cfg.max_aux_pool);
        if (step.operators.empty()) break;
        step.gains.reserve(step.operators.size());
        step.xi.reserve(step.operators.size());
        for (std::size_t i = 0; i < step.operators.size(); ++i) {
            step.gains.push_back(score_gain(scorer, g, step.operators[i]));
            step.xi.push_back(noise.xi(t, i));
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < step.operators.size(); ++i)
            if (step.gains[i] + step.xi[i] > step.gains[best] + step.xi[best]) best = i;
        step.chosen = static_cast<int>(best);
        step.eta = noise.eta(t);
        step.accepted = step.gains[best] + step.eta > rec.nu;
        const Operator chosen_op = step.operators[best];
        const bool accepted = step.accepted;
        rec.steps.push_back(std::move(step));
        if (!accepted) break;
        g = apply_in_mode(g, chosen_op, cfg.graph_mode);
    }
    return {std::move(g), std::move(rec)};
}

}  // namespace

void DiscoveryConfig::validate(const Dataset& data) const {
    data.validate();
    score_cfg.validate();
    if (mode == DiscoveryMode::ExactSearch) {
        if (candidate_family.empty()) throw EmptyCandidates("discovery: exact search needs a candidate family");
        for (const auto& g : candidate_family)
            if (g.d() != data.d()) throw DimensionMismatch("discovery: candidate dimension != data dimension");
    }
    if (!noiseless()) {
        if (!score_cfg.clipped()) throw InfiniteClip("discovery: finite epsilon requires a finite clip");
        budget.validate();
    }
    if (budget.e_max < 0) throw ConfigError("discovery: e_max must be >= 0");
}

PassScales pass_scales(const DiscoveryConfig& cfg) {
    if (cfg.noiseless()) return {};
    const double tau = cfg.budget.tau;
    return PassScales{4.0 * tau / cfg.budget.eps_score, 4.0 * tau / cfg.budget.eps_thresh,
                      8.0 * tau / cfg.budget.eps_thresh};
}

Pdag apply_in_mode(const Pdag& g, const Operator& op, GraphMode mode) {
    if (mode == GraphMode::Cpdag) return apply_operator(g, op);
    if (!is_operator_valid(g, op)) throw InvalidOperator("apply_in_mode: " + op.to_string() + " invalid");
    Pdag out = g;
    if (op.kind == OpKind::Insert)
        out.add_directed_edge(op.a, op.b);
    else
        out.remove_directed_edge(op.a, op.b);
    return out;
}

DiscoveryResult exact_noisy_search(const Dataset& data, const DiscoveryConfig& cfg, RngStream rng) {
    cfg.validate(data);
    if (cfg.candidate_family.empty()) throw EmptyCandidates("exact_noisy_search: empty candidate family");
    LocalScorer scorer(data, cfg.score_cfg);

    DiscoveryTrace trace;
    trace.mode = DiscoveryMode::ExactSearch;
    trace.graph_mode = cfg.graph_mode;

    double scale = 0.0;
    if (!cfg.noiseless()) {
        // Full-score sensitivity: d local terms, each C/(n sigma^2)-sensitive.
        const double tau_full = static_cast<double>(data.d()) * local_score_sensitivity(data, cfg.score_cfg);
        scale = 2.0 * tau_full / total_epsilon(cfg.budget);
    }
    RngStream xi_stream = rng.substream(kTagXi);
    std::size_t best = 0;
    for (std::size_t i = 0; i < cfg.candidate_family.size(); ++i) {
        const Dag rep = pdag_to_dag(cfg.candidate_family[i]);
        trace.scores.push_back(scorer.dag_score(rep));
        trace.xi.push_back(laplace(xi_stream, scale));
        if (trace.scores[i] + trace.xi[i] > trace.scores[best] + trace.xi[best]) best = i;
    }
    trace.chosen = static_cast<int>(best);
    trace.final_graph = cfg.candidate_family[best];
    return {trace.final_graph, std::move(trace)};
}

std::pair<Pdag, PassRecord> greedy_pass(const Pdag& g0, const Dataset& data, const DiscoveryConfig& cfg,
                                        RngStream rng, char sign) {
    cfg.validate(data);
    LocalScorer scorer(data, cfg.score_cfg);
    LiveNoise noise(rng, pass_scales(cfg));
    return run_pass(g0, cfg, scorer, noise, sign);
}

DiscoveryResult noisy_ges(const Dataset& data, const DiscoveryConfig& cfg, RngStream rng) {
    cfg.validate(data);
    LocalScorer scorer(data, cfg.score_cfg);
    const PassScales scales = pass_scales(cfg);

    DiscoveryTrace trace;
    trace.mode = cfg.mode;
    trace.graph_mode = cfg.graph_mode;

    Pdag g(data.d());
    {
        LiveNoise noise(rng.substream(kTagForward), scales);
        auto [g1, rec] = run_pass(g, cfg, scorer, noise, '+');
        g = std::move(g1);
        trace.passes.push_back(std::move(rec));
    }
    {
        LiveNoise noise(rng.substream(kTagBackward), scales);
        auto [g2, rec] = run_pass(g, cfg, scorer, noise, '-');
        g = std::move(g2);
        trace.passes.push_back(std::move(rec));
    }
    trace.final_graph = g;
    return {std::move(g), std::move(trace)};
}

std::vector<Operator> propose_operators(const Pdag& g0, const Dataset& data, const DiscoveryConfig& cfg,
                                        RngStream rng, char sign) {
    cfg.validate(data);
    LocalScorer scorer(data, cfg.score_cfg);
    LiveNoise noise(rng, pass_scales(cfg));
    const OpKind kind = kind_for_sign(sign);

    std::vector<Operator> proposed;
    Pdag g = g0;
    for (int t = 0; t < cfg.budget.e_max; ++t) {
        const auto ops = enumerate_valid_operators(g, kind, cfg.max_aux_pool);
        if (ops.empty()) break;
        std::size_t best = 0;
        double best_val = 0.0;
        for (std::size_t i = 0; i < ops.size(); ++i) {
            const double v = score_gain(scorer, g, ops[i]) + noise.xi(t, i);
            if (i == 0 || v > best_val) {
                best = i;
                best_val = v;
            }
        }
        proposed.push_back(ops[best]);
        g = apply_in_mode(g, ops[best], cfg.graph_mode);
    }
    return proposed;
}

std::vector<Operator> select_operators(const Pdag& g0, const Dataset& data, const DiscoveryConfig& cfg,
                                       RngStream rng, char sign, const std::vector<Operator>& proposed) {
    cfg.validate(data);
    LocalScorer scorer(data, cfg.score_cfg);
    LiveNoise noise(rng, pass_scales(cfg));
    for (const auto& op : proposed)
        if (op.kind != kind_for_sign(sign)) throw InvalidOperator("select_operators: operator kind does not match pass sign");

    std::vector<Operator> accepted;
    Pdag g = g0;
    const double nu = noise.nu();
    for (std::size_t t = 0; t < proposed.size(); ++t) {
        const double gain = score_gain(scorer, g, proposed[t]);
        const double eta = noise.eta(static_cast<int>(t));
        if (!(gain + eta > nu)) break;
        accepted.push_back(proposed[t]);
        g = apply_in_mode(g, proposed[t], cfg.graph_mode);
    }
    return accepted;
}

Pdag replay_trace(const Dataset& data, const DiscoveryConfig& cfg, const DiscoveryTrace& trace) {
    if (trace.mode == DiscoveryMode::ExactSearch) {
        return cfg.candidate_family.at(static_cast<std::size_t>(trace.chosen));
    }
    LocalScorer scorer(data, cfg.score_cfg);
    Pdag g(data.d());
    for (const auto& pass : trace.passes) {
        RecordedNoise noise(pass);
        auto [g2, rec] = run_pass(g, cfg, scorer, noise, pass.sign);
        g = std::move(g2);
    }
    return g;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::ordered_json operator_to_json(const Operator& op) {
    nlohmann::ordered_json j;
    j["kind"] = op.kind == OpKind::Insert ? "insert" : "delete";
    j["a"] = op.a;
    j["b"] = op.b;
    j["aux"] = op.aux;
    return j;
}

Operator operator_from_json(const nlohmann::json& j) {
    Operator op;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "insert")
        op.kind = OpKind::Insert;
    else if (kind == "delete")
        op.kind = OpKind::Delete;
    else
        throw ParseError("operator_from_json: unknown kind " + kind);
    op.a = j.at("a").get<int>();
    op.b = j.at("b").get<int>();
    op.aux = j.at("aux").get<std::vector<int>>();
    return op;
}

}  // namespace

std::string to_string(DiscoveryMode mode) {
    switch (mode) {
        case DiscoveryMode::ExactSearch: return "exact";
        case DiscoveryMode::NoisyGes: return "noisy-ges";
        case DiscoveryMode::PlainGes: return "plain-ges";
    }
    return "?";
}

std::string to_string(GraphMode mode) { return mode == GraphMode::Cpdag ? "cpdag" : "dag"; }

nlohmann::ordered_json trace_to_json(const DiscoveryTrace& trace) {
    nlohmann::ordered_json j;
    j["mode"] = to_string(trace.mode);
    j["graph_mode"] = to_string(trace.graph_mode);
    if (trace.mode == DiscoveryMode::ExactSearch) {
        j["scores"] = trace.scores;
        j["xi"] = trace.xi;
        j["chosen"] = trace.chosen;
    } else {
        j["passes"] = nlohmann::ordered_json::array();
        for (const auto& pass : trace.passes) {
            nlohmann::ordered_json jp;
            jp["sign"] = std::string(1, pass.sign);
            jp["nu"] = pass.nu;
            jp["steps"] = nlohmann::ordered_json::array();
            for (const auto& step : pass.steps) {
                nlohmann::ordered_json js;
                js["operators"] = nlohmann::ordered_json::array();
                for (const auto& op : step.operators) js["operators"].push_back(operator_to_json(op));
                js["gains"] = step.gains;
                js["xi"] = step.xi;
                js["chosen"] = step.chosen;
                js["eta"] = step.eta;
                js["accepted"] = step.accepted;
                jp["steps"].push_back(std::move(js));
            }
            j["passes"].push_back(std::move(jp));
        }
    }
    j["final"] = graph_to_json(trace.final_graph);
    return j;
}

DiscoveryTrace trace_from_json(const nlohmann::json& j) {
    try {
        DiscoveryTrace trace;
        const std::string mode = j.at("mode").get<std::string>();
        if (mode == "exact")
            trace.mode = DiscoveryMode::ExactSearch;
        else if (mode == "noisy-ges")
            trace.mode = DiscoveryMode::NoisyGes;
        else if (mode == "plain-ges")
            trace.mode = DiscoveryMode::PlainGes;
        else
            throw ParseError("trace_from_json: unknown mode " + mode);
        trace.graph_mode = j.at("graph_mode").get<std::string>() == "dag" ? GraphMode::Dag : GraphMode::Cpdag;
        if (trace.mode == DiscoveryMode::ExactSearch) {
            trace.scores = j.at("scores").get<std::vector<double>>();
            trace.xi = j.at("xi").get<std::vector<double>>();
            trace.chosen = j.at("chosen").get<int>();
        } else {
            for (const auto& jp : j.at("passes")) {
                PassRecord pass;
                pass.sign = jp.at("sign").get<std::string>().at(0);
                pass.nu = jp.at("nu").get<double>();
                for (const auto& js : jp.at("steps")) {
                    StepRecord step;
                    for (const auto& jo : js.at("operators")) step.operators.push_back(operator_from_json(jo));
                    step.gains = js.at("gains").get<std::vector<double>>();
                    step.xi = js.at("xi").get<std::vector<double>>();
                    step.chosen = js.at("chosen").get<int>();
                    step.eta = js.at("eta").get<double>();
                    step.accepted = js.at("accepted").get<bool>();
                    pass.steps.push_back(std::move(step));
                }
                trace.passes.push_back(std::move(pass));
            }
        }
        trace.final_graph = graph_from_json(j.at("final"));
        return trace;
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("trace_from_json: ") + ex.what());
    }
}

}  // namespace noisyges
