#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "noisyges/discovery.hpp"
#include "noisyges/errors.hpp"
#include "noisyges/inference.hpp"
#include "noisyges/simulate.hpp"

namespace ng = noisyges;

namespace {

ng::Dataset read_csv(const std::string& path, double sigma2) {
    std::ifstream in(path);
    if (!in) throw ng::ParseError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ng::ParseError(path + ": empty file");

    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string tok;
        std::istringstream ss(s);
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty() && tok.back() == '\r') tok.pop_back();
            out.push_back(tok);
        }
        return out;
    };
    auto parse_double = [](const std::string& s, double& v) {
        const char* b = s.data();
        const char* e = s.data() + s.size();
        while (b < e && (*b == ' ' || *b == '\t')) ++b;
        auto [ptr, ec] = std::from_chars(b, e, v);
        while (ptr < e && (*ptr == ' ' || *ptr == '\t')) ++ptr;
        return ec == std::errc{} && ptr == e;
    };

    const auto header = split(line);
    if (header.empty()) throw ng::ParseError(path + ": empty header");
    double probe;
    bool all_numeric = true;
    for (const auto& h : header)
        if (!parse_double(h, probe)) all_numeric = false;
    if (all_numeric) throw ng::ParseError(path + ": header row required (first line is numeric)");
    const std::size_t d = header.size();

    std::vector<double> values;
    long n = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto toks = split(line);
        if (toks.size() != d)
            throw ng::ParseError(path + ": row " + std::to_string(n + 2) + " has " + std::to_string(toks.size()) +
                                 " fields, expected " + std::to_string(d));
        for (const auto& t : toks) {
            double v;
            if (!parse_double(t, v) || !std::isfinite(v))
                throw ng::ParseError(path + ": non-numeric or non-finite entry '" + t + "'");
            values.push_back(v);
        }
        ++n;
    }
    if (n == 0) throw ng::ParseError(path + ": no data rows");
    Eigen::MatrixXd x(n, static_cast<int>(d));
    for (long r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) x(r, static_cast<int>(c)) = values[static_cast<std::size_t>(r) * d + c];
    ng::Dataset data{std::move(x), sigma2};
    data.validate();
    return data;
}

void write_or_print(const std::optional<std::string>& path, const std::string& content) {
    if (path) {
        std::ofstream out(*path, std::ios::binary);
        if (!out) throw ng::ConfigError("cannot write " + *path);
        out << content;
    } else {
        std::cout << content;
    }
}

std::vector<long> parse_longs(const std::string& csv) {
    std::vector<long> out;
    std::istringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stol(tok));
    return out;
}

std::vector<int> parse_ints(const std::string& csv) {
    std::vector<int> out;
    std::istringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

// Shared run configuration; JSON config file values are overridden by flags.
struct RunConfig {
    std::string mode = "plain-ges";
    std::string clip = "log_n_over_3";  // or a number
    double sigma2 = 1.0;
    double alpha = 0.05;
    std::optional<double> gamma;
    std::uint64_t seed = 0;
    int e_max = 10;
    std::optional<double> eps_score;   // default 1/sqrt(n)
    std::optional<double> eps_thresh;  // default e_max * eps_score
    std::string graph_mode = "cpdag";
    int threads = 0;
    bool log_arg_one = false;  // use log(1/gamma) in the max-info bound
};

void load_config_file(RunConfig& rc, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ng::ConfigError("cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw ng::ParseError("config " + path + ": " + ex.what());
    }
    auto get = [&](const char* key, auto& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("mode", rc.mode);
    get("sigma2", rc.sigma2);
    get("alpha", rc.alpha);
    get("seed", rc.seed);
    get("e_max", rc.e_max);
    get("graph_mode", rc.graph_mode);
    get("threads", rc.threads);
    get("log_arg_one", rc.log_arg_one);
    if (j.contains("clip")) {
        if (j.at("clip").is_string())
            rc.clip = j.at("clip").get<std::string>();
        else
            rc.clip = std::to_string(j.at("clip").get<double>());
    }
    if (j.contains("gamma")) rc.gamma = j.at("gamma").get<double>();
    if (j.contains("eps_score")) rc.eps_score = j.at("eps_score").get<double>();
    if (j.contains("eps_thresh")) rc.eps_thresh = j.at("eps_thresh").get<double>();
}

double clip_value(const RunConfig& rc, long n) {
    if (rc.clip == "log_n_over_3") return std::log(static_cast<double>(n)) / 3.0;
    try {
        std::size_t pos = 0;
        const double v = std::stod(rc.clip, &pos);
        if (pos != rc.clip.size()) throw std::invalid_argument(rc.clip);
        return v;
    } catch (const std::exception&) {
        throw ng::ConfigError("clip must be a number or 'log_n_over_3', got '" + rc.clip + "'");
    }
}

ng::DiscoveryConfig make_discovery_config(const RunConfig& rc, const ng::Dataset& data) {
    ng::DiscoveryConfig cfg;
    if (rc.mode == "plain-ges")
        cfg.mode = ng::DiscoveryMode::PlainGes;
    else if (rc.mode == "noisy-ges")
        cfg.mode = ng::DiscoveryMode::NoisyGes;
    else
        throw ng::ConfigError("mode must be plain-ges or noisy-ges, got '" + rc.mode + "'");
    cfg.graph_mode = rc.graph_mode == "dag" ? ng::GraphMode::Dag : ng::GraphMode::Cpdag;
    cfg.score_cfg.clip = clip_value(rc, data.n());
    cfg.budget.e_max = rc.e_max;
    if (cfg.mode == ng::DiscoveryMode::PlainGes) {
        cfg.budget.noiseless = true;
    } else {
        const double nn = static_cast<double>(data.n());
        cfg.budget.eps_score = rc.eps_score ? *rc.eps_score : 1.0 / std::sqrt(nn);
        cfg.budget.eps_thresh = rc.eps_thresh ? *rc.eps_thresh : static_cast<double>(rc.e_max) * cfg.budget.eps_score;
        cfg.budget.tau = ng::local_score_sensitivity(data, cfg.score_cfg);
    }
    cfg.validate(data);
    return cfg;
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump() + "\n"; }

int cmd_discover(const RunConfig& rc, const std::string& data_path, const std::optional<std::string>& out_graph,
                 const std::optional<std::string>& out_trace, const std::vector<int>& effect,
                 const std::optional<std::string>& out_effect) {
    const ng::Dataset data = read_csv(data_path, rc.sigma2);
    const ng::DiscoveryConfig cfg = make_discovery_config(rc, data);
    const ng::DiscoveryResult res = ng::noisy_ges(data, cfg, ng::RngStream(rc.seed));
    write_or_print(out_graph, dump(ng::graph_to_json(res.graph)));
    if (out_trace) write_or_print(out_trace, dump(ng::trace_to_json(res.trace)));
    if (!effect.empty()) {
        if (effect.size() != 2) throw ng::ConfigError("--effect takes exactly two node indices");
        const ng::EffectTarget target = ng::choose_adjustment(res.graph, effect[0], effect[1]);
        ng::CorrectionInputs ci;
        ci.n = data.n();
        ci.eps_total = cfg.noiseless() ? 0.0 : ng::total_epsilon(cfg.budget);
        ci.alpha = rc.alpha;
        ci.gamma = rc.gamma;
        ci.log_arg_two = !rc.log_arg_one;
        const ng::EffectReport report = ng::build_report(data, res.graph, target, rc.alpha, ci);
        write_or_print(out_effect, dump(ng::report_to_json(report)));
    }
    return 0;
}

int cmd_score(const RunConfig& rc, const std::string& data_path, const std::string& graph_path) {
    const ng::Dataset data = read_csv(data_path, rc.sigma2);
    std::ifstream in(graph_path);
    if (!in) throw ng::ParseError("cannot open " + graph_path);
    nlohmann::json gj;
    try {
        in >> gj;
    } catch (const nlohmann::json::exception& ex) {
        throw ng::ParseError(std::string("graph json: ") + ex.what());
    }
    const ng::Pdag g = ng::graph_from_json(gj);
    if (g.d() != data.d()) throw ng::ConfigError("graph dimension != data dimension");

    ng::ScoreConfig score_cfg;
    score_cfg.clip = clip_value(rc, data.n());
    ng::LocalScorer scorer(data, score_cfg);
    const ng::Dag ext = ng::pdag_to_dag(g);

    nlohmann::ordered_json out;
    out["clip"] = score_cfg.clip;
    out["local_scores"] = nlohmann::ordered_json::array();
    double total = 0.0;
    for (int j = 0; j < ext.d(); ++j) {
        const double s = scorer.local_score(j, ext.parents(j));
        total += s;
        out["local_scores"].push_back({{"node", j}, {"parents", ext.parents(j)}, {"score", s}});
    }
    out["total_score"] = total;
    for (auto [name, kind] : {std::pair{"insert_gains", ng::OpKind::Insert}, std::pair{"delete_gains", ng::OpKind::Delete}}) {
        out[name] = nlohmann::ordered_json::array();
        for (const auto& op : ng::enumerate_valid_operators(g, kind)) {
            out[name].push_back({{"op", op.to_string()}, {"gain", ng::score_gain(scorer, g, op)}});
        }
    }
    std::cout << dump(out);
    return 0;
}

ng::PrivacyBudget budget_from_flags(const RunConfig& rc, long n) {
    ng::PrivacyBudget b;
    b.e_max = rc.e_max;
    const double nn = static_cast<double>(n);
    b.eps_score = rc.eps_score ? *rc.eps_score : 1.0 / std::sqrt(nn);
    b.eps_thresh = rc.eps_thresh ? *rc.eps_thresh : static_cast<double>(rc.e_max) * b.eps_score;
    b.tau = 1.0;  // placeholder; total_epsilon does not read it
    return b;
}

int cmd_correct_alpha(const RunConfig& rc, long n, std::optional<double> eps_total) {
    ng::CorrectionInputs ci;
    ci.n = n;
    ci.eps_total = eps_total ? *eps_total : ng::total_epsilon(budget_from_flags(rc, n));
    ci.alpha = rc.alpha;
    ci.gamma = rc.gamma;
    ci.log_arg_two = !rc.log_arg_one;
    const ng::CorrectedAlpha ca = ng::corrected_alpha(ci);
    std::printf("%.6g %.6g\n", ca.alpha_tilde, ca.gamma_star);
    return 0;
}

int cmd_fair_split(const RunConfig& rc, std::optional<double> i_bound, std::optional<long> n) {
    if (!rc.gamma) throw ng::ConfigError("fair-split requires --gamma");
    double i_val;
    if (i_bound) {
        i_val = *i_bound;
    } else {
        if (!n) throw ng::ConfigError("fair-split needs either --i-bound or --n with budget flags");
        const double eps_total = ng::total_epsilon(budget_from_flags(rc, *n));
        i_val = ng::max_info_bound(*n, eps_total, *rc.gamma, rc.log_arg_one ? 1.0 : 2.0);
    }
    std::printf("%.10g\n", ng::fair_split_fraction(i_val, rc.alpha, *rc.gamma));
    return 0;
}

int cmd_grid(const RunConfig& rc, bool recovery, const std::string& ns, const std::string& ds, int trials,
             const std::string& model, const std::string& method, const std::string& edge_prob,
             std::optional<double> split_frac, const std::optional<std::string>& out) {
    ng::ExperimentGrid grid;
    grid.ns = parse_longs(ns);
    grid.ds = parse_ints(ds);
    grid.trials = trials;
    grid.alpha = rc.alpha;
    grid.model = ng::model_kind_from_string(model);
    grid.method = ng::method_from_string(method);
    if (edge_prob == "auto")
        grid.er_edge_prob = -1.0;
    else
        grid.er_edge_prob = std::stod(edge_prob);

    ng::DiscoveryConfig disc;
    disc.graph_mode = rc.graph_mode == "dag" ? ng::GraphMode::Dag : ng::GraphMode::Cpdag;
    disc.budget.e_max = rc.e_max;

    ng::ExperimentOptions opts;
    opts.scaling_rule = true;
    opts.split_frac = split_frac;
    opts.gamma = rc.gamma;
    opts.log_arg_two = !rc.log_arg_one;
    opts.threads = rc.threads;

    const auto rows = recovery ? ng::run_recovery_compare(grid, disc, opts, rc.seed)
                               : ng::run_coverage_grid(grid, disc, opts, rc.seed);
    write_or_print(out, ng::rows_to_csv(rows));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"randomized causal discovery with post-selection interval correction"};
    app.require_subcommand(1);

    RunConfig rc;
    std::string config_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file; flags override its values");
        cmd->add_option("--seed", rc.seed, "random seed");
        cmd->add_option("--alpha", rc.alpha, "target error level");
        cmd->add_option("--gamma", rc.gamma, "max-information gamma (optimized when absent)");
        cmd->add_option("--e-max", rc.e_max, "operator cap per greedy pass");
        cmd->add_option("--eps-score", rc.eps_score, "per-selection epsilon (default 1/sqrt(n))");
        cmd->add_option("--eps-thresh", rc.eps_thresh, "threshold epsilon (default e_max*eps_score)");
        cmd->add_option("--clip", rc.clip, "clip threshold: number or log_n_over_3");
        cmd->add_option("--sigma2", rc.sigma2, "known noise variance");
        cmd->add_option("--graph-mode", rc.graph_mode, "cpdag or dag");
        cmd->add_option("--threads", rc.threads, "worker cap (0 = hardware)");
        cmd->add_flag("--log-arg-one", rc.log_arg_one, "use log(1/gamma) in the max-info bound");
    };

    // discover
    auto* discover = app.add_subcommand("discover", "learn a graph from a CSV dataset");
    std::string data_path, graph_path;
    std::optional<std::string> out_graph, out_trace, out_effect, out_csv;
    std::vector<int> effect;
    discover->add_option("--data", data_path, "CSV with header row")->required();
    discover->add_option("--mode", rc.mode, "plain-ges or noisy-ges");
    discover->add_option("--out-graph", out_graph, "graph JSON path (default stdout)");
    discover->add_option("--out-trace", out_trace, "trace JSON path");
    discover->add_option("--effect", effect, "cause and outcome node for an effect report")->expected(2);
    discover->add_option("--out-effect", out_effect, "effect report JSON path (default stdout)");
    add_common(discover);

    // score (debug)
    auto* score = app.add_subcommand("score", "print local scores and operator gains for a graph");
    score->add_option("--data", data_path, "CSV with header row")->required();
    score->add_option("--graph", graph_path, "graph JSON")->required();
    add_common(score);

    // correct-alpha
    auto* correct = app.add_subcommand("correct-alpha", "corrected interval level for a privacy budget");
    long n_flag = 0;
    std::optional<double> eps_total_flag;
    correct->add_option("--n", n_flag, "sample size")->required();
    correct->add_option("--eps-total", eps_total_flag, "total epsilon (overrides budget flags)");
    add_common(correct);

    // fair-split
    auto* fair = app.add_subcommand("fair-split", "width-matched data-splitting fraction");
    std::optional<double> i_bound_flag;
    std::optional<long> fair_n;
    fair->add_option("--i-bound", i_bound_flag, "max-information bound I");
    fair->add_option("--n", fair_n, "sample size (derives I from budget flags)");
    add_common(fair);

    // coverage / recovery
    std::string ns_flag = "500", ds_flag = "5", model_flag = "empty", method_flag = "naive", edge_prob_flag = "0.5";
    int trials_flag = 500;
    std::optional<double> split_frac_flag;
    for (auto [name, desc] : {std::pair{"coverage", "miscoverage grid (CSV)"}, std::pair{"recovery", "SHD comparison grid (CSV)"}}) {
        auto* cmd = app.add_subcommand(name, desc);
        cmd->add_option("--ns", ns_flag, "comma-separated sample sizes");
        cmd->add_option("--ds", ds_flag, "comma-separated dimensions");
        cmd->add_option("--trials", trials_flag, "trials per cell");
        cmd->add_option("--model", model_flag, "empty or er");
        cmd->add_option("--method", method_flag, "naive, noisy-corrected or split");
        cmd->add_option("--edge-prob", edge_prob_flag, "ER edge probability or 'auto' for 5/(d(d-1))");
        cmd->add_option("--split-frac", split_frac_flag, "override the fair splitting fraction");
        cmd->add_option("--out", out_csv, "CSV path (default stdout)");
        add_common(cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 3;
    }

    try {
        if (!config_path.empty()) {
            // reload: file first, then re-apply flags on top
            RunConfig from_file;
            load_config_file(from_file, config_path);
            RunConfig flags_only = rc;
            rc = from_file;
            CLI::App* sub = app.get_subcommands().front();
            auto apply_if_set = [&](const char* flag, auto member) {
                if (sub->count(flag) > 0) rc.*member = flags_only.*member;
            };
            apply_if_set("--seed", &RunConfig::seed);
            apply_if_set("--alpha", &RunConfig::alpha);
            apply_if_set("--gamma", &RunConfig::gamma);
            apply_if_set("--e-max", &RunConfig::e_max);
            apply_if_set("--eps-score", &RunConfig::eps_score);
            apply_if_set("--eps-thresh", &RunConfig::eps_thresh);
            apply_if_set("--clip", &RunConfig::clip);
            apply_if_set("--sigma2", &RunConfig::sigma2);
            apply_if_set("--graph-mode", &RunConfig::graph_mode);
            apply_if_set("--threads", &RunConfig::threads);
            apply_if_set("--log-arg-one", &RunConfig::log_arg_one);
            if (sub->count("--mode") > 0) rc.mode = flags_only.mode;
        }

        if (discover->parsed()) return cmd_discover(rc, data_path, out_graph, out_trace, effect, out_effect);
        if (score->parsed()) return cmd_score(rc, data_path, graph_path);
        if (correct->parsed()) return cmd_correct_alpha(rc, n_flag, eps_total_flag);
        if (fair->parsed()) return cmd_fair_split(rc, i_bound_flag, fair_n);
        if (app.get_subcommand("coverage")->parsed())
            return cmd_grid(rc, false, ns_flag, ds_flag, trials_flag, model_flag, method_flag, edge_prob_flag,
                            split_frac_flag, out_csv);
        if (app.get_subcommand("recovery")->parsed())
            return cmd_grid(rc, true, ns_flag, ds_flag, trials_flag, model_flag, method_flag, edge_prob_flag,
                            split_frac_flag, out_csv);
        return 0;
    } catch (const ng::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ng::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
