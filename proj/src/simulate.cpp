#include "noisyges/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "noisyges/errors.hpp"

namespace noisyges {

SemModel gen_empty(int d) {
    SemModel m;
    m.d = d;
    m.w = Eigen::MatrixXd::Zero(d, d);
    m.true_dag = Dag(d);
    m.true_cpdag = dag_to_cpdag(m.true_dag);
    return m;
}

SemModel gen_er(int d, double edge_prob, double weight, RngStream rng) {
    if (d < 2) throw ConfigError("gen_er: need d >= 2");
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw ConfigError("gen_er: edge_prob outside [0,1]");
    SemModel m;
    m.d = d;
    m.w = Eigen::MatrixXd::Zero(d, d);

    std::vector<std::pair<int, int>> skeleton;
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b)
            if (rng.next_uniform() < edge_prob) skeleton.emplace_back(a, b);

    // random ordering; edges point from earlier to later
    std::vector<int> position(static_cast<std::size_t>(d));
    std::vector<int> perm(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = d - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i + 1)));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    for (int i = 0; i < d; ++i) position[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i;

    m.true_dag = Dag(d);
    for (auto [a, b] : skeleton) {
        const int from = position[static_cast<std::size_t>(a)] < position[static_cast<std::size_t>(b)] ? a : b;
        const int to = from == a ? b : a;
        m.true_dag.add_edge(from, to);
        m.w(from, to) = weight;
    }
    m.true_cpdag = dag_to_cpdag(m.true_dag);
    return m;
}

Eigen::MatrixXd sem_covariance(const SemModel& model) {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(model.d, model.d) - model.w;
    return (a * a.transpose()).llt().solve(Eigen::MatrixXd::Identity(model.d, model.d));
}

Dataset sample_sem(const SemModel& model, long n, RngStream rng) {
    Eigen::MatrixXd x(n, model.d);
    for (long k = 0; k < n; ++k)
        for (int j = 0; j < model.d; ++j) x(k, j) = rng.next_gaussian();
    for (int b : model.true_dag.topological_order()) {
        for (int a : model.true_dag.parents(b)) x.col(b) += model.w(a, b) * x.col(a);
    }
    return Dataset{std::move(x), 1.0};
}

double population_effect(const SemModel& model, const EffectTarget& target) {
    target.validate(model.d);
    const Eigen::MatrixXd sigma = sem_covariance(model);
    const int p = 1 + static_cast<int>(target.adjustment.size());
    std::vector<int> cols{target.cause};
    cols.insert(cols.end(), target.adjustment.begin(), target.adjustment.end());
    Eigen::MatrixXd smm(p, p);
    Eigen::VectorXd smj(p);
    for (int r = 0; r < p; ++r) {
        smj[r] = sigma(cols[static_cast<std::size_t>(r)], target.outcome);
        for (int c = 0; c < p; ++c) smm(r, c) = sigma(cols[static_cast<std::size_t>(r)], cols[static_cast<std::size_t>(c)]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(smm);
    if (llt.info() != Eigen::Success) throw SingularDesign("population_effect: singular submatrix");
    return llt.solve(smj)[0];
}

std::string to_string(ModelKind kind) { return kind == ModelKind::Empty ? "empty" : "er"; }

std::string to_string(Method method) {
    switch (method) {
        case Method::NaivePlainGes: return "naive";
        case Method::NoisyGesCorrected: return "noisy-corrected";
        case Method::DataSplit: return "split";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "empty") return ModelKind::Empty;
    if (s == "er") return ModelKind::ErdosRenyi;
    throw ConfigError("unknown model: " + s);
}

Method method_from_string(const std::string& s) {
    if (s == "naive") return Method::NaivePlainGes;
    if (s == "noisy-corrected") return Method::NoisyGesCorrected;
    if (s == "split") return Method::DataSplit;
    throw ConfigError("unknown method: " + s);
}

void ExperimentGrid::validate() const {
    if (trials < 1) throw ConfigError("grid: trials must be >= 1");
    if (ns.empty() || ds.empty()) throw ConfigError("grid: empty n or d list");
    for (long n : ns)
        if (n < 10) throw ConfigError("grid: all n must be >= 10");
    for (int d : ds)
        if (d < 2) throw ConfigError("grid: all d must be >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("grid: alpha outside (0,1)");
}

double ExperimentGrid::edge_prob_for(int d) const {
    if (er_edge_prob >= 0.0) return er_edge_prob;
    return 5.0 / (static_cast<double>(d) * static_cast<double>(d - 1));
}

DiscoveryConfig cell_config(const DiscoveryConfig& base, const ExperimentOptions& opts, long n, double sigma2) {
    DiscoveryConfig cfg = base;
    if (opts.scaling_rule) {
        const double nn = static_cast<double>(n);
        cfg.score_cfg.clip = std::log(nn) / 3.0;
        cfg.budget.eps_score = 1.0 / std::sqrt(nn);
        cfg.budget.eps_thresh = static_cast<double>(cfg.budget.e_max) * cfg.budget.eps_score;
        cfg.budget.tau = cfg.score_cfg.clip / (nn * sigma2);
    }
    return cfg;
}

namespace {

void parallel_trials(int trials, int threads, const std::function<void(int)>& body) {
    int t = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (t < 1) t = 1;
    t = std::min(t, trials);
    if (t <= 1) {
        for (int i = 0; i < trials; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < t; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= trials) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

struct MeanStderr {
    double mean = 0.0;
    double se = 0.0;
};

MeanStderr mean_and_stderr(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

SemModel trial_model(const ExperimentGrid& grid, int d, RngStream rng) {
    if (grid.model == ModelKind::Empty) return gen_empty(d);
    return gen_er(d, grid.edge_prob_for(d), grid.er_weight, rng);
}

/// Uniformly random directed edge of the deterministic consistent extension;
/// nullopt when the graph has no edges.
std::optional<std::pair<int, int>> pick_edge(const Pdag& g, RngStream rng) {
    const Dag ext = pdag_to_dag(g);
    std::vector<std::pair<int, int>> edges;
    for (int j = 0; j < ext.d(); ++j)
        for (int a : ext.parents(j)) edges.emplace_back(a, j);
    if (edges.empty()) return std::nullopt;
    std::sort(edges.begin(), edges.end());
    return edges[static_cast<std::size_t>(rng.next_below(edges.size()))];
}

double derive_split_fraction(const DiscoveryConfig& cfg, const ExperimentOptions& opts, long n, double alpha) {
    if (opts.split_frac) return *opts.split_frac;
    CorrectionInputs ci;
    ci.n = n;
    ci.eps_total = total_epsilon(cfg.budget);
    ci.alpha = alpha;
    ci.gamma = opts.gamma;
    ci.log_arg_two = opts.log_arg_two;
    const CorrectedAlpha ca = corrected_alpha(ci);
    const double gamma = ca.gamma_star > 0.0 ? ca.gamma_star : alpha / 2.0;
    const double i_bound = max_info_bound(n, ci.eps_total, gamma, opts.log_arg_two ? 2.0 : 1.0);
    return fair_split_fraction(i_bound, alpha, gamma);
}

}  // namespace

std::vector<CellRow> run_coverage_grid(const ExperimentGrid& grid, const DiscoveryConfig& disc,
                                       const ExperimentOptions& opts, std::uint64_t seed) {
    grid.validate();
    std::vector<CellRow> rows;
    std::uint64_t cell_index = 0;
    for (int d : grid.ds) {
        for (long n : grid.ns) {
            DiscoveryConfig cfg = cell_config(disc, opts, n, 1.0);
            cfg.mode = grid.method == Method::NoisyGesCorrected ? DiscoveryMode::NoisyGes : DiscoveryMode::PlainGes;
            if (cfg.mode == DiscoveryMode::PlainGes) cfg.budget.noiseless = true;

            // level used by the method's interval
            double level = grid.alpha;
            if (grid.method == Method::NoisyGesCorrected) {
                CorrectionInputs ci;
                ci.n = n;
                ci.eps_total = total_epsilon(cfg.budget);
                ci.alpha = grid.alpha;
                ci.gamma = opts.gamma;
                ci.log_arg_two = opts.log_arg_two;
                level = corrected_alpha(ci).alpha_tilde;
            }
            const double z = normal_quantile(1.0 - level / 2.0);
            const double split_p =
                grid.method == Method::DataSplit ? derive_split_fraction(cfg, opts, n, grid.alpha) : 0.0;

            std::vector<double> miss(static_cast<std::size_t>(grid.trials), 0.0);
            const std::uint64_t cell_id = cell_index++;
            parallel_trials(grid.trials, opts.threads, [&](int trial) {
                RngStream rng = RngStream(seed).substream(cell_id).substream(static_cast<std::uint64_t>(trial));
                const SemModel model = trial_model(grid, d, rng.substream(0));
                const Dataset data = sample_sem(model, n, rng.substream(1));

                Pdag g(d);
                Dataset est = data;
                if (grid.method == Method::DataSplit) {
                    const long n_disc = static_cast<long>(std::ceil((1.0 - split_p) * static_cast<double>(n)));
                    const long n_inf = n - n_disc;
                    if (n_disc < 3 || n_inf < 3) throw ChunkTooSmall("coverage: split chunk below 3 rows");
                    Dataset chunk1{data.x.topRows(n_disc), data.sigma2};
                    est = Dataset{data.x.bottomRows(n_inf), data.sigma2};
                    g = noisy_ges(chunk1, cfg, rng.substream(2)).graph;
                } else {
                    g = noisy_ges(data, cfg, rng.substream(2)).graph;
                }

                const auto edge = pick_edge(g, rng.substream(3));
                if (!edge) return;  // empty graph counts as covered
                const EffectTarget target = choose_adjustment(g, edge->first, edge->second);
                const double beta_true = population_effect(model, target);
                const OlsEffect fit = ols_effect(est, target);
                const bool covered = std::fabs(fit.beta_hat - beta_true) <= z * fit.se;
                miss[static_cast<std::size_t>(trial)] = covered ? 0.0 : 1.0;
            });

            double rate = 0.0;
            for (double m : miss) rate += m;
            rate /= static_cast<double>(grid.trials);
            const double se = std::sqrt(rate * (1.0 - rate) / static_cast<double>(grid.trials));
            rows.push_back(CellRow{n, d, to_string(grid.method), "miscoverage", rate, se,
                                   static_cast<long>(grid.trials), seed});
        }
    }
    return rows;
}

std::vector<CellRow> run_recovery_compare(const ExperimentGrid& grid, const DiscoveryConfig& disc,
                                          const ExperimentOptions& opts, std::uint64_t seed) {
    grid.validate();
    std::vector<CellRow> rows;
    std::uint64_t cell_index = 0;
    for (int d : grid.ds) {
        for (long n : grid.ns) {
            DiscoveryConfig noisy_cfg = cell_config(disc, opts, n, 1.0);
            noisy_cfg.mode = DiscoveryMode::NoisyGes;
            DiscoveryConfig plain_cfg = noisy_cfg;
            plain_cfg.mode = DiscoveryMode::PlainGes;
            plain_cfg.budget.noiseless = true;

            const double p = derive_split_fraction(noisy_cfg, opts, n, grid.alpha);
            const long n_disc = std::min(n, static_cast<long>(std::ceil((1.0 - p) * static_cast<double>(n))));

            std::vector<double> shd_noisy(static_cast<std::size_t>(grid.trials));
            std::vector<double> shd_split(static_cast<std::size_t>(grid.trials));
            std::vector<double> delta(static_cast<std::size_t>(grid.trials));
            const std::uint64_t cell_id = cell_index++;
            parallel_trials(grid.trials, opts.threads, [&](int trial) {
                RngStream rng = RngStream(seed).substream(cell_id).substream(static_cast<std::uint64_t>(trial));
                const SemModel model = trial_model(grid, d, rng.substream(0));
                const Dataset data = sample_sem(model, n, rng.substream(1));

                const Pdag g_noisy = noisy_ges(data, noisy_cfg, rng.substream(2)).graph;
                Dataset chunk1{data.x.topRows(n_disc), data.sigma2};
                const Pdag g_split = noisy_ges(chunk1, plain_cfg, rng.substream(3)).graph;

                const auto i = static_cast<std::size_t>(trial);
                shd_noisy[i] = shd(model.true_cpdag, g_noisy);
                shd_split[i] = shd(model.true_cpdag, g_split);
                delta[i] = shd_noisy[i] - shd_split[i];
            });

            const auto a = mean_and_stderr(shd_noisy);
            const auto b = mean_and_stderr(shd_split);
            const auto c = mean_and_stderr(delta);
            rows.push_back(CellRow{n, d, "noisy-ges", "shd_mean", a.mean, a.se, static_cast<long>(grid.trials), seed});
            rows.push_back(CellRow{n, d, "split", "shd_mean", b.mean, b.se, static_cast<long>(grid.trials), seed});
            rows.push_back(
                CellRow{n, d, "noisy-vs-split", "delta_shd", c.mean, c.se, static_cast<long>(grid.trials), seed});
        }
    }
    return rows;
}

std::string rows_to_csv(const std::vector<CellRow>& rows) {
    auto fmt = [](double v) {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        (void)ec;
        return std::string(buf, ptr);
    };
    std::ostringstream os;
    os << "n,d,method,metric,value,stderr,trials,seed\n";
    for (const auto& r : rows) {
        os << r.n << "," << r.d << "," << r.method << "," << r.metric << "," << fmt(r.value) << "," << fmt(r.stderr_)
           << "," << r.trials << "," << r.seed << "\n";
    }
    return os.str();
}

}  // namespace noisyges
