#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "noisyges/discovery.hpp"
#include "noisyges/inference.hpp"

namespace noisyges {

/// Linear Gaussian SEM: w(a,b) != 0 iff edge a->b, unit noise variance.
struct SemModel {
    int d = 0;
    Eigen::MatrixXd w;
    Dag true_dag;
    Cpdag true_cpdag;
};

SemModel gen_empty(int d);

/// Erdos-Renyi skeleton with the given edge probability, oriented along a
/// uniformly random node ordering; present edges all get the same weight.
SemModel gen_er(int d, double edge_prob, double weight, RngStream rng);

/// Model covariance ((I - W)(I - W^T))^{-1}.
Eigen::MatrixXd sem_covariance(const SemModel& model);

/// Sample n rows by evaluating the structural equations in topological order
/// with standard normal noise.
Dataset sample_sem(const SemModel& model, long n, RngStream rng);

/// Population regression functional: coefficient of X_cause when regressing
/// X_outcome on {X_cause} u adjustment under the model covariance.
double population_effect(const SemModel& model, const EffectTarget& target);

enum class ModelKind { Empty, ErdosRenyi };
enum class Method { NaivePlainGes, NoisyGesCorrected, DataSplit };

std::string to_string(ModelKind kind);
std::string to_string(Method method);
ModelKind model_kind_from_string(const std::string& s);
Method method_from_string(const std::string& s);

struct ExperimentGrid {
    std::vector<long> ns;
    std::vector<int> ds;
    int trials = 500;
    double alpha = 0.05;
    ModelKind model = ModelKind::Empty;
    double er_edge_prob = 0.5;  // negative = the sparse 5/(d(d-1)) rule
    double er_weight = 3.0;
    Method method = Method::NaivePlainGes;

    void validate() const;
    double edge_prob_for(int d) const;
};

/// Knobs shared by the experiment runners. With scaling_rule on, each cell
/// derives C = log(n)/3, eps_score = 1/sqrt(n), eps_thresh = e_max*eps_score
/// and tau = C/(n sigma^2) from its own n; otherwise the base DiscoveryConfig
/// budget and clip are used as given.
struct ExperimentOptions {
    bool scaling_rule = true;
    std::optional<double> split_frac;  // override the fair-derived fraction
    std::optional<double> gamma;       // fixed gamma for the correction
    bool log_arg_two = true;
    int threads = 0;  // 0 = hardware concurrency
};

struct CellRow {
    long n = 0;
    int d = 0;
    std::string method;
    std::string metric;
    double value = 0.0;
    double stderr_ = 0.0;
    long trials = 0;
    std::uint64_t seed = 0;
};

/// Derive the discovery config of one cell (per-n recalibration).
DiscoveryConfig cell_config(const DiscoveryConfig& base, const ExperimentOptions& opts, long n, double sigma2);

/// Miscoverage experiment: per cell, learn a graph per the grid's method,
/// pick a uniformly random edge of its consistent extension, build the
/// method's interval and compare against the population effect on the true
/// model. Edge-free trials count as covered. Emits one "miscoverage" row per
/// cell with its binomial standard error.
std::vector<CellRow> run_coverage_grid(const ExperimentGrid& grid, const DiscoveryConfig& disc,
                                       const ExperimentOptions& opts, std::uint64_t seed);

/// Graph-recovery comparison: per cell, run noisy GES on the full data and
/// plain GES on the fair-split discovery chunk of the same data; emits mean
/// SHD rows for both arms and their mean difference ("delta_shd").
std::vector<CellRow> run_recovery_compare(const ExperimentGrid& grid, const DiscoveryConfig& disc,
                                          const ExperimentOptions& opts, std::uint64_t seed);

/// CSV with header "n,d,method,metric,value,stderr,trials,seed".
std::string rows_to_csv(const std::vector<CellRow>& rows);

}  // namespace noisyges
