// scratch diagnostic, not part of the suite
#include <cstdio>

#include "noisyges/rng.hpp"
#include "noisyges/scoring.hpp"

#include "oracles.hpp"

using namespace noisyges;

int main() {
    RngStream rng(33, 0);
    const double clip = 0.8;
    int violations = 0, cases = 0;
    double worst_excess = 0.0;
    for (int trial = 0; trial < 12; ++trial) {
        const long n = 5 + static_cast<long>(rng.next_below(10));
        const int d = 2 + static_cast<int>(rng.next_below(2));
        Eigen::MatrixXd x(n, d);
        for (long k = 0; k < n; ++k)
            for (int c = 0; c < d; ++c) x(k, c) = 2.0 * rng.next_uniform() - 1.0;
        const Dataset data{x, 1.0};
        const double tau = clip / static_cast<double>(n);
        for (long row = 0; row < n; ++row) {
            Eigen::MatrixXd x2 = x;
            for (int c = 0; c < d; ++c) x2(row, c) = 2.0 * rng.next_uniform() - 1.0;
            const Dataset data2{x2, 1.0};
            for (int target = 0; target < d; ++target) {
                for (int parent = 0; parent < d; ++parent) {
                    if (parent == target) continue;
                    const LocalScoreKey key{target, {parent}};
                    ++cases;
                    const double s1 = local_clipped_bic(data, ScoreConfig{clip, 1.0}, key);
                    const double s2 = local_clipped_bic(data2, ScoreConfig{clip, 1.0}, key);
                    if (std::fabs(s1 - s2) > tau + 1e-12) {
                        ++violations;
                        const double f1 = fit_clipped_ols(data, ScoreConfig{clip, 1.0}, key).loss;
                        const double f2 = fit_clipped_ols(data2, ScoreConfig{clip, 1.0}, key).loss;
                        const double g1 = oracles::clipped_loss_grid_1d(data, clip, target, parent);
                        const double g2 = oracles::clipped_loss_grid_1d(data2, clip, target, parent);
                        const double excess = std::fabs(s1 - s2) - tau;
                        if (excess > worst_excess) {
                            worst_excess = excess;
                            std::printf(
                                "n=%ld heur: %.6f vs %.6f (|d|=%.6f, tau=%.6f)\n"
                                "      grid: %.6f vs %.6f (|d|=%.6f) gap1=%.6f gap2=%.6f\n",
                                n, f1, f2, std::fabs(f1 - f2), tau, g1, g2, std::fabs(g1 - g2), f1 - g1, f2 - g2);
                        }
                    }
                }
            }
        }
    }
    std::printf("violations %d / %d cases\n", violations, cases);
    return 0;
}
