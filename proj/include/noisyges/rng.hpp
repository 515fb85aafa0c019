#pragma once

#include <cstdint>

namespace noisyges {

/// Counter-based random stream. A draw is a pure function of
/// (seed, stream_id, counter), so streams can be split per trial / purpose /
/// step and replayed independently of thread schedule. Same (seed, stream_id)
/// always yields the identical sample sequence.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_id_(stream_id) {}

    /// Derive a child stream keyed by `tag`. Children with distinct tags
    /// (or distinct parents) never share draws.
    [[nodiscard]] RngStream substream(std::uint64_t tag) const;

    /// Uniform draw on the open interval (0, 1).
    double next_uniform();

    /// Standard normal draw via the inverse CDF (one uniform per draw).
    double next_gaussian();

    /// Uniform integer in [0, bound). bound must be >= 1.
    std::uint64_t next_below(std::uint64_t bound);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    std::uint64_t next_raw();

    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint64_t counter_ = 0;
};

/// Standard normal quantile (AS 241, PPND16). Accurate to ~1e-15 on (0,1).
/// Returns -inf / +inf at p = 0 / 1.
double normal_quantile(double p);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace noisyges
