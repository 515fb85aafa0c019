#pragma once

#include <stdexcept>
#include <string>

namespace noisyges {

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct InvalidOperator : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// No consistent DAG extension exists. When raised on an operator that passed
// validation this signals an internal bug, not a user error.
struct ExtensionFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyCandidates : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A privacy budget with finite epsilon was combined with an unclipped score.
struct InfiniteClip : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NoiselessBudget : std::logic_error {
    using std::logic_error::logic_error;
};

struct NoSuchEdge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ChunkTooSmall : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularDesign : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OperatorPoolTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// User-facing input problems (CSV parsing, malformed JSON). CLI maps these
// to exit code 2.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// User-facing configuration problems. CLI maps these to exit code 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace noisyges
