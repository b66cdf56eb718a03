#pragma once

#include <stdexcept>
#include <string>

namespace hklab {

/// A volume/invariance verdict disagreed with an exact linear oracle.
struct OracleDisagreement : std::logic_error {
    using std::logic_error::logic_error;
};

/// Subspace whose span meets the lattice in a group of too small rank.
struct IrrationalSubspace : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Neighbouring frames of a subbundle are not close enough to be gauge-aligned.
struct FrameDiscontinuity : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IntegratorFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace hklab
