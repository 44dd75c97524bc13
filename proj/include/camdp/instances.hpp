#pragma once

#include <cstdint>

#include "camdp/generative.hpp"
#include "camdp/types.hpp"

namespace camdp {

struct RandomInstanceOptions {
    /// Probability that a kernel entry is structurally nonzero (the diagonal
    /// entry of each row is always kept so rows never vanish).
    double density = 1.0;
    /// Start distribution: point mass on state 0, else uniform.
    bool point_start = false;
};

/// Seeded random instance; the threshold is left at 0.
Cmdp random_instance(Index S, Index A, std::uint64_t seed, const RandomInstanceOptions& opt = {});

/// Random instance whose threshold lies strictly between the constraint gain
/// of the unconstrained optimum and the best attainable constraint gain, so
/// the constraint binds. `slack_fraction` places b on that interval.
/// Resamples (deterministically) until the interval has width >= min_gap.
Cmdp random_binding_instance(Index S, Index A, std::uint64_t seed, double slack_fraction = 0.5,
                             double min_gap = 0.05, const RandomInstanceOptions& opt = {});

/// Seeded random stochastic policy with full support.
Policy random_policy(Index S, Index A, std::uint64_t seed);

/// Seeded random deterministic policy.
DeterministicPolicy random_deterministic_policy(Index S, Index A, std::uint64_t seed);

} // namespace camdp
