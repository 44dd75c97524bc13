#pragma once

#include <cstdint>

#include "camdp/types.hpp"

namespace camdp {

/// Counter-based generator: output i of stream k is a SplitMix64 finalization
/// of k + i * golden. Streams for distinct keys are independent in practice and
/// never share state, so sampling order across streams does not matter.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    std::uint64_t draws() const { return counter_; }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Purpose tags keep transition and reward-noise streams disjoint.
enum class StreamDomain : std::uint64_t { transition = 1, reward_noise = 2, instance = 3 };

/// Stream for (seed, s, a, domain).
CounterRng pair_stream(std::uint64_t seed, Index s, Index a, StreamDomain domain);

/// One draw from P(.|s,a).
Index sample_transition(const Cmdp& m, Index s, Index a, CounterRng& rng);

struct EmpiricalModel {
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;  // (S*A) x S
    std::int64_t samples_per_pair = 0;
    std::uint64_t seed = 0;
    MatrixXd kernel_hat;  // counts / N

    std::int64_t total_samples() const { return counts.sum(); }

    /// The base instance with its kernel replaced by the estimate.
    Cmdp as_instance(const Cmdp& base) const;
};

/// N draws per pair, one independent stream per pair.
EmpiricalModel build_empirical_model(const Cmdp& m, std::int64_t N, std::uint64_t seed);

struct PerturbedReward {
    MatrixXd base;
    double omega = 0.0;
    MatrixXd values;  // base + Unif[0, omega) per entry
    std::uint64_t seed = 0;
};

PerturbedReward perturb_rewards(const MatrixXd& reward, double omega, std::uint64_t seed);

} // namespace camdp
