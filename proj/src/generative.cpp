#include "camdp/generative.hpp"

#include <string>

namespace camdp {

CounterRng pair_stream(std::uint64_t seed, Index s, Index a, StreamDomain domain) {
    std::uint64_t k = CounterRng::mix(seed ^ 0x6A09E667F3BCC909ULL);
    k = CounterRng::mix(k ^ (static_cast<std::uint64_t>(domain) * 0xBB67AE8584CAA73BULL));
    k = CounterRng::mix(k ^ (static_cast<std::uint64_t>(s) * 0x3C6EF372FE94F82BULL));
    k = CounterRng::mix(k ^ (static_cast<std::uint64_t>(a) * 0xA54FF53A5F1D36F1ULL));
    return CounterRng(k);
}

Index sample_transition(const Cmdp& m, Index s, Index a, CounterRng& rng) {
    if (s < 0 || s >= m.n_states || a < 0 || a >= m.n_actions)
        throw ArgumentError("state-action pair (" + std::to_string(s) + "," + std::to_string(a) +
                            ") out of range");
    const auto row = m.kernel.row(m.row(s, a));
    const double u = rng.uniform();
    double acc = 0.0;
    Index last = -1;
    for (Index j = 0; j < m.n_states; ++j) {
        if (row(j) <= 0.0) continue;
        acc += row(j);
        last = j;
        if (u < acc) return j;
    }
    // Rounding left a sliver above the cumulative sum; it belongs to the last support point.
    return last;
}

Cmdp EmpiricalModel::as_instance(const Cmdp& base) const {
    Cmdp out = base;
    out.kernel = kernel_hat;
    return out;
}

EmpiricalModel build_empirical_model(const Cmdp& m, std::int64_t N, std::uint64_t seed) {
    if (N < 1) throw ArgumentError("samples per pair must be at least 1");
    const Index S = m.n_states, A = m.n_actions;
    EmpiricalModel e;
    e.samples_per_pair = N;
    e.seed = seed;
    e.counts.setZero(S * A, S);
    for (Index s = 0; s < S; ++s)
        for (Index a = 0; a < A; ++a) {
            CounterRng rng = pair_stream(seed, s, a, StreamDomain::transition);
            for (std::int64_t i = 0; i < N; ++i) ++e.counts(m.row(s, a), sample_transition(m, s, a, rng));
        }
    e.kernel_hat = e.counts.cast<double>() / static_cast<double>(N);
    return e;
}

PerturbedReward perturb_rewards(const MatrixXd& reward, double omega, std::uint64_t seed) {
    if (!(omega >= 0.0)) throw ArgumentError("perturbation magnitude must be non-negative");
    PerturbedReward p;
    p.base = reward;
    p.omega = omega;
    p.seed = seed;
    p.values = reward;
    for (Index s = 0; s < reward.rows(); ++s)
        for (Index a = 0; a < reward.cols(); ++a) {
            CounterRng rng = pair_stream(seed, s, a, StreamDomain::reward_noise);
            p.values(s, a) += omega * rng.uniform();
        }
    return p;
}

} // namespace camdp
