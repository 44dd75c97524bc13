#include "camdp/instances.hpp"

#include "camdp/oracle.hpp"

namespace camdp {

Cmdp random_instance(Index S, Index A, std::uint64_t seed, const RandomInstanceOptions& opt) {
    if (S <= 0 || A <= 0) throw ArgumentError("random instance needs S, A >= 1");
    if (!(opt.density > 0 && opt.density <= 1)) throw ArgumentError("density must lie in (0, 1]");
    Cmdp m = Cmdp::zeros(S, A);
    for (Index s = 0; s < S; ++s)
        for (Index a = 0; a < A; ++a) {
            CounterRng rng = pair_stream(seed, s, a, StreamDomain::instance);
            double tot = 0;
            for (Index j = 0; j < S; ++j) {
                const bool keep = j == s || rng.uniform() < opt.density;
                const double w = keep ? 0.05 + rng.uniform() : 0.0;
                m.kernel(m.row(s, a), j) = w;
                tot += w;
            }
            m.kernel.row(m.row(s, a)) /= tot;
            m.reward(s, a) = rng.uniform();
            m.constraint(s, a) = rng.uniform();
        }
    if (opt.point_start) {
        m.start(0) = 1.0;
    } else {
        m.start.setConstant(1.0 / static_cast<double>(S));
    }
    return m;
}

Cmdp random_binding_instance(Index S, Index A, std::uint64_t seed, double slack_fraction, double min_gap,
                             const RandomInstanceOptions& opt) {
    if (!(slack_fraction > 0 && slack_fraction < 1)) throw ArgumentError("slack fraction must lie in (0, 1)");
    for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
        Cmdp m = random_instance(S, A, CounterRng::mix(seed + attempt * 0x9E3779B97F4A7C15ULL), opt);
        LpOptions<double> free_opt;
        free_opt.with_constraint = false;
        const auto free_sol = solve_occupancy_lp(m, free_opt);
        const double c_free = free_sol.constraint_value;
        const double c_max = slater_constant(m) + m.threshold;
        if (c_max - c_free < min_gap) continue;
        m.threshold = c_free + slack_fraction * (c_max - c_free);
        return m;
    }
    throw NumericalError("could not draw an instance with a binding constraint");
}

Policy random_policy(Index S, Index A, std::uint64_t seed) {
    MatrixXd p(S, A);
    for (Index s = 0; s < S; ++s) {
        CounterRng rng = pair_stream(seed, s, 0, StreamDomain::instance);
        for (Index a = 0; a < A; ++a) p(s, a) = 0.05 + rng.uniform();
        p.row(s) /= p.row(s).sum();
    }
    return Policy(std::move(p));
}

DeterministicPolicy random_deterministic_policy(Index S, Index A, std::uint64_t seed) {
    DeterministicPolicy d(static_cast<std::size_t>(S));
    for (Index s = 0; s < S; ++s) {
        CounterRng rng = pair_stream(seed, s, 1, StreamDomain::instance);
        d[static_cast<std::size_t>(s)] = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(A));
    }
    return d;
}

} // namespace camdp
