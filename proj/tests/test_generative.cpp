#include <doctest.h>

#include "camdp/generative.hpp"
#include "camdp/instances.hpp"

using namespace camdp;

TEST_CASE("empirical model is deterministic per seed and counts N per pair") {
    const Cmdp m = random_instance(3, 2, 11);
    const auto a = build_empirical_model(m, 500, 7);
    const auto b = build_empirical_model(m, 500, 7);
    const auto c = build_empirical_model(m, 500, 8);
    CHECK(a.counts == b.counts);
    CHECK(a.counts != c.counts);
    CHECK(a.total_samples() == 500 * 3 * 2);
    for (Index i = 0; i < a.counts.rows(); ++i) CHECK(a.counts.row(i).sum() == 500);
    CHECK((a.kernel_hat.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("pair streams are independent of the pair visiting order") {
    const Cmdp m = random_instance(3, 2, 12);
    CounterRng r1 = pair_stream(5, 2, 1, StreamDomain::transition);
    const Index first = sample_transition(m, 2, 1, r1);
    // Drawing from another pair first does not move this stream.
    CounterRng other = pair_stream(5, 0, 0, StreamDomain::transition);
    sample_transition(m, 0, 0, other);
    CounterRng r2 = pair_stream(5, 2, 1, StreamDomain::transition);
    CHECK(sample_transition(m, 2, 1, r2) == first);
}

TEST_CASE("empirical kernel concentrates") {
    const Cmdp m = random_instance(3, 2, 13);
    const auto e = build_empirical_model(m, 100'000, 1);
    CHECK((e.kernel_hat - m.kernel).lpNorm<Eigen::Infinity>() < 0.01);
    const Cmdp est = e.as_instance(m);
    CHECK(est.kernel == e.kernel_hat);
    CHECK(est.reward == m.reward);
}

TEST_CASE("reward perturbation lies in [r, r + omega) and is seeded") {
    const Cmdp m = random_instance(4, 3, 14);
    const auto p = perturb_rewards(m.reward, 0.01, 3);
    const auto q = perturb_rewards(m.reward, 0.01, 3);
    CHECK(p.values == q.values);
    CHECK(((p.values - m.reward).array() >= 0).all());
    CHECK(((p.values - m.reward).array() < 0.01).all());
    CHECK(perturb_rewards(m.reward, 0.0, 3).values == m.reward);
}

TEST_CASE("uniform draws lie in [0, 1)") {
    CounterRng r(42);
    double lo = 1, hi = 0, mean = 0;
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        mean += u / 100000;
    }
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
}
