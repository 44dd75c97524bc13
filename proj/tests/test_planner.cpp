#include <doctest.h>

#include "camdp/instances.hpp"
#include "camdp/planner.hpp"

using namespace camdp;

TEST_CASE("discounted planner matches exhaustive search") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RandomInstanceOptions opt;
        opt.density = seed % 2 ? 0.5 : 1.0;
        const Cmdp m = random_instance(4, 3, seed, opt);
        const double gamma = seed % 3 == 0 ? 0.99 : 0.9;
        const DeterministicPolicy d = solve_discounted<double>(m.kernel, m.reward, gamma, 1e-6);
        const VectorXd Vd = discounted_value<double>(transition_matrix<double>(d, m.kernel, 3),
                                                     policy_reward<double>(d, m.reward), gamma);
        VectorXd best = VectorXd::Constant(4, -1e300);
        for_each_deterministic(4, 3, 1e6, [&](const DeterministicPolicy& e) {
            const VectorXd V = discounted_value<double>(transition_matrix<double>(e, m.kernel, 3),
                                                        policy_reward<double>(e, m.reward), gamma);
            best = best.cwiseMax(V);
        });
        CHECK((best - Vd).maxCoeff() < 1e-9);
    }
}

TEST_CASE("combined reward is the normalized Lagrangian") {
    MatrixXd r(1, 2), c(1, 2);
    r << 1, 0;
    c << 0, 1;
    const MatrixXd w = combined_reward<double>(r, c, 3.0);
    CHECK(w(0, 0) == doctest::Approx(0.25));
    CHECK(w(0, 1) == doctest::Approx(0.75));
    CHECK_THROWS_AS(combined_reward<double>(r, c, -1.0), ArgumentError);
}

TEST_CASE("gain table argmax and tie-breaking") {
    Cmdp m = Cmdp::zeros(1, 2);
    m.kernel << 1, 1;
    m.reward << 1, 0;
    m.constraint << 0, 1;
    m.start << 1;
    const auto t = policy_gain_table<double>(m.kernel, m.reward, m.constraint, m.start);
    REQUIRE(t.policies.size() == 2);
    CHECK(t.best(0.5) == 0);
    CHECK(t.best(1.0) == 0);  // tie keeps the earliest
    CHECK(t.best(1.5) == 1);
}
