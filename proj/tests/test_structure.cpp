#include <doctest.h>

#include "camdp/instances.hpp"
#include "camdp/structure.hpp"

using namespace camdp;

TEST_CASE("geometric escape: hitting time 1/p") {
    MatrixXd P(2, 2);
    P << 0.75, 0.25, 0, 1;
    const VectorXd t = hitting_time_to_recurrent(P);
    CHECK(t(0) == doctest::Approx(4.0));
    CHECK(t(1) == 0.0);
}

TEST_CASE("deterministic ring: diameter S-1") {
    // Action 0 steps forward around a ring of 4; action 1 stays.
    Cmdp m = Cmdp::zeros(4, 2);
    m.kernel.setZero();
    for (Index s = 0; s < 4; ++s) {
        m.kernel(m.row(s, 0), (s + 1) % 4) = 1;
        m.kernel(m.row(s, 1), s) = 1;
    }
    m.start.setConstant(0.25);
    const VectorXd t = min_hitting_time(m, 0);
    CHECK(t(1) == doctest::Approx(3.0));
    CHECK(t(3) == doctest::Approx(1.0));
    const auto p = structural_params(m);
    CHECK(p.D == doctest::Approx(3.0));
    // Staying everywhere except one state leaves a transient run of at most 3 steps.
    CHECK(p.B == doctest::Approx(3.0));
}

TEST_CASE("unreachable target gives infinite hitting time") {
    Cmdp m = Cmdp::zeros(2, 1);
    m.kernel << 1, 0, 0, 1;
    m.start << 1, 0;
    const VectorXd t = min_hitting_time(m, 1);
    CHECK(std::isinf(t(0)));
}

TEST_CASE("structural parameters of a full-support instance") {
    const Cmdp m = random_binding_instance(3, 2, 5);
    const auto p = structural_params(m);
    CHECK(p.B == 0.0);  // every policy is irreducible
    CHECK(p.H > 0.0);
    CHECK(p.D >= 1.0);
    CHECK(p.zeta > 0.0);
}
