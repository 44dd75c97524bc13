#include <doctest.h>

#include "camdp/instances.hpp"
#include "camdp/oracle.hpp"

using namespace camdp;

namespace {

// One state; action 0 pays reward, action 1 pays constraint.
Cmdp split_instance(double b) {
    Cmdp m = Cmdp::zeros(1, 2);
    m.kernel << 1, 1;
    m.reward << 1, 0;
    m.constraint << 0, 1;
    m.start << 1;
    m.threshold = b;
    return m;
}

// Transient start choosing between a reward sink and a constraint sink.
Cmdp fork_instance(double b) {
    Cmdp m = Cmdp::zeros(3, 2);
    m.kernel.setZero();
    m.kernel(m.row(0, 0), 1) = 1;
    m.kernel(m.row(0, 1), 2) = 1;
    for (Index a = 0; a < 2; ++a) {
        m.kernel(m.row(1, a), 1) = 1;
        m.kernel(m.row(2, a), 2) = 1;
        m.reward(1, a) = 1;
        m.constraint(2, a) = 1;
    }
    m.start << 1, 0, 0;
    m.threshold = b;
    return m;
}

} // namespace

TEST_CASE("single-state split: rho* = 1 - b and lambda* = 1") {
    const auto sol = solve_camdp_lp(split_instance(0.3));
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective == doctest::Approx(0.7));
    CHECK(sol.mu(0, 0) == doctest::Approx(0.7));
    CHECK(sol.mu(0, 1) == doctest::Approx(0.3));
    CHECK(sol.dual_lambda == doctest::Approx(1.0));
    CHECK(sol.constraint_value == doctest::Approx(0.3));
    CHECK(std::abs(sol.objective - sol.dual_objective) < 1e-12);
    const Policy pi = policy_from_occupancy(sol);
    CHECK(pi.probs(0, 0) == doctest::Approx(0.7));
    CHECK(slater_constant(split_instance(0.3)) == doctest::Approx(0.7));
}

TEST_CASE("unattainable threshold is infeasible") {
    CHECK(solve_camdp_lp(split_instance(1.5)).status == LpStatus::infeasible);
    CHECK(slater_constant(split_instance(1.5)) == doctest::Approx(-0.5));
}

TEST_CASE("multichain LP randomizes at the transient state") {
    const Cmdp m = fork_instance(0.5);
    const auto sol = solve_camdp_lp(m);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective == doctest::Approx(0.5));
    const Policy pi = policy_from_occupancy(sol);
    CHECK(pi.probs(0, 0) == doctest::Approx(0.5));
    const auto gb = gain_bias(pi, m, RewardKind::reward);
    CHECK(m.start.dot(gb.gain) == doctest::Approx(0.5));
    CHECK(m.start.dot(gain_bias(pi, m, RewardKind::constraint).gain) == doctest::Approx(0.5));
}

TEST_CASE("unichain and multichain forms agree on full-support instances") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Cmdp m = random_binding_instance(4, 3, seed);
        const auto a = solve_camdp_lp(m, std::optional<double>{}, LpForm::multichain);
        const auto b = solve_camdp_lp(m, std::optional<double>{}, LpForm::unichain);
        REQUIRE(a.status == LpStatus::optimal);
        REQUIRE(b.status == LpStatus::optimal);
        CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-10));
    }
}

TEST_CASE("unconstrained LP optimum equals policy enumeration") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RandomInstanceOptions opt;
        opt.density = seed % 2 ? 0.4 : 1.0;
        const Cmdp m = random_instance(4, 2, seed, opt);
        LpOptions<double> o;
        o.with_constraint = false;
        const auto sol = solve_occupancy_lp(m, o);
        const auto best = enumerate_policies(m, RewardKind::reward);
        CHECK(sol.objective == doctest::Approx(best.gain).epsilon(1e-10));
        CHECK(best.evaluated == 16);
    }
}

TEST_CASE("LP optimum is attained by the extracted policy on binding instances") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Cmdp m = random_binding_instance(4, 3, seed);
        const auto sol = solve_camdp_lp(m);
        const Policy pi = policy_from_occupancy(sol);
        CHECK(m.start.dot(gain_bias(pi, m, RewardKind::reward).gain) == doctest::Approx(sol.objective).epsilon(1e-9));
        CHECK(m.start.dot(gain_bias(pi, m, RewardKind::constraint).gain) >= m.threshold - 1e-9);
        // Binding: the constraint is active and the multiplier positive.
        CHECK(sol.constraint_value == doctest::Approx(m.threshold).epsilon(1e-9));
        CHECK(sol.dual_lambda > 0);
    }
}
