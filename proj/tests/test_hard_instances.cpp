#include <doctest.h>

#include <cmath>

#include "camdp/hard_instances.hpp"
#include "camdp/structure.hpp"

using namespace camdp;

namespace {

double best_gain_at(const Cmdp& m, Index s, DeterministicPolicy* arg = nullptr) {
    double best = -1;
    for_each_deterministic(m.n_states, m.n_actions, 1e6, [&](const DeterministicPolicy& d) {
        const auto gb = gain_bias(Policy::from_deterministic(d, m.n_actions), m, RewardKind::reward);
        if (gb.gain(s) > best + 1e-13) {
            best = gb.gain(s);
            if (arg) *arg = d;
        }
    });
    return best;
}

} // namespace

TEST_CASE("reference component: gain 1/2 from state 1 via the reference arm") {
    const Cmdp m = build_general_component(std::nullopt, 3, 4.0, 0.1, 0.25);
    CHECK_NOTHROW(validate(m));
    DeterministicPolicy d;
    CHECK(best_gain_at(m, 1, &d) == doctest::Approx(0.5));
    CHECK(d[1] == 0);
    const auto gb = gain_bias(Policy::from_deterministic(d, m.n_actions), m, RewardKind::reward);
    CHECK(std::abs(gb.bias(1) - gb.bias(4)) < 1e-12);
}

TEST_CASE("designated component: gain (1 + 2 eps zeta)/2 via the designated arm") {
    const double eps = 0.1, zeta = 0.25;
    const Cmdp m = build_general_component(2, 3, 4.0, eps, zeta);
    DeterministicPolicy d;
    CHECK(best_gain_at(m, 1, &d) == doctest::Approx((1 + 2 * eps * zeta) / 2));
    CHECK(d[1] == 2);
    // Non-designated arm: (1 - 2 eps zeta)/2 reward, b - zeta - eps zeta constraint.
    DeterministicPolicy other(6, 0);
    other[1] = 1;
    const Policy pi = Policy::from_deterministic(other, m.n_actions);
    CHECK(gain_bias(pi, m, RewardKind::reward).gain(1) == doctest::Approx((1 - 2 * eps * zeta) / 2));
    CHECK(gain_bias(pi, m, RewardKind::constraint).gain(1) == doctest::Approx(0.5 - zeta - eps * zeta));
    // Designated arm constraint: (b - zeta - eps zeta)(1 + 2 eps zeta)/(1 - 2 eps zeta).
    const Policy star = Policy::from_deterministic(d, m.n_actions);
    const double x = eps * zeta;
    CHECK(gain_bias(star, m, RewardKind::constraint).gain(1) ==
          doctest::Approx((0.5 - zeta - x) * (1 + 2 * x) / (1 - 2 * x)));
}

TEST_CASE("master M0: lp1 optimum (1/2, 1/2, 0) with rho* = 1/4") {
    GeneralHardParams p;
    p.S = 13;
    p.A = 3;
    p.B = 3;
    p.epsilon = 0.04;
    p.zeta = 0.25;
    const Cmdp m = build_general_master(p);
    CHECK_NOTHROW(validate(m));
    CHECK_NOTHROW(check_general_layout(m, p));
    const auto sol = solve_camdp_lp(m);
    REQUIRE(sol.status == LpStatus::optimal);
    const HardOccupancy o = hard_occupancy(m, p, sol.mu, sol.transient);
    CHECK(o.mu0 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(o.mu1 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(o.mu2) < 1e-12);
    CHECK(sol.objective == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(occupancy_fraction_mu1(m, p, sol) >= 2.0 / 3.0);
    CHECK(slater_constant(m) == doctest::Approx(p.zeta));
}

TEST_CASE("perturbed master at eps = 1e-2 matches the first-order optimum within 10 eps^2") {
    GeneralHardParams p;
    p.epsilon = 1e-2;
    p.zeta = 0.25;
    p.s_star = 0;
    p.a_star = 2;
    const Cmdp m = build_general_master(p);
    const auto sol = solve_camdp_lp(m);
    const double target = 0.25 + p.epsilon / 8 + 3 * p.epsilon * p.zeta / 8;
    CHECK(std::abs(sol.objective - target) <= 10 * p.epsilon * p.epsilon);
    CHECK(occupancy_fraction_mu1(m, p, sol) <= 2.0 / 3.0);
}

TEST_CASE("mu1' of the always-reference policy is 1") {
    GeneralHardParams p;
    const Cmdp m = build_general_master(p);
    const Policy pi = Policy::from_deterministic(DeterministicPolicy(static_cast<std::size_t>(m.n_states), 0), m.n_actions);
    CHECK(occupancy_fraction_mu1(m, p, pi) == doctest::Approx(1.0));
    GeneralHardParams other = p;
    other.S = 13;
    CHECK_THROWS_AS(occupancy_fraction_mu1(m, other, pi), ArgumentError);
}

TEST_CASE("dwell time at the exit-arm state equals B") {
    for (double B : {1.0, 2.5, 8.0}) {
        const Cmdp m = build_general_component(1, 3, B, 0.05, 0.25);
        DeterministicPolicy d(6, 0);
        d[1] = 2;
        const VectorXd t = hitting_time_to_recurrent(transition_matrix<double>(d, m.kernel, m.n_actions));
        CHECK(t(1) == doctest::Approx(B));
    }
}

TEST_CASE("KL between the designated rows") {
    CHECK(kl_designated_rows(0.0, 0.3, 10).kl == 0.0);
    const KlResult r = kl_designated_rows(0.1, 0.5, 10);
    CHECK(r.bound == doctest::Approx(8e-3));
    CHECK(r.kl <= r.bound);
    // Direct sum over the categorical entries, in both orders.
    const double x = 0.05, B = 10;
    const double q1[] = {1 - 1 / B, (1 - 2 * x) / (2 * B), (1 + 2 * x) / (2 * B)};
    const double q2[] = {1 - 1 / B, (1 + 2 * x) / (2 * B), (1 - 2 * x) / (2 * B)};
    double kl12 = 0, kl21 = 0;
    for (int i = 0; i < 3; ++i) {
        kl12 += q1[i] * std::log(q1[i] / q2[i]);
        kl21 += q2[i] * std::log(q2[i] / q1[i]);
    }
    CHECK(r.kl == doctest::Approx(kl12).epsilon(1e-12));
    CHECK(kl12 == doctest::Approx(kl21).epsilon(1e-12));
    CHECK_THROWS_AS(kl_designated_rows(1.0, 0.5, 10), ArgumentError);
}

TEST_CASE("parameter validation") {
    GeneralHardParams p;
    p.A = 2;
    CHECK_THROWS_AS(p.validate(), ArgumentError);
    p = {};
    p.S = 8;
    CHECK_THROWS_AS(p.validate(), ArgumentError);
    p = {};
    p.s_star = 0;
    p.a_star = 0;
    CHECK_THROWS_AS(p.validate(), ArgumentError);
    p = {};
    p.zeta = 0.5;  // pushes a constraint entry below zero
    CHECK_THROWS_AS(p.validate(), ArgumentError);
    CommunicatingHardParams c;
    c.epsilon = 0.1;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = {};
    c.D = 8;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
}

TEST_CASE("communicating family: (19, 4, 64) is communicating with diameter <= 64") {
    CommunicatingHardParams c;
    const auto layout = communicating_layout(c);
    CHECK(c.components() == 5);
    CHECK(c.internal_nodes() == 4);
    CHECK(layout.x.size() == 5);
    const Cmdp m = build_communicating_hard(c);
    CHECK_NOTHROW(validate(m));
    CHECK(is_communicating(m));
    double D = 0;
    for (Index j = 0; j < m.n_states; ++j) D = std::max(D, min_hitting_time(m, j).maxCoeff());
    CHECK(D <= 64);

    CommunicatingHardParams k = c;
    k.k = 2;
    const Cmdp mk = build_communicating_hard(k);
    CHECK(is_communicating(mk));
    // Share of the reference arm in the long-run play at the x states.
    auto frac = [&](const Cmdp& inst) {
        const auto sol = solve_camdp_lp(inst);
        double ref = 0, tot = 0;
        for (Index x : layout.x) {
            ref += sol.mu(x, 0);
            tot += sol.mu.row(x).head(c.A - 1).sum();
        }
        return ref / tot;
    };
    CHECK(frac(m) >= 2.0 / 3.0);
    CHECK(frac(mk) <= 2.0 / 3.0);
}
