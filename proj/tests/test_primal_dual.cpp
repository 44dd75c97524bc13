#include <doctest.h>

#include <map>
#include <sstream>

#include "camdp/instances.hpp"
#include "camdp/oracle.hpp"
#include "camdp/primal_dual.hpp"

using namespace camdp;

namespace {

Cmdp split_instance() {
    Cmdp m = Cmdp::zeros(1, 2);
    m.kernel << 1, 1;
    m.reward << 1, 0;
    m.constraint << 0, 1;
    m.start << 1;
    m.threshold = 0.5;
    return m;
}

PrimalDualConfig manual(double U, double eps_net, double eta, double b_prime, IterCount T) {
    PrimalDualConfig c;
    c.U = U;
    c.eps_net = eps_net;
    c.eta = eta;
    c.b_prime = b_prime;
    c.T = T;
    return c;
}

std::map<DeterministicPolicy, IterCount> counts(const PrimalDualResult& r) {
    std::map<DeterministicPolicy, IterCount> out;
    for (const auto& p : r.trace.policies)
        if (p.count) out[p.policy] = p.count;
    return out;
}

} // namespace

TEST_CASE("projection and rounding onto the net") {
    CHECK(project_interval(-1.0, 2.0) == 0.0);
    CHECK(project_interval(3.0, 2.0) == 2.0);
    CHECK(round_to_net(0.75, 0.5, 2.0) == 0.5);  // tie goes down
    CHECK(round_to_net(0.76, 0.5, 2.0) == 1.0);
    CHECK(round_to_net(1.9, 0.5, 1.9) == 1.9);  // U itself is on the net
    CHECK(round_to_net(1.8, 0.5, 1.9) == 1.9);
    CHECK(round_to_net(1.7, 0.5, 1.9) == 1.5);
    CHECK_THROWS_AS(round_to_net(2.5, 0.5, 2.0), ArgumentError);
    // lambda - eta (rho_c - b'), projected then rounded.
    CHECK(dual_step(1.0, 1.0, 0.0, 0.5, 2.0, 0.5) == 1.5);
    CHECK(dual_step(1.0, 1.0, 1.0, 0.5, 2.0, 0.5) == 0.5);
    CHECK(dual_step(1.8, 1.0, 0.0, 0.5, 2.0, 0.5) == 2.0);
}

TEST_CASE("index-space net agrees with value-space rounding") {
    const DualNet net(0.5, 1.9);
    CHECK(net.grid_max() == 3);
    CHECK(net.top() == 4);
    CHECK(net.value(4) == doctest::Approx(1.9));
    CounterRng rng(1);
    IterCount k = 0;
    for (int i = 0; i < 2000; ++i) {
        const double delta = (rng.uniform() - 0.5) * 6;
        const IterCount next = net.step(k, delta);
        const double expect = round_to_net(project_interval(static_cast<double>(net.value(k)) + delta * 0.5, 1.9), 0.5, 1.9);
        REQUIRE(static_cast<double>(net.value(next)) == doctest::Approx(expect));
        k = next;
    }
}

TEST_CASE("iteration counts print and parse exactly") {
    const IterCount big = parse_count("123456789012345678901234567890");
    CHECK(count_to_string(big) == "123456789012345678901234567890");
    CHECK(parse_count("1e24") == parse_count("1000000000000000000000000"));
    CHECK(ceil_count(2.5L) == 3);
    CHECK_THROWS_AS(ceil_count(1e38L), ArgumentError);
    CHECK_THROWS_AS(parse_count("12x"), ArgumentError);
}

TEST_CASE("hand-traced run on a single-state split instance") {
    const Cmdp m = split_instance();
    ExactGainOracle o(m.kernel, m.reward, m.constraint, m.start);
    EngineOptions lit;
    lit.kind = EngineKind::literal;
    // lambda: 0, .5, 1, 1.5, 1, 1.5, 1; actions 0 0 0 1 0 1 0.
    const auto r = run_primal_dual(o, m.kernel, m.reward, m.constraint, m.start, manual(2, 0.5, 1, 0.5, 7), lit);
    const auto c = counts(r);
    CHECK(c.at({0}) == 5);
    CHECK(c.at({1}) == 2);
    CHECK(r.trace.final_index == 3);
    const auto rec = r.trace.records();
    REQUIRE(rec.size() == 7);
    const double lam[] = {0, 0.5, 1, 1.5, 1, 1.5, 1};
    for (int t = 0; t < 7; ++t) CHECK(static_cast<double>(rec[t].lambda) == doctest::Approx(lam[t]));
    CHECK(static_cast<double>(dual_regret(r.trace, 0.0, 0.5)) == doctest::Approx(-0.25));
    CHECK(static_cast<double>(dual_regret(rec, 0.0, 0.5)) == doctest::Approx(-0.25));
    CHECK(mixture_value(r.mixture, m, RewardKind::reward) == doctest::Approx(5.0 / 7.0));

    ExactGainOracle o2(m.kernel, m.reward, m.constraint, m.start);
    const auto a = run_primal_dual(o2, m.kernel, m.reward, m.constraint, m.start, manual(2, 0.5, 1, 0.5, 7));
    CHECK(counts(a) == c);
    CHECK(a.trace.final_index == 3);
}

TEST_CASE("accelerated engine reproduces the literal loop on random instances") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const Cmdp m = random_binding_instance(4, 3, seed);
        CounterRng rng(seed * 77 + 1);
        PrimalDualConfig cfg = manual(0.3 + 5 * rng.uniform(), 0, 0, m.threshold, 20000 + 37 * seed);
        cfg.eps_net = cfg.U * (0.0005 + 0.2 * rng.uniform() * rng.uniform());
        cfg.eta = 3 * rng.uniform() * rng.uniform() + 1e-4;
        ExactGainOracle o1(m.kernel, m.reward, m.constraint, m.start), o2(m.kernel, m.reward, m.constraint, m.start);
        EngineOptions lit;
        lit.kind = EngineKind::literal;
        const auto a = run_primal_dual(o1, m.kernel, m.reward, m.constraint, m.start, cfg, lit);
        const auto b = run_primal_dual(o2, m.kernel, m.reward, m.constraint, m.start, cfg);
        CAPTURE(seed);
        CHECK(counts(a) == counts(b));
        CHECK(a.trace.final_index == b.trace.final_index);
        const long double ra = dual_regret(a.trace, cfg.U, cfg.b_prime), rb = dual_regret(b.trace, cfg.U, cfg.b_prime);
        CHECK(static_cast<double>(ra) == doctest::Approx(static_cast<double>(rb)).epsilon(1e-9));
        CHECK(b.planner_calls <= a.planner_calls);
    }
}

TEST_CASE("known-dual schedule meets its guarantee with the exact planner") {
    const Cmdp m = random_binding_instance(4, 3, 3);
    const auto star = solve_camdp_lp(m);
    const double U = 4.0 / slater_constant(m);
    const auto cfg = known_dual_schedule(0.05, U, star.dual_lambda, m.threshold);
    ExactGainOracle o(m.kernel, m.reward, m.constraint, m.start);
    const auto r = run_primal_dual(o, m.kernel, m.reward, m.constraint, m.start, cfg);
    CHECK(r.status == RunStatus::complete);
    CHECK(star.objective - mixture_value(r.mixture, m, RewardKind::reward) <= 0.05);
    CHECK(mixture_value(r.mixture, m, RewardKind::constraint) >= m.threshold - 0.05);
    const long double bound = dual_regret_bound(cfg.T, cfg.eps_net, cfg.U);
    CHECK(dual_regret(r.trace, 0.0, cfg.b_prime) <= bound);
    CHECK(dual_regret(r.trace, cfg.U, cfg.b_prime) <= bound);
    CHECK(r.mixture.total_weight() == doctest::Approx(1.0));
}

TEST_CASE("schedule identities") {
    const auto r = relaxed_schedule(0.2, 1.0, 0.5, 0.5);
    const double g1 = 1 - r.gamma;
    CHECK(r.eps_opt == doctest::Approx(0.05));
    CHECK(g1 == doctest::Approx(0.05 / (4 * 1.5)));
    CHECK(r.b_prime == doctest::Approx(0.5 - 0.075));
    CHECK(r.U == doctest::Approx(32.0 / (5 * 0.2 * g1)));
    CHECK(r.eps_net == doctest::Approx(0.04 * g1 * g1 / 96));
    CHECK(r.omega == doctest::Approx(0.2 * g1 / 8));
    CHECK(r.lambda_bar == doctest::Approx(r.U / 2));

    const auto s = strict_schedule(0.2, 1.0, 0.5, 0.4, 0.5);
    const double sg = 1 - s.gamma;
    CHECK(sg == doctest::Approx(0.04 / (4 * 1.5)));
    const double delta = 0.2 * sg * 0.4 / 40;
    CHECK(s.b_prime == doctest::Approx(0.5 + delta));
    CHECK(s.eps_opt == doctest::Approx(delta / 5));
    // Delta^2 (1-gamma)^2/150 = eps^2 zeta^2 (1-gamma)^4 / 240000.
    CHECK(s.eps_net == doctest::Approx(0.04 * 0.16 * sg * sg * sg * sg / 240000));
    CHECK(s.U == doctest::Approx(8 / (0.4 * sg)));

    CHECK_THROWS_AS(strict_schedule(0.2, 1, 1, 0.0, 0.5), ArgumentError);
    CHECK_THROWS_AS(relaxed_schedule(0.0, 1, 1, 0.5), ArgumentError);
    const auto k = known_dual_schedule(0.1, 4.0, 1.0, 0.5);
    CHECK(static_cast<double>(k.T) == doctest::Approx(std::ceil(1600.0 * (1 + 1.0 / 9))));
    CHECK(k.eps_net == doctest::Approx(0.01 * 3 / 24));
}

TEST_CASE("zero B + H is floored so the discount stays below 1") {
    const auto r = relaxed_schedule(0.2, 0.0, 0.0, 0.5);
    CHECK(r.gamma == doctest::Approx(0.5));
    bool noted = false;
    for (const auto& p : r.provenance) noted |= p.rule.find("floored") != std::string::npos;
    CHECK(noted);
}

TEST_CASE("literal engine truncates at the work ceiling") {
    const Cmdp m = split_instance();
    ExactGainOracle o(m.kernel, m.reward, m.constraint, m.start);
    EngineOptions lit;
    lit.kind = EngineKind::literal;
    lit.max_work = 100;
    const auto r = run_primal_dual(o, m.kernel, m.reward, m.constraint, m.start, manual(2, 0.5, 1, 0.5, 1000), lit);
    CHECK(r.status == RunStatus::truncated);
}

TEST_CASE("accelerated engine runs astronomically long schedules in closed form") {
    const Cmdp m = split_instance();
    ExactGainOracle o(m.kernel, m.reward, m.constraint, m.start);
    const auto r = run_primal_dual(o, m.kernel, m.reward, m.constraint, m.start,
                                   manual(2, 0.5, 1, 0.5, parse_count("1e30")));
    CHECK(r.status == RunStatus::complete);
    CHECK(r.trace.iterations == parse_count("1e30"));
    // The orbit 1, 1.5 alternates after a 3-step prefix.
    CHECK(mixture_value(r.mixture, m, RewardKind::reward) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("trace CSV has one row per segment") {
    const Cmdp m = split_instance();
    ExactGainOracle o(m.kernel, m.reward, m.constraint, m.start);
    EngineOptions lit;
    lit.kind = EngineKind::literal;
    const auto r = run_primal_dual(o, m.kernel, m.reward, m.constraint, m.start, manual(2, 0.5, 1, 0.5, 7), lit);
    std::ostringstream out;
    write_trace_csv(r.trace, out);
    const std::string s = out.str();
    CHECK(s.rfind("iter,lambda,rho_c_hat,rho_combined_hat,policy_id\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) == r.trace.segments.size() + 1);
}

TEST_CASE("discounted oracle on the empirical model") {
    const Cmdp m = random_binding_instance(3, 2, 4);
    const auto e = build_empirical_model(m, 2000, 1);
    const auto rp = perturb_rewards(m.reward, 1e-3, 1);
    PrimalDualConfig cfg = manual(5, 0.01, 0.1, m.threshold, 2000);
    cfg.gamma = 0.95;
    cfg.planner_tol = 1e-6;
    const auto r = run_primal_dual(e, rp, m.constraint, m.start, cfg);
    CHECK(r.status == RunStatus::complete);
    CHECK(r.mixture.total_weight() == doctest::Approx(1.0));
    CHECK(r.trace.iterations == 2000);
}
