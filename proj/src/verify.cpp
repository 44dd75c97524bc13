#include "camdp/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "camdp/chain.hpp"
#include "camdp/hard_instances.hpp"
#include "camdp/instances.hpp"
#include "camdp/oracle.hpp"
#include "camdp/primal_dual.hpp"
#include "camdp/structure.hpp"

namespace camdp {

bool SuiteReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::string SuiteReport::first_failure() const {
    for (const auto& c : checks)
        if (!c.pass) return c.name;
    return "";
}

namespace {

std::string fmt(double v) {
    std::ostringstream o;
    o.precision(4);
    o << v;
    return o.str();
}

/// Counts failures of one invariant and keeps the worst margin seen.
struct Tally {
    explicit Tally(std::string n) : name(std::move(n)) {}

    std::string name;
    long n = 0;
    long failures = 0;
    double worst = -INFINITY;  // largest (lhs - rhs)
    std::string first;

    void add(bool ok, double excess, const std::string& where) {
        ++n;
        worst = std::max(worst, excess);
        if (!ok) {
            if (failures == 0) first = where;
            ++failures;
        }
    }
    CheckResult result() const {
        CheckResult c{name, failures == 0 && n > 0, ""};
        c.detail = std::to_string(n - failures) + "/" + std::to_string(n) + " hold, worst lhs-rhs " + fmt(worst);
        if (failures) c.detail += ", first failure at " + first;
        return c;
    }
};

template <typename F>
SuiteReport timed(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteReport r;
    r.suite = name;
    try {
        body(r);
    } catch (const std::exception& e) {
        r.checks.push_back({"suite ran without error", false, e.what()});
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

double true_objective(const Cmdp& m, const MatrixXd& mu) { return (m.reward.array() * mu.array()).sum(); }

} // namespace

std::vector<std::string> suite_names() {
    return {"core-identities", "duality", "regret", "hard-instances", "schedules"};
}

SuiteReport run_suite(const std::string& name) {
    if (name == "core-identities") return verify_core_identities();
    if (name == "duality") return verify_duality();
    if (name == "regret") return verify_regret();
    if (name == "hard-instances") return verify_hard_instances();
    if (name == "schedules") return verify_schedules();
    throw ArgumentError("unknown suite '" + name + "'");
}

// ---------------------------------------------------------------- core identities

SuiteReport verify_core_identities(int instances, int policies, std::uint64_t seed) {
    return timed("core-identities", [&](SuiteReport& rep) {
        Tally poisson{"bias equation residual <= 1e-8"}, stationary{"P rho = rho residual <= 1e-8"},
            centred{"P_inf h = 0 residual <= 1e-8"}, disc{"|V_gamma - rho/(1-gamma)| <= span(h)"};
        const double gammas[] = {0.5, 0.9, 0.99};
        for (int i = 0; i < instances; ++i) {
            const Index S = 1 + i % 6, A = 1 + (i / 6) % 4;
            RandomInstanceOptions opt;
            // Sparse kernels give multichain policies.
            opt.density = i % 3 == 0 ? 0.35 : 1.0;
            const std::uint64_t is = seed * 1'000'003 + static_cast<std::uint64_t>(i);
            const Cmdp m = random_instance(S, A, is, opt);
            for (int j = 0; j < policies; ++j) {
                const std::uint64_t ps = is * 31 + static_cast<std::uint64_t>(j);
                const Policy pi = j < 2 ? Policy::from_deterministic(random_deterministic_policy(S, A, ps), A)
                                        : random_policy(S, A, ps);
                const MatrixXd P = transition_matrix(pi, m);
                const VectorXd r = policy_reward(pi, m.reward);
                const auto gb = gain_bias(P, r);
                const std::string where = "instance " + std::to_string(i) + " policy " + std::to_string(j);
                const double res1 = (gb.gain + gb.bias - r - P * gb.bias).lpNorm<Eigen::Infinity>();
                const double res2 = (P * gb.gain - gb.gain).lpNorm<Eigen::Infinity>();
                const double res3 = (stationary_matrix(P) * gb.bias).lpNorm<Eigen::Infinity>();
                poisson.add(res1 <= 1e-8, res1 - 1e-8, where);
                stationary.add(res2 <= 1e-8, res2 - 1e-8, where);
                centred.add(res3 <= 1e-8, res3 - 1e-8, where);
                const double sp = span(gb.bias);
                for (double g : gammas) {
                    const VectorXd V = discounted_value(P, r, g);
                    const double lhs = (V - gb.gain / (1.0 - g)).lpNorm<Eigen::Infinity>();
                    // Rounding slack only; the bound itself is exact.
                    const double tol = 1e-9 * (1.0 + V.lpNorm<Eigen::Infinity>());
                    disc.add(lhs <= sp + tol, lhs - sp, where + " gamma " + fmt(g));
                }
            }
        }
        for (const Tally* t : {&poisson, &stationary, &centred, &disc}) rep.checks.push_back(t->result());
    });
}

// ---------------------------------------------------------------- duality

SuiteReport verify_duality(int seeds) {
    return timed("duality", [&](SuiteReport& rep) {
        const double omega = 0.05;
        const double relax[] = {0.05, 0.1, 0.2};
        Tally strong{"LP primal = dual within 1e-9"}, relaxed{"lambda*(b - eps') <= 2(1+omega)/eps'"},
            strict{"lambda*(b + Delta) <= 2(1+omega)/zeta for Delta < zeta/2"},
            sens{"|rho*(b) - rho*(b+Delta)| <= Delta lambda*(b+Delta)"},
            enumer{"unconstrained LP optimum = best deterministic policy"};
        for (int i = 0; i < seeds; ++i) {
            const std::uint64_t seed = 500 + static_cast<std::uint64_t>(i);
            const Index S = 3 + i % 3, A = 2 + i % 2;
            const Cmdp m = random_binding_instance(S, A, seed);
            const PerturbedReward rp = perturb_rewards(m.reward, omega, seed);
            const std::string where = "seed " + std::to_string(seed);
            auto solve_at = [&](double b) {
                LpOptions<double> o;
                o.objective = rp.values;
                o.threshold = b;
                const auto sol = solve_occupancy_lp(m, o);
                if (sol.status != LpStatus::optimal) throw NumericalError("LP not optimal at " + where);
                const double d = std::abs(sol.objective - sol.dual_objective);
                strong.add(d <= 1e-9, d - 1e-9, where + " b " + fmt(b));
                return sol;
            };
            const double zeta = slater_constant(m);
            const auto base = solve_at(m.threshold);
            for (double e : relax) {
                const auto s = solve_at(m.threshold - e);
                const double bound = 2 * (1 + omega) / e;
                relaxed.add(s.dual_lambda <= bound, s.dual_lambda - bound, where + " eps' " + fmt(e));
            }
            const double delta = zeta / 4;
            const auto s = solve_at(m.threshold + delta);
            const double bound = 2 * (1 + omega) / zeta;
            strict.add(s.dual_lambda <= bound, s.dual_lambda - bound, where);
            const double drop = std::abs(base.objective - s.objective), cap = delta * s.dual_lambda + 1e-12;
            sens.add(drop <= cap, drop - cap, where);

            LpOptions<double> free;
            free.with_constraint = false;
            const auto u = solve_occupancy_lp(m, free);
            const auto best = enumerate_policies(m, RewardKind::reward);
            const double d = std::abs(u.objective - best.gain);
            enumer.add(d <= 1e-8, d - 1e-8, where);
        }
        for (const Tally* t : {&strong, &relaxed, &strict, &sens, &enumer}) rep.checks.push_back(t->result());
    });
}

// ---------------------------------------------------------------- known dual optimum

SuiteReport verify_known_dual(int runs, double eps_opt) {
    return timed("known-dual", [&](SuiteReport& rep) {
        Tally gap{"mixture gap <= eps_opt"}, shortfall{"constraint shortfall versus b' <= eps_opt"},
            reg0{"dual regret at lambda = 0 within bound"}, regU{"dual regret at lambda = U within bound"},
            mix{"mixture value = time average of iterate gains"};
        for (int i = 0; i < runs; ++i) {
            const std::uint64_t seed = 9000 + static_cast<std::uint64_t>(i);
            const Cmdp m = random_binding_instance(4, 3, seed);
            const std::string where = "seed " + std::to_string(seed);
            const auto star = solve_camdp_lp(m);
            const double zeta = slater_constant(m);
            const double U = 4.0 / zeta;
            const PrimalDualConfig cfg = known_dual_schedule(eps_opt, U, star.dual_lambda, m.threshold);
            ExactGainOracle oracle(m.kernel, m.reward, m.constraint, m.start);
            EngineOptions eo;
            eo.max_trace_segments = 0;
            eo.max_work = 100'000'000;
            const auto res = run_primal_dual(oracle, m.kernel, m.reward, m.constraint, m.start, cfg, eo);
            if (res.status != RunStatus::complete) throw NumericalError("run truncated at " + where);

            const double rho = mixture_value(res.mixture, m, RewardKind::reward);
            const double c = mixture_value(res.mixture, m, RewardKind::constraint);
            gap.add(star.objective - rho <= eps_opt, star.objective - rho - eps_opt, where);
            const double sf = std::max(0.0, cfg.b_prime - c);
            shortfall.add(sf <= eps_opt, sf - eps_opt, where);

            const long double bound = dual_regret_bound(cfg.T, cfg.eps_net, cfg.U);
            const long double r0 = dual_regret(res.trace, 0.0, cfg.b_prime);
            const long double rU = dual_regret(res.trace, cfg.U, cfg.b_prime);
            const double scale = static_cast<double>(bound);
            reg0.add(r0 <= bound, static_cast<double>(r0 - bound) / scale, where);
            regU.add(rU <= bound, static_cast<double>(rU - bound) / scale, where);

            long double avg = 0;
            const long double T = static_cast<long double>(res.trace.iterations);
            for (const auto& p : res.trace.policies)
                avg += static_cast<long double>(p.count) / T * start_gain(p.policy, m.kernel, m.reward, m.start);
            const double d = std::abs(static_cast<double>(avg) - rho);
            mix.add(d <= 1e-12, d - 1e-12, where);
        }
        for (const Tally* t : {&gap, &shortfall, &reg0, &regU, &mix}) rep.checks.push_back(t->result());
    });
}

SuiteReport verify_regret() {
    SuiteReport rep = verify_known_dual(20, 0.05);
    rep.suite = "regret";
    const auto t0 = std::chrono::steady_clock::now();
    Tally cross{"accelerated engine reproduces the literal loop"};
    try {
        for (int i = 0; i < 20; ++i) {
            const std::uint64_t seed = 7000 + static_cast<std::uint64_t>(i);
            const Cmdp m = random_binding_instance(4, 3, seed);
            PrimalDualConfig cfg;
            CounterRng rng(seed);
            cfg.U = 0.5 + 4 * rng.uniform();
            cfg.eps_net = cfg.U * (0.001 + 0.1 * rng.uniform());
            cfg.eta = 2 * rng.uniform() + 1e-3;
            cfg.b_prime = m.threshold;
            cfg.T = 50'000 + 997 * i;
            ExactGainOracle o1(m.kernel, m.reward, m.constraint, m.start), o2(m.kernel, m.reward, m.constraint, m.start);
            EngineOptions lit;
            lit.kind = EngineKind::literal;
            lit.max_trace_segments = 0;
            EngineOptions acc;
            acc.max_trace_segments = 0;
            const auto a = run_primal_dual(o1, m.kernel, m.reward, m.constraint, m.start, cfg, lit);
            const auto b = run_primal_dual(o2, m.kernel, m.reward, m.constraint, m.start, cfg, acc);
            std::map<DeterministicPolicy, IterCount> ca, cb;
            for (const auto& p : a.trace.policies)
                if (p.count) ca[p.policy] = p.count;
            for (const auto& p : b.trace.policies)
                if (p.count) cb[p.policy] = p.count;
            const long double ra = dual_regret(a.trace, cfg.U, cfg.b_prime);
            const long double rb = dual_regret(b.trace, cfg.U, cfg.b_prime);
            const double dr = static_cast<double>(std::abs(ra - rb) / (1 + std::abs(ra)));
            const bool ok = ca == cb && a.trace.final_index == b.trace.final_index && dr <= 1e-9;
            cross.add(ok, dr, "seed " + std::to_string(seed));
        }
        rep.checks.push_back(cross.result());
    } catch (const std::exception& e) {
        rep.checks.push_back({cross.name, false, e.what()});
    }
    rep.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---------------------------------------------------------------- hard instances

SuiteReport verify_hard_instances() {
    return timed("hard-instances", [&](SuiteReport& rep) {
        Tally lp1{"M0 optimum (mu0, mu1, mu2) = (1/2, 1/2, 0), rho* = 1/4 within 1e-9"},
            lp3{"perturbed master optimum = 1/4 + eps/8 + 3 eps zeta/8 within 10 eps^2"},
            sep0{"M0: every eps/24-optimal policy has mu1' >= 2/3"},
            sep1{"perturbed master: eps/24-optimal policies found have mu1' <= 2/3"},
            kl{"KL(Q1||Q2) <= 32 eps^2 zeta^2 / B"}, slater{"Slater constant within 2 eps zeta of nominal"},
            dwell{"dwell time at 6s+1 under a >= 2 equals B"},
            comm{"communicating instance with diameter <= D and 2/3 separation"};

        const std::pair<double, double> grid[] = {{0.08, 0.45}, {0.04, 0.25}};
        for (const auto& [eps, zeta] : grid)
            for (Index S : {Index(7), Index(13)})
                for (Index A : {Index(3), Index(4)})
                    for (double B : {2.0, 5.0}) {
                        GeneralHardParams p;
                        p.S = S;
                        p.A = A;
                        p.B = B;
                        p.epsilon = eps;
                        p.zeta = zeta;
                        const std::string where = "eps " + fmt(eps) + " zeta " + fmt(zeta) + " S " +
                                                  std::to_string(S) + " A " + std::to_string(A) + " B " + fmt(B);
                        const Cmdp m0 = build_general_master(p);
                        const auto s0 = solve_camdp_lp(m0);
                        const HardOccupancy o0 = hard_occupancy(m0, p, s0.mu, s0.transient);
                        const double e1 = std::max({std::abs(o0.mu0 - 0.5), std::abs(o0.mu1 - 0.5), std::abs(o0.mu2),
                                                    std::abs(o0.mu3), std::abs(s0.objective - 0.25)});
                        lp1.add(e1 <= 1e-9, e1 - 1e-9, where);

                        // lp2: the best value with mu1' <= 2/3 is more than eps/24 below the optimum.
                        LpOptions<double> o2;
                        o2.cuts.push_back(mu1_prime_cut(m0, RowSense::le));
                        const auto l2 = solve_occupancy_lp(m0, o2);
                        const double m2 = l2.status == LpStatus::optimal ? l2.objective - (s0.objective - eps / 24) : -1;
                        const double f0 = occupancy_fraction_mu1(m0, p, s0);
                        sep0.add(m2 < 0 && f0 >= 2.0 / 3.0, std::max(m2, 2.0 / 3.0 - f0), where);

                        const double z0 = slater_constant(m0);
                        slater.add(std::abs(z0 - zeta) <= 2 * eps * zeta, std::abs(z0 - zeta) - 2 * eps * zeta, where);

                        p.s_star = p.branches() - 1;
                        p.a_star = A - 1;
                        const Cmdp m1 = build_general_master(p);
                        const auto s1 = solve_camdp_lp(m1);
                        LpOptions<double> o4;
                        o4.cuts.push_back(mu1_prime_cut(m1, RowSense::ge));
                        const auto l4 = solve_occupancy_lp(m1, o4);
                        const double m4 = l4.status == LpStatus::optimal ? l4.objective - (s1.objective - eps / 24) : -1;
                        // Perturbed-LP search for near-optimal policies.
                        bool ok = m4 < 0;
                        double worst = m4;
                        CounterRng rng(static_cast<std::uint64_t>(S * 100 + A * 10) + static_cast<std::uint64_t>(B));
                        for (int t = 0; t < 30; ++t) {
                            LpOptions<double> o;
                            const double scale = eps * std::pow(10.0, -3 + 3 * rng.uniform());
                            MatrixXd noise(m1.n_states, m1.n_actions);
                            for (Index i = 0; i < noise.size(); ++i) noise(i) = scale * rng.uniform();
                            o.objective = MatrixXd(m1.reward + noise);
                            const auto sol = solve_occupancy_lp(m1, o);
                            if (sol.status != LpStatus::optimal) continue;
                            if (true_objective(m1, sol.mu) < s1.objective - eps / 24) continue;
                            const double f = occupancy_fraction_mu1(m1, p, policy_from_occupancy(sol));
                            worst = std::max(worst, f - 2.0 / 3.0);
                            if (f > 2.0 / 3.0) ok = false;
                        }
                        sep1.add(ok, worst, where);

                        for (Index a = 1; a < A; ++a) {
                            DeterministicPolicy d(static_cast<std::size_t>(m1.n_states), 0);
                            d[static_cast<std::size_t>(6 * *p.s_star + 1)] = static_cast<int>(a);
                            const VectorXd h = hitting_time_to_recurrent(transition_matrix<double>(d, m1.kernel, m1.n_actions));
                            const double dt = h(6 * *p.s_star + 1);
                            dwell.add(std::abs(dt - B) <= 1e-9 * B, std::abs(dt - B), where + " a " + std::to_string(a));
                        }
                    }

        for (double eps : {1e-2, 1e-3}) {
            GeneralHardParams p;
            p.epsilon = eps;
            p.zeta = 0.25;
            p.s_star = 0;
            p.a_star = 2;
            const Cmdp m = build_general_master(p);
            const auto s = solve_camdp_lp(m);
            const double target = 0.25 + eps / 8 + 3 * eps * 0.25 / 8;
            const double d = std::abs(s.objective - target);
            lp3.add(d <= 10 * eps * eps, d - 10 * eps * eps,
                    "eps " + fmt(eps) + " (optimum " + fmt(s.objective) + ", deviation " + fmt(d) + ")");
        }

        for (double eps : {0.01, 0.05, 0.1})
            for (double zeta : {0.1, 0.3, 0.5})
                for (double B : {1.0, 10.0, 100.0}) {
                    const KlResult k = kl_designated_rows(eps, zeta, B);
                    kl.add(k.kl <= k.bound, k.kl - k.bound, "eps " + fmt(eps) + " zeta " + fmt(zeta) + " B " + fmt(B));
                }

        CommunicatingHardParams cp;
        const Cmdp c0 = build_communicating_hard(cp);
        double diam = 0;
        for (Index j = 0; j < c0.n_states; ++j) diam = std::max(diam, min_hitting_time(c0, j).maxCoeff());
        comm.add(is_communicating(c0) && diam <= cp.D, diam - cp.D, "M0 diameter " + fmt(diam));
        const auto layout = communicating_layout(cp);
        // Share of the reference arm in the long-run play at the x states.
        auto arm_fraction = [&](const OccupancySolution<double>& sol) {
            double ref = 0, tot = 0;
            for (Index x : layout.x) {
                ref += sol.mu(x, 0);
                tot += sol.mu.row(x).head(cp.A - 1).sum();
            }
            return ref / tot;
        };
        const double f0 = arm_fraction(solve_camdp_lp(c0));
        for (Index k = 0; k < cp.components(); ++k) {
            CommunicatingHardParams pk = cp;
            pk.k = k;
            const Cmdp ck = build_communicating_hard(pk);
            const double fk = arm_fraction(solve_camdp_lp(ck));
            comm.add(is_communicating(ck) && f0 >= 2.0 / 3.0 && fk <= 2.0 / 3.0, std::max(2.0 / 3.0 - f0, fk - 2.0 / 3.0),
                     "leaf " + std::to_string(k));
        }
        for (const Tally* t : {&lp1, &lp3, &sep0, &sep1, &kl, &slater, &dwell, &comm}) rep.checks.push_back(t->result());
    });
}

// ---------------------------------------------------------------- schedules

SuiteReport verify_schedules() {
    return timed("schedules", [&](SuiteReport& rep) {
        auto rel = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
        Tally relaxed{"relaxed schedule identities"}, strict{"strict schedule identities"},
            errors{"invalid schedule arguments are rejected"}, net{"dual iterates stay on the net"},
            counts{"iteration counts round-trip through text"};
        for (double eps : {0.5, 0.2, 0.05})
            for (double bh : {0.0, 1.0, 7.5}) {
                const std::string where = "eps " + fmt(eps) + " B+H " + fmt(bh);
                const auto c = relaxed_schedule(eps, bh, 0.0, 0.5);
                const double g1 = 1 - c.gamma;
                const long double need = 4.0L * c.U * c.U / (c.eps_opt * c.eps_opt * g1 * g1);
                const bool ok = rel(c.eps_opt, eps / 4) && rel(c.b_prime, 0.5 - 3 * eps / 8) &&
                                std::abs(c.U * eps * g1 - 6.4) <= 1e-9 && std::abs(c.eps_net / (eps * eps * g1 * g1 / 96) - 1) <= 1e-9 &&
                                static_cast<long double>(c.T) >= need && c.gamma >= 0.5 && c.gamma < 1;
                relaxed.add(ok, 0, where);

                const double zeta = 0.3;
                const auto s = strict_schedule(eps, bh, 0.0, zeta, 0.5);
                const double sg = 1 - s.gamma;
                const double delta = s.b_prime - 0.5;
                const bool sok = delta > 0 && delta < zeta / 2 && std::abs(delta - eps * sg * zeta / 40) <= 1e-12 &&
                                 rel(s.eps_opt, delta / 5) && std::abs(s.U * zeta * sg - 8) <= 1e-9 &&
                                 static_cast<long double>(s.T) >= 4.0L * s.U * s.U / (s.eps_opt * s.eps_opt * sg * sg);
                strict.add(sok, 0, where);
            }
        auto throws = [](const std::function<void()>& f) {
            try {
                f();
            } catch (const ArgumentError&) {
                return true;
            }
            return false;
        };
        errors.add(throws([] { relaxed_schedule(0.0, 1, 1, 0.5); }), 0, "eps = 0");
        errors.add(throws([] { relaxed_schedule(1.5, 1, 1, 0.5); }), 0, "eps > 1");
        errors.add(throws([] { strict_schedule(0.2, 1, 1, 0.0, 0.5); }), 0, "zeta = 0");
        errors.add(throws([] { relaxed_schedule(0.2, -1, 1, 0.5); }), 0, "negative B");
        errors.add(throws([] { known_dual_schedule(0.1, 1.0, 2.0, 0.5); }), 0, "lambda* > U");
        errors.add(throws([] { strict_schedule(0.01, 7.5, 0.0, 0.3, 0.5); }), 0, "iteration count beyond 128 bits");

        for (double U : {1.0, 2.5, 10.0})
            for (double e : {0.3, 0.01, 1e-7}) {
                const DualNet dn(e * U, U);
                bool ok = dn.value(dn.top()) == U && dn.value(0) == 0;
                CounterRng rng(static_cast<std::uint64_t>(U * 1000 + e * 1e9));
                IterCount k = 0;
                for (int t = 0; t < 1000 && ok; ++t) {
                    const long double delta = (rng.uniform() - 0.5) * 4 / e;
                    const IterCount next = dn.step(k, delta);
                    ok = next >= 0 && next <= dn.top();
                    k = next;
                }
                ok = ok && round_to_net(0.75, 0.5, U) == 0.5;  // ties go down
                net.add(ok, 0, "U " + fmt(U) + " eps " + fmt(e));
            }

        for (const char* s : {"0", "1", "123456789012345678901234567890", "1e24"}) {
            const IterCount v = parse_count(s);
            counts.add(parse_count(count_to_string(v)) == v, 0, s);
        }
        for (const Tally* t : {&relaxed, &strict, &errors, &net, &counts}) rep.checks.push_back(t->result());
    });
}

} // namespace camdp
