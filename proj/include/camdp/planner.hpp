#pragma once

#include <limits>
#include <vector>

#include "camdp/chain.hpp"

namespace camdp {

template <typename Scalar>
struct PlannerOptions {
    /// After the value-iteration stop, run exact policy iteration from the
    /// greedy policy so the result is the exact discounted optimum.
    bool refine = true;
    int max_value_iterations = 10'000'000;
};

template <typename Scalar>
struct DiscountedSolution {
    DeterministicPolicy policy;
    Vec<Scalar> value;  // value of `policy` after refinement, else last VI iterate
    long value_iterations = 0;
    int refine_steps = 0;
};

namespace detail {

template <typename Scalar>
DeterministicPolicy greedy(const Mat<Scalar>& kernel, const Mat<Scalar>& reward, Scalar gamma,
                           const Vec<Scalar>& V, const DeterministicPolicy* incumbent = nullptr) {
    const Index S = reward.rows(), A = reward.cols();
    const Vec<Scalar> PV = kernel * V;
    DeterministicPolicy d(static_cast<std::size_t>(S), 0);
    for (Index s = 0; s < S; ++s) {
        Scalar best = -std::numeric_limits<Scalar>::infinity();
        for (Index a = 0; a < A; ++a) {
            const Scalar q = reward(s, a) + gamma * PV(s * A + a);
            if (q > best) {
                best = q;
                d[s] = static_cast<int>(a);
            }
        }
        if (incumbent) {
            // Keep the incumbent unless another action is clearly better; this
            // makes policy iteration terminate under rounding noise.
            const int cur = (*incumbent)[s];
            const Scalar slack = Scalar(1e-12) * std::max(Scalar(1), std::abs(best));
            if (reward(s, cur) + gamma * PV(s * A + cur) >= best - slack) d[s] = cur;
        }
    }
    return d;
}

} // namespace detail

/// Discounted planning on an (S*A) x S kernel and S x A reward.
///
/// Value iteration from V = 0 stops when span(TV - V) <= tol (1 - gamma) / gamma;
/// the greedy policy breaks ties toward the lowest action index.
template <typename Scalar>
DiscountedSolution<Scalar> solve_discounted_detailed(const Mat<Scalar>& kernel, const Mat<Scalar>& reward,
                                                     Scalar gamma, Scalar tol,
                                                     const PlannerOptions<Scalar>& opt = {}) {
    const Index S = reward.rows(), A = reward.cols();
    if (!(gamma > Scalar(0) && gamma < Scalar(1))) throw ArgumentError("discount must lie in (0,1)");
    if (!(tol > Scalar(0))) throw ArgumentError("planner tolerance must be positive");
    if (!reward.allFinite()) throw ArgumentError("planner reward is not finite");
    if (kernel.rows() != S * A || kernel.cols() != S) throw ArgumentError("kernel shape mismatch in planner");

    DiscountedSolution<Scalar> out;
    Vec<Scalar> V = Vec<Scalar>::Zero(S), TV(S);
    const Scalar stop = tol * (Scalar(1) - gamma) / gamma;
    for (long it = 0;; ++it) {
        if (it >= opt.max_value_iterations) throw NumericalError("value iteration did not reach tolerance");
        const Vec<Scalar> PV = kernel * V;
        for (Index s = 0; s < S; ++s) {
            Scalar best = -std::numeric_limits<Scalar>::infinity();
            for (Index a = 0; a < A; ++a) best = std::max(best, reward(s, a) + gamma * PV(s * A + a));
            TV(s) = best;
        }
        const Scalar sp = span(TV - V);
        V.swap(TV);
        out.value_iterations = it + 1;
        if (sp <= stop) break;
    }
    out.policy = detail::greedy<Scalar>(kernel, reward, gamma, V);
    out.value = V;
    if (!opt.refine) return out;

    for (int k = 0; k < 10000; ++k) {
        const Mat<Scalar> P = transition_matrix<Scalar>(out.policy, kernel, A);
        out.value = discounted_value<Scalar>(P, policy_reward<Scalar>(out.policy, reward), gamma);
        const DeterministicPolicy next = detail::greedy<Scalar>(kernel, reward, gamma, out.value, &out.policy);
        if (next == out.policy) return out;
        out.policy = next;
        ++out.refine_steps;
    }
    throw NumericalError("policy iteration refinement did not converge");
}

template <typename Scalar>
DeterministicPolicy solve_discounted(const Mat<Scalar>& kernel, const Mat<Scalar>& reward, Scalar gamma, Scalar tol,
                                     const PlannerOptions<Scalar>& opt = {}) {
    return solve_discounted_detailed(kernel, reward, gamma, tol, opt).policy;
}

/// Combined reward (r_p + lambda c) / (1 + lambda).
template <typename Scalar>
Mat<Scalar> combined_reward(const Mat<Scalar>& r_p, const Mat<Scalar>& c, Scalar lambda) {
    if (!(lambda >= Scalar(0))) throw ArgumentError("dual variable must be non-negative");
    return (r_p + lambda * c) / (Scalar(1) + lambda);
}

/// Start gains of every deterministic policy on a fixed model and two tables.
template <typename Scalar>
struct PolicyGainTable {
    std::vector<DeterministicPolicy> policies;
    std::vector<Scalar> gain_r;
    std::vector<Scalar> gain_c;

    /// argmax gain_r + lambda gain_c; ties keep the earliest (lexicographic) policy.
    std::size_t best(Scalar lambda) const {
        std::size_t arg = 0;
        Scalar best = gain_r[0] + lambda * gain_c[0];
        for (std::size_t i = 1; i < policies.size(); ++i) {
            const Scalar v = gain_r[i] + lambda * gain_c[i];
            if (v > best) {
                best = v;
                arg = i;
            }
        }
        return arg;
    }
};

template <typename Scalar>
PolicyGainTable<Scalar> policy_gain_table(const Mat<Scalar>& kernel, const Mat<Scalar>& r, const Mat<Scalar>& c,
                                          const Vec<Scalar>& start, double cap = 1e6) {
    PolicyGainTable<Scalar> t;
    const Index A = r.cols();
    for_each_deterministic(r.rows(), A, cap, [&](const DeterministicPolicy& d) {
        const Mat<Scalar> Pinf = stationary_matrix<Scalar>(transition_matrix<Scalar>(d, kernel, A));
        const Vec<Scalar> w = Pinf.transpose() * start;
        t.policies.push_back(d);
        t.gain_r.push_back(w.dot(policy_reward<Scalar>(d, r)));
        t.gain_c.push_back(w.dot(policy_reward<Scalar>(d, c)));
    });
    return t;
}

} // namespace camdp
