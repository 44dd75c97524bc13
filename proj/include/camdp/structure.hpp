#pragma once

#include <deque>
#include <limits>
#include <vector>

#include "camdp/oracle.hpp"

namespace camdp {

/// Expected steps to reach the recurrent classes of P, per state (0 on recurrent states).
template <typename Scalar>
Vec<Scalar> hitting_time_to_recurrent(const Mat<Scalar>& P) {
    const Index n = P.rows();
    const ChainClasses cls = chain_classes(P);
    std::vector<Index> tr;
    for (Index s = 0; s < n; ++s)
        if (!cls.recurrent(static_cast<int>(s))) tr.push_back(s);
    Vec<Scalar> t = Vec<Scalar>::Zero(n);
    if (tr.empty()) return t;
    const Index k = static_cast<Index>(tr.size());
    Mat<Scalar> M = Mat<Scalar>::Identity(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j) M(i, j) -= P(tr[i], tr[j]);
    const Vec<Scalar> sol = M.partialPivLu().solve(Vec<Scalar>::Ones(k));
    for (Index i = 0; i < k; ++i) t(tr[i]) = sol(i);
    return t;
}

/// Minimal expected hitting time of `target` from every state, by policy
/// iteration on the stochastic shortest path problem. Infinity where unreachable.
template <typename Scalar>
Vec<Scalar> min_hitting_time(const CmdpInstance<Scalar>& m, Index target) {
    const Index S = m.n_states, A = m.n_actions;
    const Scalar inf = std::numeric_limits<Scalar>::infinity();
    // Backward BFS over the union support graph gives a proper starting policy.
    std::vector<Index> dist(S, -1);
    std::vector<int> act(S, 0);
    std::deque<Index> q{target};
    dist[target] = 0;
    while (!q.empty()) {
        const Index v = q.front();
        q.pop_front();
        for (Index s = 0; s < S; ++s) {
            if (dist[s] >= 0) continue;
            for (Index a = 0; a < A; ++a)
                if (m.kernel(m.row(s, a), v) >= Scalar(kSupportEps)) {
                    dist[s] = dist[v] + 1;
                    act[s] = static_cast<int>(a);
                    q.push_back(s);
                    break;
                }
        }
    }
    std::vector<Index> live;
    std::vector<Index> pos(S, -1);
    for (Index s = 0; s < S; ++s)
        if (s != target && dist[s] >= 0) {
            pos[s] = static_cast<Index>(live.size());
            live.push_back(s);
        }
    Vec<Scalar> T = Vec<Scalar>::Constant(S, inf);
    T(target) = Scalar(0);
    const Index k = static_cast<Index>(live.size());
    if (k == 0) return T;

    for (int iter = 0; iter < 1000; ++iter) {
        Mat<Scalar> M = Mat<Scalar>::Identity(k, k);
        for (Index i = 0; i < k; ++i) {
            const Index s = live[i];
            for (Index j = 0; j < k; ++j) M(i, j) -= m.kernel(m.row(s, act[s]), live[j]);
        }
        const Vec<Scalar> sol = M.partialPivLu().solve(Vec<Scalar>::Ones(k));
        for (Index i = 0; i < k; ++i) T(live[i]) = sol(i);
        bool changed = false;
        for (Index i = 0; i < k; ++i) {
            const Index s = live[i];
            Scalar best = T(s);
            int best_a = act[s];
            for (Index a = 0; a < A; ++a) {
                Scalar v = Scalar(1);
                bool escapes = false;
                for (Index j = 0; j < S; ++j) {
                    const Scalar p = m.kernel(m.row(s, a), j);
                    if (p < Scalar(kSupportEps)) continue;
                    if (dist[j] < 0) {
                        escapes = true;
                        break;
                    }
                    v += p * T(j);
                }
                if (!escapes && v < best - Scalar(1e-10) * std::max(Scalar(1), best)) {
                    best = v;
                    best_a = static_cast<int>(a);
                }
            }
            if (best_a != act[s]) {
                act[s] = best_a;
                changed = true;
            }
        }
        if (!changed) return T;
    }
    throw NumericalError("hitting-time policy iteration did not converge");
}

/// Structural constants; H and B enumerate deterministic policies.
///
/// H is the largest bias span over deterministic policies for both the reward
/// and the constraint table.
template <typename Scalar>
StructuralParams<Scalar> structural_params(const CmdpInstance<Scalar>& m, double cap = 1e6) {
    StructuralParams<Scalar> p;
    for_each_deterministic(m.n_states, m.n_actions, cap, [&](const DeterministicPolicy& d) {
        const Mat<Scalar> P = transition_matrix<Scalar>(d, m.kernel, m.n_actions);
        const auto hr = gain_bias<Scalar>(P, policy_reward<Scalar>(d, m.reward));
        const auto hc = gain_bias<Scalar>(P, policy_reward<Scalar>(d, m.constraint));
        p.H = std::max({p.H, span(hr.bias), span(hc.bias)});
        p.B = std::max(p.B, hitting_time_to_recurrent<Scalar>(P).maxCoeff());
    });
    for (Index j = 0; j < m.n_states; ++j) p.D = std::max(p.D, min_hitting_time(m, j).maxCoeff());
    p.zeta = slater_constant(m);
    return p;
}

} // namespace camdp
