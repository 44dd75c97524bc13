#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "camdp/types.hpp"

namespace camdp {

/// Entries below this are structural zeros when reading the support graph.
inline constexpr double kSupportEps = 1e-15;

/// P_pi(s, s') = sum_a pi(a|s) P(s'|s,a).
template <typename Scalar>
Mat<Scalar> transition_matrix(const StochasticPolicy<Scalar>& pi, const CmdpInstance<Scalar>& m) {
    validate(pi, m.n_states, m.n_actions, Scalar(1e-9));
    const Index S = m.n_states, A = m.n_actions;
    Mat<Scalar> P = Mat<Scalar>::Zero(S, S);
    for (Index s = 0; s < S; ++s)
        for (Index a = 0; a < A; ++a)
            if (pi.probs(s, a) != Scalar(0)) P.row(s) += pi.probs(s, a) * m.kernel.row(m.row(s, a));
    return P;
}

/// Same, for a deterministic policy on a raw (S*A) x S kernel.
template <typename Scalar>
Mat<Scalar> transition_matrix(const DeterministicPolicy& d, const Mat<Scalar>& kernel, Index A) {
    const Index S = static_cast<Index>(d.size());
    Mat<Scalar> P(S, S);
    for (Index s = 0; s < S; ++s) P.row(s) = kernel.row(s * A + d[s]);
    return P;
}

/// r_pi(s) = sum_a pi(a|s) table(s,a).
template <typename Scalar>
Vec<Scalar> policy_reward(const StochasticPolicy<Scalar>& pi, const Mat<Scalar>& table_sa) {
    if (table_sa.rows() != pi.probs.rows() || table_sa.cols() != pi.probs.cols())
        throw ArgumentError("reward table shape does not match policy");
    return pi.probs.cwiseProduct(table_sa).rowwise().sum();
}

template <typename Scalar>
Vec<Scalar> policy_reward(const DeterministicPolicy& d, const Mat<Scalar>& table_sa) {
    Vec<Scalar> r(static_cast<Index>(d.size()));
    for (std::size_t s = 0; s < d.size(); ++s) r(static_cast<Index>(s)) = table_sa(static_cast<Index>(s), d[s]);
    return r;
}

/// Strongly connected components of the support graph of P, plus which are closed.
struct ChainClasses {
    std::vector<int> component;             // component id per state
    std::vector<std::vector<int>> members;  // states per component
    std::vector<bool> closed;               // recurrent (no exit edge)

    bool recurrent(int s) const { return closed[component[s]]; }
};

template <typename Scalar>
ChainClasses chain_classes(const Mat<Scalar>& P) {
    const int n = static_cast<int>(P.rows());
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (P(i, j) >= Scalar(kSupportEps)) adj[i].push_back(j);

    // Iterative Tarjan.
    std::vector<int> index(n, -1), low(n, 0), stack;
    std::vector<bool> on_stack(n, false);
    ChainClasses out;
    out.component.assign(n, -1);
    int counter = 0;
    std::vector<std::pair<int, std::size_t>> work;
    for (int root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        work.push_back({root, 0});
        while (!work.empty()) {
            auto& [v, it] = work.back();
            if (it == 0 && index[v] < 0) {
                index[v] = low[v] = counter++;
                stack.push_back(v);
                on_stack[v] = true;
            }
            if (it < adj[v].size()) {
                const int w = adj[v][it++];
                if (index[w] < 0) {
                    work.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                std::vector<int> comp;
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    out.component[w] = static_cast<int>(out.members.size());
                    comp.push_back(w);
                } while (w != v);
                std::sort(comp.begin(), comp.end());
                out.members.push_back(std::move(comp));
            }
            const int finished = v;
            work.pop_back();
            if (!work.empty()) {
                const int parent = work.back().first;
                low[parent] = std::min(low[parent], low[finished]);
            }
        }
    }
    out.closed.assign(out.members.size(), true);
    for (int i = 0; i < n; ++i)
        for (int j : adj[i])
            if (out.component[j] != out.component[i]) out.closed[out.component[i]] = false;
    return out;
}

/// Cesaro limit of the stochastic matrix P.
///
/// Each closed class gets its stationary distribution from a bordered linear
/// system; transient rows are absorption probabilities times those distributions.
template <typename Scalar>
Mat<Scalar> stationary_matrix(const Mat<Scalar>& P, const std::string& label = "chain") {
    using std::abs;
    const Index n = P.rows();
    const ChainClasses cls = chain_classes(P);
    Mat<Scalar> Pinf = Mat<Scalar>::Zero(n, n);
    const Scalar tol = Scalar(1e-9);

    std::vector<Vec<Scalar>> dists(cls.members.size());
    for (std::size_t c = 0; c < cls.members.size(); ++c) {
        if (!cls.closed[c]) continue;
        const auto& idx = cls.members[c];
        const Index k = static_cast<Index>(idx.size());
        Mat<Scalar> M(k, k);
        for (Index i = 0; i < k; ++i)
            for (Index j = 0; j < k; ++j) M(j, i) = P(idx[i], idx[j]) - (i == j ? Scalar(1) : Scalar(0));
        M.row(k - 1).setOnes();
        Vec<Scalar> rhs = Vec<Scalar>::Zero(k);
        rhs(k - 1) = Scalar(1);
        Eigen::FullPivLU<Mat<Scalar>> lu(M);
        if (!lu.isInvertible())
            throw NumericalError("singular stationary system for recurrent class of " + label);
        Vec<Scalar> pi = lu.solve(rhs);
        if ((M * pi - rhs).cwiseAbs().maxCoeff() > tol)
            throw NumericalError("stationary solve residual too large for " + label);
        dists[c] = pi;
        for (Index i = 0; i < k; ++i)
            for (Index j = 0; j < k; ++j) Pinf(idx[i], idx[j]) = pi(j);
    }

    std::vector<int> transient;
    for (Index s = 0; s < n; ++s)
        if (!cls.recurrent(static_cast<int>(s))) transient.push_back(static_cast<int>(s));
    if (transient.empty()) return Pinf;

    const Index t = static_cast<Index>(transient.size());
    Mat<Scalar> N = Mat<Scalar>::Identity(t, t);
    for (Index i = 0; i < t; ++i)
        for (Index j = 0; j < t; ++j) N(i, j) -= P(transient[i], transient[j]);
    Eigen::PartialPivLU<Mat<Scalar>> lu(N);
    for (std::size_t c = 0; c < cls.members.size(); ++c) {
        if (!cls.closed[c]) continue;
        Vec<Scalar> b = Vec<Scalar>::Zero(t);
        for (Index i = 0; i < t; ++i)
            for (int j : cls.members[c]) b(i) += P(transient[i], j);
        const Vec<Scalar> absorb = lu.solve(b);
        if ((N * absorb - b).cwiseAbs().maxCoeff() > tol)
            throw NumericalError("absorption solve failed for " + label);
        const auto& idx = cls.members[c];
        for (Index i = 0; i < t; ++i)
            for (std::size_t j = 0; j < idx.size(); ++j)
                Pinf(transient[i], idx[j]) = absorb(i) * dists[c](static_cast<Index>(j));
    }
    return Pinf;
}

template <typename Scalar>
Mat<Scalar> stationary_matrix(const StochasticPolicy<Scalar>& pi, const CmdpInstance<Scalar>& m) {
    return stationary_matrix<Scalar>(transition_matrix(pi, m), "the given policy");
}

/// Gain and deviation-normalized bias of a fixed chain and reward vector.
template <typename Scalar>
GainBias<Scalar> gain_bias(const Mat<Scalar>& P, const Vec<Scalar>& r, const std::string& label = "chain") {
    if (!r.allFinite()) throw ArgumentError("reward vector is not finite");
    const Index n = P.rows();
    const Mat<Scalar> Pinf = stationary_matrix<Scalar>(P, label);
    GainBias<Scalar> gb;
    gb.gain = Pinf * r;
    const Mat<Scalar> Z = Mat<Scalar>::Identity(n, n) - P + Pinf;
    Eigen::PartialPivLU<Mat<Scalar>> lu(Z);
    const Vec<Scalar> rhs = r - gb.gain;
    gb.bias = lu.solve(rhs);
    if ((Z * gb.bias - rhs).cwiseAbs().maxCoeff() > Scalar(1e-9))
        throw NumericalError("deviation-matrix solve failed for " + label);
    return gb;
}

template <typename Scalar>
GainBias<Scalar> gain_bias(const StochasticPolicy<Scalar>& pi, const CmdpInstance<Scalar>& m,
                           const Mat<Scalar>& table_sa) {
    return gain_bias<Scalar>(transition_matrix(pi, m), policy_reward(pi, table_sa), "the given policy");
}

template <typename Scalar>
GainBias<Scalar> gain_bias(const StochasticPolicy<Scalar>& pi, const CmdpInstance<Scalar>& m, RewardKind k) {
    return gain_bias(pi, m, table(m, k));
}

/// Gain/bias for a custom per-state reward vector r_pi.
template <typename Scalar>
GainBias<Scalar> gain_bias(const StochasticPolicy<Scalar>& pi, const CmdpInstance<Scalar>& m,
                           const Vec<Scalar>& r_pi) {
    if (r_pi.size() != m.n_states) throw ArgumentError("custom reward vector must have S entries");
    return gain_bias<Scalar>(transition_matrix(pi, m), r_pi, "the given policy");
}

/// V = (I - gamma P)^{-1} r.
template <typename Scalar>
Vec<Scalar> discounted_value(const Mat<Scalar>& P, const Vec<Scalar>& r, Scalar gamma) {
    if (!(gamma > Scalar(0) && gamma < Scalar(1))) throw ArgumentError("discount must lie in (0,1)");
    const Index n = P.rows();
    const Mat<Scalar> M = Mat<Scalar>::Identity(n, n) - gamma * P;
    const Vec<Scalar> v = M.partialPivLu().solve(r);
    if ((M * v - r).cwiseAbs().maxCoeff() > Scalar(1e-10) * std::max(Scalar(1), r.cwiseAbs().maxCoeff()))
        throw NumericalError("discounted value solve failed");
    return v;
}

template <typename Scalar>
Vec<Scalar> discounted_value(const StochasticPolicy<Scalar>& pi, const CmdpInstance<Scalar>& m,
                             const Mat<Scalar>& table_sa, Scalar gamma) {
    return discounted_value<Scalar>(transition_matrix(pi, m), policy_reward(pi, table_sa), gamma);
}

template <typename Derived>
typename Derived::Scalar span(const Eigen::MatrixBase<Derived>& v) {
    if (v.size() == 0) throw ArgumentError("span of an empty vector");
    return v.maxCoeff() - v.minCoeff();
}

/// sum_i w_i <start, rho^{pi_i}>.
template <typename Scalar>
Scalar mixture_value(const MixturePolicy<Scalar>& mix, const CmdpInstance<Scalar>& m,
                     const Mat<Scalar>& table_sa, const Vec<Scalar>& at) {
    Scalar v(0);
    for (const auto& [w, pi] : mix.members) {
        if (w == Scalar(0)) continue;
        v += w * at.dot(gain_bias(pi, m, table_sa).gain);
    }
    return v;
}

template <typename Scalar>
Scalar mixture_value(const MixturePolicy<Scalar>& mix, const CmdpInstance<Scalar>& m, RewardKind k) {
    return mixture_value(mix, m, table(m, k), m.start);
}

/// Gain at the start distribution of a deterministic policy on a raw kernel.
template <typename Scalar>
Scalar start_gain(const DeterministicPolicy& d, const Mat<Scalar>& kernel, const Mat<Scalar>& table_sa,
                  const Vec<Scalar>& start) {
    const Index A = table_sa.cols();
    const Mat<Scalar> Pinf = stationary_matrix<Scalar>(transition_matrix<Scalar>(d, kernel, A));
    return start.dot(Pinf * policy_reward<Scalar>(d, table_sa));
}

/// Calls f(policy) for every deterministic policy in lexicographic order.
/// Throws ScopeError when A^S exceeds cap.
inline void for_each_deterministic(Index S, Index A, double cap,
                                   const std::function<void(const DeterministicPolicy&)>& f) {
    if (std::pow(static_cast<double>(A), static_cast<double>(S)) > cap)
        throw ScopeError("policy enumeration over " + std::to_string(A) + "^" + std::to_string(S) +
                         " policies exceeds the cap; supply the structural parameters manually");
    DeterministicPolicy d(static_cast<std::size_t>(S), 0);
    while (true) {
        f(d);
        Index s = S - 1;
        while (s >= 0 && d[s] == A - 1) d[s--] = 0;
        if (s < 0) return;
        ++d[s];
    }
}

} // namespace camdp
