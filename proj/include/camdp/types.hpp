#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "camdp/errors.hpp"

namespace camdp {

using Index = Eigen::Index;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Mat<double>;
using VectorXd = Vec<double>;

/// Tabular constrained average-reward MDP.
///
/// The kernel is stored as an (S*A) x S matrix; row s*A + a is P(.|s,a).
/// Reward and constraint are S x A.
template <typename Scalar>
struct CmdpInstance {
    Index n_states = 0;
    Index n_actions = 0;
    Mat<Scalar> kernel;
    Mat<Scalar> reward;
    Mat<Scalar> constraint;
    Scalar threshold = Scalar(0);
    Vec<Scalar> start;

    Index row(Index s, Index a) const { return s * n_actions + a; }

    static CmdpInstance zeros(Index S, Index A) {
        CmdpInstance m;
        m.n_states = S;
        m.n_actions = A;
        m.kernel = Mat<Scalar>::Zero(S * A, S);
        m.reward = Mat<Scalar>::Zero(S, A);
        m.constraint = Mat<Scalar>::Zero(S, A);
        m.start = Vec<Scalar>::Zero(S);
        return m;
    }
};

using Cmdp = CmdpInstance<double>;

/// Throws ArgumentError naming the first violated invariant.
template <typename Scalar>
void validate(const CmdpInstance<Scalar>& m, Scalar tol = Scalar(1e-12)) {
    using std::abs;
    const Index S = m.n_states, A = m.n_actions;
    if (S <= 0 || A <= 0) throw ArgumentError("instance needs at least one state and one action");
    if (m.kernel.rows() != S * A || m.kernel.cols() != S)
        throw ArgumentError("kernel must have shape (S*A) x S");
    if (m.reward.rows() != S || m.reward.cols() != A) throw ArgumentError("reward must be S x A");
    if (m.constraint.rows() != S || m.constraint.cols() != A)
        throw ArgumentError("constraint must be S x A");
    if (m.start.size() != S) throw ArgumentError("start must have S entries");
    for (Index i = 0; i < S * A; ++i) {
        for (Index j = 0; j < S; ++j) {
            const Scalar p = m.kernel(i, j);
            if (!(p >= Scalar(0)))
                throw ArgumentError("negative or non-finite kernel entry at state " +
                                    std::to_string(i / A) + " action " + std::to_string(i % A));
        }
        if (abs(m.kernel.row(i).sum() - Scalar(1)) > tol)
            throw ArgumentError("kernel row for state " + std::to_string(i / A) + " action " +
                                std::to_string(i % A) + " does not sum to 1");
    }
    auto in_unit = [](Scalar v) { return v >= Scalar(0) && v <= Scalar(1); };
    for (Index s = 0; s < S; ++s)
        for (Index a = 0; a < A; ++a) {
            if (!in_unit(m.reward(s, a))) throw ArgumentError("reward outside [0,1]");
            if (!in_unit(m.constraint(s, a))) throw ArgumentError("constraint outside [0,1]");
        }
    if (!in_unit(m.threshold)) throw ArgumentError("threshold outside [0,1]");
    for (Index s = 0; s < S; ++s)
        if (!(m.start(s) >= Scalar(0))) throw ArgumentError("negative start probability");
    if (abs(m.start.sum() - Scalar(1)) > tol) throw ArgumentError("start does not sum to 1");
}

/// One action per state.
using DeterministicPolicy = std::vector<int>;

/// Row s is the action distribution at state s (S x A).
template <typename Scalar>
struct StochasticPolicy {
    Mat<Scalar> probs;

    StochasticPolicy() = default;
    explicit StochasticPolicy(Mat<Scalar> p) : probs(std::move(p)) {}

    Index n_states() const { return probs.rows(); }
    Index n_actions() const { return probs.cols(); }

    static StochasticPolicy uniform(Index S, Index A) {
        return StochasticPolicy(Mat<Scalar>::Constant(S, A, Scalar(1) / Scalar(A)));
    }

    static StochasticPolicy from_deterministic(const DeterministicPolicy& d, Index A) {
        Mat<Scalar> p = Mat<Scalar>::Zero(static_cast<Index>(d.size()), A);
        for (std::size_t s = 0; s < d.size(); ++s) {
            if (d[s] < 0 || d[s] >= A)
                throw ArgumentError("deterministic policy action out of range at state " +
                                    std::to_string(s));
            p(static_cast<Index>(s), d[s]) = Scalar(1);
        }
        return StochasticPolicy(std::move(p));
    }
};

using Policy = StochasticPolicy<double>;

template <typename Scalar>
void validate(const StochasticPolicy<Scalar>& pi, Index S, Index A, Scalar tol = Scalar(1e-12)) {
    using std::abs;
    if (pi.probs.rows() != S || pi.probs.cols() != A)
        throw ArgumentError("policy shape does not match instance");
    for (Index s = 0; s < S; ++s) {
        for (Index a = 0; a < A; ++a)
            if (!(pi.probs(s, a) >= Scalar(0))) throw ArgumentError("negative policy probability");
        if (abs(pi.probs.row(s).sum() - Scalar(1)) > tol)
            throw ArgumentError("policy row " + std::to_string(s) + " does not sum to 1");
    }
}

/// Weighted list of member policies; weights sum to one.
template <typename Scalar>
struct MixturePolicy {
    std::vector<std::pair<Scalar, StochasticPolicy<Scalar>>> members;

    Scalar total_weight() const {
        Scalar w(0);
        for (const auto& m : members) w += m.first;
        return w;
    }
};

template <typename Scalar>
struct GainBias {
    Vec<Scalar> gain;
    Vec<Scalar> bias;
};

template <typename Scalar>
struct StructuralParams {
    Scalar H = Scalar(0);
    Scalar B = Scalar(0);
    Scalar D = Scalar(0);
    Scalar zeta = Scalar(0);
};

/// Which per-(s,a) table a quantity is evaluated on.
enum class RewardKind { reward, constraint };

template <typename Scalar>
const Mat<Scalar>& table(const CmdpInstance<Scalar>& m, RewardKind k) {
    return k == RewardKind::reward ? m.reward : m.constraint;
}

} // namespace camdp
