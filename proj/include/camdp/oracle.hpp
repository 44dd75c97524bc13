#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "camdp/chain.hpp"
#include "camdp/simplex.hpp"

namespace camdp {

/// Multichain uses the two-block average-reward LP; unichain is the single
/// flow block plus normalization and is only exact when every policy is unichain.
enum class LpForm { multichain, unichain };

/// Extra linear row on the long-run frequencies: sum coeff .* mu (sense) rhs.
template <typename Scalar>
struct OccupancyCut {
    Mat<Scalar> coeff;
    RowSense sense = RowSense::le;
    Scalar rhs = Scalar(0);
};

template <typename Scalar>
struct LpOptions {
    LpForm form = LpForm::multichain;
    bool with_constraint = true;
    std::optional<Scalar> threshold;       // overrides the instance threshold
    std::optional<Mat<Scalar>> objective;  // overrides the reward table
    std::vector<OccupancyCut<Scalar>> cuts;
};

template <typename Scalar>
struct OccupancySolution {
    LpStatus status = LpStatus::infeasible;
    Mat<Scalar> mu;         // S x A long-run frequencies
    Mat<Scalar> transient;  // S x A auxiliary flow (multichain form only)
    Scalar objective = Scalar(0);
    Scalar constraint_value = Scalar(0);
    Scalar dual_lambda = Scalar(0);
    Scalar dual_objective = Scalar(0);
};

template <typename Scalar>
OccupancySolution<Scalar> solve_occupancy_lp(const CmdpInstance<Scalar>& m, const LpOptions<Scalar>& opt = {}) {
    const Index S = m.n_states, A = m.n_actions, SA = S * A;
    const bool multi = opt.form == LpForm::multichain;
    const Mat<Scalar>& obj = opt.objective ? *opt.objective : m.reward;
    if (obj.rows() != S || obj.cols() != A) throw ArgumentError("objective table must be S x A");

    const Index n = multi ? 2 * SA : SA;
    const Index flow_rows = multi ? 2 * S : S + 1;
    const Index con_row = opt.with_constraint ? flow_rows : -1;
    const Index m_rows = flow_rows + (opt.with_constraint ? 1 : 0) + static_cast<Index>(opt.cuts.size());

    LinearProgram<Scalar> lp;
    lp.A = Mat<Scalar>::Zero(m_rows, n);
    lp.b = Vec<Scalar>::Zero(m_rows);
    lp.sense.assign(m_rows, RowSense::eq);
    lp.c = Vec<Scalar>::Zero(n);

    for (Index s = 0; s < S; ++s)
        for (Index a = 0; a < A; ++a) {
            const Index col = m.row(s, a);
            lp.c(col) = obj(s, a);
            lp.A(s, col) += Scalar(1);
            for (Index j = 0; j < S; ++j) lp.A(j, col) -= m.kernel(col, j);
            if (multi) {
                lp.A(S + s, col) += Scalar(1);
                lp.A(S + s, SA + col) += Scalar(1);
                for (Index j = 0; j < S; ++j) lp.A(S + j, SA + col) -= m.kernel(col, j);
            } else {
                lp.A(S, col) = Scalar(1);
            }
        }
    if (multi)
        for (Index j = 0; j < S; ++j) lp.b(S + j) = m.start(j);
    else
        lp.b(S) = Scalar(1);

    if (opt.with_constraint) {
        for (Index s = 0; s < S; ++s)
            for (Index a = 0; a < A; ++a) lp.A(con_row, m.row(s, a)) = m.constraint(s, a);
        lp.b(con_row) = opt.threshold ? *opt.threshold : m.threshold;
        lp.sense[con_row] = RowSense::ge;
    }
    Index r = flow_rows + (opt.with_constraint ? 1 : 0);
    for (const auto& cut : opt.cuts) {
        if (cut.coeff.rows() != S || cut.coeff.cols() != A) throw ArgumentError("cut must be S x A");
        for (Index s = 0; s < S; ++s)
            for (Index a = 0; a < A; ++a) lp.A(r, m.row(s, a)) = cut.coeff(s, a);
        lp.b(r) = cut.rhs;
        lp.sense[r] = cut.sense;
        ++r;
    }

    const LpResult<Scalar> res = solve_lp(lp);
    OccupancySolution<Scalar> out;
    out.status = res.status;
    if (res.status == LpStatus::unbounded)
        throw NumericalError("occupancy LP reported unbounded; the normalization rows are inconsistent");
    if (res.status != LpStatus::optimal) return out;

    out.mu = Mat<Scalar>(S, A);
    out.transient = Mat<Scalar>::Zero(S, A);
    for (Index s = 0; s < S; ++s)
        for (Index a = 0; a < A; ++a) {
            out.mu(s, a) = res.x(m.row(s, a));
            if (multi) out.transient(s, a) = res.x(SA + m.row(s, a));
        }
    out.objective = res.objective;
    out.dual_objective = res.dual_objective;
    out.constraint_value = out.mu.cwiseProduct(m.constraint).sum();
    out.dual_lambda = opt.with_constraint ? -res.duals(con_row) : Scalar(0);
    return out;
}

/// Maximizes long-run reward subject to the constraint at the instance
/// threshold or the given override.
template <typename Scalar>
OccupancySolution<Scalar> solve_camdp_lp(const CmdpInstance<Scalar>& m,
                                         std::optional<Scalar> threshold_override = std::nullopt,
                                         LpForm form = LpForm::multichain) {
    LpOptions<Scalar> opt;
    opt.form = form;
    opt.threshold = threshold_override;
    return solve_occupancy_lp(m, opt);
}

/// Best attainable long-run constraint value at the start, minus the threshold.
template <typename Scalar>
Scalar slater_constant(const CmdpInstance<Scalar>& m, LpForm form = LpForm::multichain) {
    LpOptions<Scalar> opt;
    opt.form = form;
    opt.with_constraint = false;
    opt.objective = m.constraint;
    const auto sol = solve_occupancy_lp(m, opt);
    if (sol.status != LpStatus::optimal) throw NumericalError("constraint-maximization LP failed");
    return sol.objective - m.threshold;
}

/// pi(a|s) proportional to mu(s,.); falls back to the auxiliary flow, then uniform.
template <typename Scalar>
StochasticPolicy<Scalar> policy_from_occupancy(const Mat<Scalar>& mu, const Mat<Scalar>* aux = nullptr) {
    const Index S = mu.rows(), A = mu.cols();
    if ((mu.array() < Scalar(-1e-12)).any()) throw ArgumentError("occupancy has negative entries");
    if (aux && (aux->array() < Scalar(-1e-12)).any()) throw ArgumentError("auxiliary flow has negative entries");
    Mat<Scalar> p(S, A);
    for (Index s = 0; s < S; ++s) {
        const Scalar tot = mu.row(s).cwiseMax(Scalar(0)).sum();
        const Scalar tot_aux = aux ? aux->row(s).cwiseMax(Scalar(0)).sum() : Scalar(0);
        if (tot > Scalar(1e-12))
            p.row(s) = mu.row(s).cwiseMax(Scalar(0)) / tot;
        else if (tot_aux > Scalar(1e-12))
            p.row(s) = aux->row(s).cwiseMax(Scalar(0)) / tot_aux;
        else
            p.row(s).setConstant(Scalar(1) / Scalar(A));
    }
    return StochasticPolicy<Scalar>(std::move(p));
}

template <typename Scalar>
StochasticPolicy<Scalar> policy_from_occupancy(const OccupancySolution<Scalar>& sol) {
    return policy_from_occupancy<Scalar>(sol.mu, &sol.transient);
}

template <typename Scalar>
struct EnumerationResult {
    DeterministicPolicy policy;
    Scalar gain = Scalar(0);
    std::size_t evaluated = 0;
};

/// Exhaustive search over deterministic policies for the best start gain;
/// ties keep the lexicographically smallest policy.
template <typename Scalar>
EnumerationResult<Scalar> enumerate_policies(const CmdpInstance<Scalar>& m, const Mat<Scalar>& table_sa,
                                             double cap = 1e6) {
    EnumerationResult<Scalar> best;
    best.gain = -std::numeric_limits<Scalar>::infinity();
    for_each_deterministic(m.n_states, m.n_actions, cap, [&](const DeterministicPolicy& d) {
        const Scalar g = start_gain<Scalar>(d, m.kernel, table_sa, m.start);
        ++best.evaluated;
        if (g > best.gain + Scalar(1e-13)) {
            best.gain = g;
            best.policy = d;
        }
    });
    return best;
}

template <typename Scalar>
EnumerationResult<Scalar> enumerate_policies(const CmdpInstance<Scalar>& m, RewardKind k, double cap = 1e6) {
    return enumerate_policies(m, table(m, k), cap);
}

} // namespace camdp
