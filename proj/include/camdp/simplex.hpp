#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "camdp/types.hpp"

namespace camdp {

enum class RowSense { le, eq, ge };
enum class LpStatus { optimal, infeasible, unbounded };

inline const char* to_string(LpStatus s) {
    switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    }
    return "?";
}

/// maximize c'x subject to A x (sense) b, x >= 0.
template <typename Scalar>
struct LinearProgram {
    Mat<Scalar> A;
    Vec<Scalar> b;
    std::vector<RowSense> sense;
    Vec<Scalar> c;
};

/// Row duals follow the convention of the minimization dual:
/// y_i >= 0 on <= rows, y_i <= 0 on >= rows, free on equalities.
template <typename Scalar>
struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Vec<Scalar> x;
    Vec<Scalar> duals;
    Scalar objective = Scalar(0);
    Scalar dual_objective = Scalar(0);
    int pivots = 0;
};

namespace detail {

template <typename Scalar>
class Tableau {
public:
    Mat<Scalar> T;           // (m+1) x (cols+1); last row reduced costs, last column rhs
    std::vector<Index> basis;
    int pivots = 0;

    Index rows() const { return T.rows() - 1; }
    Index cols() const { return T.cols() - 1; }

    void pivot(Index r, Index j) {
        const Scalar inv = Scalar(1) / T(r, j);
        T.row(r) *= inv;
        T(r, j) = Scalar(1);
        for (Index i = 0; i < T.rows(); ++i) {
            if (i == r) continue;
            const Scalar f = T(i, j);
            if (f != Scalar(0)) {
                T.row(i) -= f * T.row(r);
                T(i, j) = Scalar(0);
            }
        }
        basis[r] = j;
        ++pivots;
    }

    void set_costs(const Vec<Scalar>& cost) {
        const Index m = rows(), n = cols();
        T.row(m).setZero();
        for (Index j = 0; j < n; ++j) T(m, j) = cost(j);
        for (Index i = 0; i < m; ++i) {
            const Scalar cb = cost(basis[i]);
            if (cb != Scalar(0)) T.row(m) -= cb * T.row(i);
        }
    }

    // Bland's rule. Returns false when unbounded.
    bool optimize(const std::vector<bool>& allowed, Scalar tol, int max_pivots) {
        const Index m = rows(), n = cols();
        for (int it = 0; it < max_pivots; ++it) {
            Index enter = -1;
            for (Index j = 0; j < n; ++j)
                if (allowed[j] && T(m, j) > tol) {
                    enter = j;
                    break;
                }
            if (enter < 0) return true;
            Index leave = -1;
            Scalar best(0);
            for (Index i = 0; i < m; ++i) {
                if (T(i, enter) <= tol) continue;
                const Scalar ratio = T(i, n) / T(i, enter);
                if (leave < 0 || ratio < best - tol) {
                    best = ratio;
                    leave = i;
                } else if (ratio <= best + tol && basis[i] < basis[leave]) {
                    leave = i;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
        throw NumericalError("simplex pivot limit reached");
    }
};

} // namespace detail

/// Dense two-phase primal simplex with Bland's anti-cycling rule.
template <typename Scalar>
LpResult<Scalar> solve_lp(const LinearProgram<Scalar>& lp, Scalar tol = Scalar(1e-11)) {
    using std::abs;
    const Index m = lp.A.rows(), n = lp.A.cols();
    if (lp.b.size() != m || static_cast<Index>(lp.sense.size()) != m || lp.c.size() != n)
        throw ArgumentError("linear program dimensions are inconsistent");
    if (!lp.A.allFinite() || !lp.b.allFinite() || !lp.c.allFinite())
        throw ArgumentError("linear program has non-finite data");

    std::vector<Index> slack_of(m, -1);
    Index n_slack = 0;
    for (Index i = 0; i < m; ++i)
        if (lp.sense[i] != RowSense::eq) slack_of[i] = n + n_slack++;
    const Index n_std = n + n_slack;
    const Index n_all = n_std + m;

    Mat<Scalar> Astd = Mat<Scalar>::Zero(m, n_std);
    Vec<Scalar> bstd(m);
    std::vector<Scalar> flip(m, Scalar(1));
    for (Index i = 0; i < m; ++i) {
        Astd.row(i).head(n) = lp.A.row(i);
        if (slack_of[i] >= 0) Astd(i, slack_of[i]) = lp.sense[i] == RowSense::le ? Scalar(1) : Scalar(-1);
        bstd(i) = lp.b(i);
        if (bstd(i) < Scalar(0)) {
            flip[i] = Scalar(-1);
            Astd.row(i) *= Scalar(-1);
            bstd(i) = -bstd(i);
        }
    }

    detail::Tableau<Scalar> tab;
    tab.T = Mat<Scalar>::Zero(m + 1, n_all + 1);
    tab.T.block(0, 0, m, n_std) = Astd;
    tab.T.block(0, n_std, m, m) = Mat<Scalar>::Identity(m, m);
    tab.T.block(0, n_all, m, 1) = bstd;
    tab.basis.resize(m);
    for (Index i = 0; i < m; ++i) tab.basis[i] = n_std + i;

    const int max_pivots = 200000;
    const Scalar scale = std::max(Scalar(1), bstd.cwiseAbs().maxCoeff());

    // Phase one: drive artificials to zero.
    Vec<Scalar> cost1 = Vec<Scalar>::Zero(n_all);
    cost1.tail(m).setConstant(Scalar(-1));
    tab.set_costs(cost1);
    std::vector<bool> allow_all(n_all, true);
    tab.optimize(allow_all, tol, max_pivots);

    LpResult<Scalar> res;
    Scalar infeas(0);
    for (Index i = 0; i < m; ++i)
        if (tab.basis[i] >= n_std) infeas += tab.T(i, n_all);
    if (infeas > Scalar(1e-9) * scale) {
        res.status = LpStatus::infeasible;
        res.pivots = tab.pivots;
        return res;
    }

    std::vector<bool> redundant(m, false);
    for (Index i = 0; i < m; ++i) {
        if (tab.basis[i] < n_std) continue;
        Index j_best = -1;
        Scalar v_best(0);
        for (Index j = 0; j < n_std; ++j)
            if (abs(tab.T(i, j)) > v_best) {
                v_best = abs(tab.T(i, j));
                j_best = j;
            }
        if (j_best >= 0 && v_best > Scalar(1e-9))
            tab.pivot(i, j_best);
        else
            redundant[i] = true;
    }

    // Phase two on the original objective; artificials may not re-enter.
    Vec<Scalar> cost2 = Vec<Scalar>::Zero(n_all);
    cost2.head(n) = lp.c;
    tab.set_costs(cost2);
    std::vector<bool> allow(n_all, false);
    for (Index j = 0; j < n_std; ++j) allow[j] = true;
    if (!tab.optimize(allow, tol, max_pivots)) {
        res.status = LpStatus::unbounded;
        res.pivots = tab.pivots;
        return res;
    }

    Vec<Scalar> xstd = Vec<Scalar>::Zero(n_all);
    for (Index i = 0; i < m; ++i) xstd(tab.basis[i]) = std::max(Scalar(0), tab.T(i, n_all));
    res.status = LpStatus::optimal;
    res.x = xstd.head(n);
    res.objective = lp.c.dot(res.x);
    res.pivots = tab.pivots;

    // Duals from the final basis: B' y = c_B over the non-redundant rows.
    std::vector<Index> keep;
    for (Index i = 0; i < m; ++i)
        if (!redundant[i]) keep.push_back(i);
    const Index k = static_cast<Index>(keep.size());
    Mat<Scalar> Bt(k, k);
    Vec<Scalar> cB(k);
    for (Index c = 0; c < k; ++c) {
        const Index col = tab.basis[keep[c]];
        cB(c) = col < n ? lp.c(col) : Scalar(0);
        for (Index r = 0; r < k; ++r) Bt(c, r) = Astd(keep[r], col);
    }
    Vec<Scalar> ystd = Vec<Scalar>::Zero(m);
    if (k > 0) {
        Eigen::FullPivLU<Mat<Scalar>> lu(Bt);
        if (!lu.isInvertible()) throw NumericalError("final simplex basis is singular");
        const Vec<Scalar> y = lu.solve(cB);
        for (Index r = 0; r < k; ++r) ystd(keep[r]) = y(r);
    }
    res.duals.resize(m);
    for (Index i = 0; i < m; ++i) res.duals(i) = flip[i] * ystd(i);
    res.dual_objective = res.duals.dot(lp.b);
    return res;
}

} // namespace camdp
