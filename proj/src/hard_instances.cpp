#include "camdp/hard_instances.hpp"

#include <cmath>
#include <deque>
#include <string>

#include "camdp/chain.hpp"

namespace camdp {

namespace {

void check_amplification(double epsilon, double zeta, double b) {
    if (!(epsilon >= 0 && epsilon <= 1)) throw ArgumentError("epsilon must lie in [0, 1]");
    if (!(zeta >= 0)) throw ArgumentError("zeta must be non-negative");
    if (!(epsilon * zeta <= 0.25)) throw ArgumentError("the family requires eps * zeta <= 1/4");
    if (!(b == 0.5)) throw ArgumentError("the family fixes b = 1/2");
    // Keeps every constraint entry inside [0, 1].
    if (!(zeta * (1 + epsilon) <= b)) throw ArgumentError("the family requires zeta (1 + eps) <= 1/2");
}

double exit_constraint(double epsilon, double zeta, double b) {
    return 2.0 * (b - zeta - epsilon * zeta) / (1.0 - 2.0 * epsilon * zeta);
}

void set_row(Cmdp& m, Index s, Index a, Index to) {
    m.kernel.row(m.row(s, a)).setZero();
    m.kernel(m.row(s, a), to) = 1.0;
}

// Writes one six-state component at states off..off+5 using nA actions, of
// which [1, A) are exit arms and the rest duplicate the reference arm.
void fill_component(Cmdp& m, Index off, std::optional<Index> a_star, Index A, double B, double eps, double zeta,
                    double b) {
    const Index nA = m.n_actions;
    const double x = eps * zeta;
    const double c3 = exit_constraint(eps, zeta, b);
    for (Index a = 0; a < nA; ++a) {
        set_row(m, off + 0, a, a == 1 ? off + 5 : off + 1);
        // Dwell rewards equal the gain the arm leads to, so optimal biases are flat.
        if (a == 0 || a >= A) {
            set_row(m, off + 1, a, off + 4);
            m.reward(off + 1, a) = 0.5;
            m.constraint(off + 1, a) = b - zeta;
        } else {
            const bool designated = a_star && *a_star == a;
            const double up = (designated ? 1 + 2 * x : 1 - 2 * x) / 2;
            const Index r = m.row(off + 1, a);
            m.kernel.row(r).setZero();
            m.kernel(r, off + 1) = 1.0 - 1.0 / B;
            m.kernel(r, off + 2) = (1 - up) / B;
            m.kernel(r, off + 3) = up / B;
            m.reward(off + 1, a) = up;
            m.constraint(off + 1, a) = up * c3;
        }
        for (Index k = 2; k <= 5; ++k) set_row(m, off + k, a, off + k);
        m.reward(off + 3, a) = 1.0;
        m.constraint(off + 3, a) = c3;
        m.reward(off + 4, a) = 0.5;
        m.constraint(off + 4, a) = b - zeta;
        m.constraint(off + 5, a) = b + zeta;
    }
}

void check_component_args(std::optional<Index> a_star, Index A, double B, double eps, double zeta, double b) {
    if (A < 2) throw ArgumentError("the component needs at least two actions");
    if (!(B >= 1)) throw ArgumentError("B must be at least 1");
    if (a_star && (*a_star < 1 || *a_star >= A)) throw ArgumentError("designated action must lie in [1, A)");
    check_amplification(eps, zeta, b);
}

} // namespace

Index GeneralHardParams::n_actions() const { return std::max<Index>({A, branches(), 2}); }

void GeneralHardParams::validate() const {
    if (S < 7 || (S - 1) % 6 != 0) throw ArgumentError("S must be 6 * branches + 1 (one hub state)");
    if (A < 3) throw ArgumentError("the family requires A >= 3");
    if (!(B >= 1)) throw ArgumentError("B must be at least 1");
    if (s_star && (*s_star < 0 || *s_star >= branches())) throw ArgumentError("distinguished branch out of range");
    if (s_star && (a_star < 1 || a_star >= A)) throw ArgumentError("designated action must lie in [1, A)");
    check_amplification(epsilon, zeta, b);
}

Cmdp build_general_component(std::optional<Index> a_star, Index A, double B, double epsilon, double zeta, double b) {
    check_component_args(a_star, A, B, epsilon, zeta, b);
    Cmdp m = Cmdp::zeros(6, std::max<Index>(A, 2));
    fill_component(m, 0, a_star, A, B, epsilon, zeta, b);
    m.threshold = b;
    m.start(0) = 1.0;
    return m;
}

Cmdp build_general_master(const GeneralHardParams& p) {
    p.validate();
    const Index K = p.branches(), nA = p.n_actions(), hub = p.S - 1;
    Cmdp m = Cmdp::zeros(p.S, nA);
    for (Index s = 0; s < K; ++s) {
        std::optional<Index> a;
        if (p.s_star && *p.s_star == s) a = p.a_star;
        fill_component(m, 6 * s, a, p.A, p.B, p.epsilon, p.zeta, p.b);
    }
    for (Index a = 0; a < nA; ++a) set_row(m, hub, a, 6 * std::min(a, K - 1));
    m.threshold = p.b;
    m.start(hub) = 1.0;
    return m;
}

void check_general_layout(const Cmdp& m, const GeneralHardParams& p) {
    p.validate();
    if (m.n_states != p.S || m.n_actions != p.n_actions())
        throw ArgumentError("instance shape does not match the general hard family");
    const Index hub = p.S - 1;
    if (m.start(hub) != 1.0) throw ArgumentError("instance does not start at the hub");
    for (Index s = 0; s < p.branches(); ++s) {
        if (m.kernel(m.row(hub, s), 6 * s) != 1.0) throw ArgumentError("hub does not lead to branch roots");
        for (Index k = 2; k <= 5; ++k)
            for (Index a = 0; a < m.n_actions; ++a)
                if (m.kernel(m.row(6 * s + k, a), 6 * s + k) != 1.0)
                    throw ArgumentError("branch state " + std::to_string(6 * s + k) + " is not absorbing");
        if (m.kernel(m.row(6 * s + 1, 0), 6 * s + 4) != 1.0)
            throw ArgumentError("reference arm does not lead to the safe absorbing state");
    }
}

double HardOccupancy::mu1_prime() const {
    if (!(1.0 - mu0 > 1e-12)) throw NumericalError("mu1' is undefined when all mass sits on the mu0 state");
    return mu1 / (1.0 - mu0);
}

HardOccupancy hard_occupancy(const Cmdp& m, const GeneralHardParams& p, const MatrixXd& x, const MatrixXd& y) {
    check_general_layout(m, p);
    HardOccupancy o;
    for (Index s = 0; s < p.branches(); ++s) {
        const Index off = 6 * s;
        o.mu0 += x.row(off + 5).sum();
        o.mu1 += x.row(off + 4).sum();
        const double exit_mass = x.row(off + 2).sum() + x.row(off + 3).sum();
        double nd = 0, d = 0;
        for (Index a = 1; a < p.A; ++a) {
            const double flow = y(off + 1, a) / p.B;
            if (p.s_star && *p.s_star == s && a == p.a_star)
                d += flow;
            else
                nd += flow;
        }
        const double share = (nd + d > 0) ? d / (nd + d) : 0.0;
        o.mu3 += exit_mass * share;
        o.mu2 += exit_mass * (1 - share);
    }
    return o;
}

HardOccupancy hard_occupancy(const Cmdp& m, const GeneralHardParams& p, const Policy& pi) {
    validate(pi, m.n_states, m.n_actions);
    const MatrixXd P = transition_matrix<double>(pi, m);
    const VectorXd w = stationary_matrix<double>(P).transpose() * m.start;
    // Expected visits to transient states from the start distribution.
    const ChainClasses cls = chain_classes(P);
    std::vector<Index> tr;
    for (Index s = 0; s < m.n_states; ++s)
        if (!cls.recurrent(static_cast<int>(s))) tr.push_back(s);
    VectorXd visits = VectorXd::Zero(m.n_states);
    if (!tr.empty()) {
        const Index k = static_cast<Index>(tr.size());
        MatrixXd M = MatrixXd::Identity(k, k);
        VectorXd st(k);
        for (Index i = 0; i < k; ++i) {
            st(i) = m.start(tr[i]);
            for (Index j = 0; j < k; ++j) M(i, j) -= P(tr[i], tr[j]);
        }
        const VectorXd v = M.transpose().partialPivLu().solve(st);
        for (Index i = 0; i < k; ++i) visits(tr[i]) = v(i);
    }
    MatrixXd x(m.n_states, m.n_actions), y(m.n_states, m.n_actions);
    for (Index s = 0; s < m.n_states; ++s) {
        x.row(s) = w(s) * pi.probs.row(s);
        y.row(s) = visits(s) * pi.probs.row(s);
    }
    return hard_occupancy(m, p, x, y);
}

double occupancy_fraction_mu1(const Cmdp& m, const GeneralHardParams& p, const Policy& pi) {
    return hard_occupancy(m, p, pi).mu1_prime();
}

double occupancy_fraction_mu1(const Cmdp& m, const GeneralHardParams& p, const OccupancySolution<double>& sol) {
    if (sol.status != LpStatus::optimal) throw ArgumentError("occupancy solution is not optimal");
    return hard_occupancy(m, p, sol.mu, sol.transient).mu1_prime();
}

OccupancyCut<double> mu1_prime_cut(const Cmdp& m, RowSense sense, double level) {
    if (m.n_states < 7 || (m.n_states - 1) % 6 != 0) throw ArgumentError("instance is not a general hard master");
    OccupancyCut<double> cut;
    cut.coeff = MatrixXd::Zero(m.n_states, m.n_actions);
    for (Index s = 0; s < (m.n_states - 1) / 6; ++s) {
        cut.coeff.row(6 * s + 4).setConstant(1.0);
        cut.coeff.row(6 * s + 5).setConstant(level);
    }
    cut.sense = sense;
    cut.rhs = level;
    return cut;
}

KlResult kl_designated_rows(double epsilon, double zeta, double B) {
    if (!(B >= 1)) throw ArgumentError("B must be at least 1");
    if (!(epsilon >= 0 && zeta >= 0 && epsilon * zeta <= 0.25)) throw ArgumentError("requires eps * zeta <= 1/4");
    const double x = epsilon * zeta;
    const double lo = (1 - 2 * x) / (2 * B), hi = (1 + 2 * x) / (2 * B);
    const double log_ratio = std::log1p(2 * x) - std::log1p(-2 * x);
    KlResult r;
    // The shared stay probability cancels; the two swapped entries remain.
    r.kl = hi * log_ratio - lo * log_ratio;
    r.bound = 32.0 * x * x / B;
    return r;
}

// ---------------------------------------------------------------- communicating

void CommunicatingHardParams::validate() const {
    if (A < 3) throw ArgumentError("the communicating family requires A >= 3");
    if (S < 4) throw ArgumentError("the communicating family requires S >= 4");
    if (internal_nodes() < 1) throw ArgumentError("S leaves no internal tree node");
    if (!(epsilon >= 0 && epsilon <= 1.0 / 16)) throw ArgumentError("the family requires eps <= 1/16");
    const double logS = std::ceil(std::log(static_cast<double>(S)) / std::log(static_cast<double>(A)) - 1e-12);
    if (!(D >= std::max(16.0 * logS, 16.0))) throw ArgumentError("the family requires D >= max(16 ceil(log_A S), 16)");
    if (k && (*k < 0 || *k >= components())) throw ArgumentError("perturbed leaf out of range");
    if (k && (l < 1 || l >= A - 1)) throw ArgumentError("perturbed arm must lie in [1, A-1)");
    check_amplification(epsilon, zeta, b);
}

CommunicatingLayout communicating_layout(const CommunicatingHardParams& p) {
    p.validate();
    const Index K = p.components(), n_int = p.internal_nodes(), arity = p.A - 1;
    CommunicatingLayout L;
    L.parent.assign(static_cast<std::size_t>(n_int), -1);
    for (Index i = 1; i < n_int; ++i) L.parent[i] = (i - 1) / arity;
    std::vector<std::vector<bool>> used(n_int, std::vector<bool>(arity, false));
    for (Index i = 1; i < n_int; ++i) used[(i - 1) / arity][(i - 1) % arity] = true;
    L.x.resize(K);
    L.y.resize(K);
    L.z.resize(K);
    L.parent.resize(static_cast<std::size_t>(n_int + 3 * K), -1);
    Index c = 0;
    for (Index j = 0; j < arity && c < K; ++j)
        for (Index i = 0; i < n_int && c < K; ++i)
            if (!used[i][j]) {
                used[i][j] = true;
                L.x[c] = n_int + 3 * c;
                L.y[c] = L.x[c] + 1;
                L.z[c] = L.x[c] + 2;
                L.parent[L.x[c]] = i;
                ++c;
            }
    if (c < K) throw ArgumentError("the tree has too few free slots for the components");
    return L;
}

Cmdp build_communicating_hard(const CommunicatingHardParams& p) {
    const CommunicatingLayout L = communicating_layout(p);
    const Index n_int = p.internal_nodes(), A = p.A, arity = A - 1;
    const double Dp = p.D / 8.0;
    const double x = p.epsilon * p.zeta;
    const double c3 = exit_constraint(p.epsilon, p.zeta, p.b);
    Cmdp m = Cmdp::zeros(p.S, A);

    // Children of each internal node by slot.
    std::vector<std::vector<Index>> child(n_int, std::vector<Index>(arity, -1));
    for (Index s = 0; s < p.S; ++s) {
        const Index par = L.parent[s];
        if (par < 0 || s == L.root) continue;
        for (Index j = 0; j < arity; ++j)
            if (child[par][j] < 0) {
                child[par][j] = s;
                break;
            }
    }
    for (Index i = 0; i < n_int; ++i) {
        for (Index j = 0; j < arity; ++j) set_row(m, i, j, child[i][j] >= 0 ? child[i][j] : i);
        set_row(m, i, A - 1, L.parent[i] >= 0 ? L.parent[i] : i);
    }
    m.constraint(L.root, A - 1) = p.b + p.zeta;

    for (std::size_t c = 0; c < L.x.size(); ++c) {
        const Index xs = L.x[c], ys = L.y[c], zs = L.z[c];
        set_row(m, xs, 0, xs);
        m.reward(xs, 0) = 0.5;
        m.constraint(xs, 0) = p.b - p.zeta;
        for (Index a = 1; a < arity; ++a) {
            const bool designated = p.k && static_cast<std::size_t>(*p.k) == c && a == p.l;
            const double pz = designated ? (1 + 2 * x) / 2 : (1 - 2 * x) / 2;
            const Index r = m.row(xs, a);
            m.kernel(r, zs) = pz;
            m.kernel(r, ys) = 1 - pz;
            // Paying the exit's expected value at x makes every arm cycle average
            // exactly pz per step.
            m.reward(xs, a) = pz;
            m.constraint(xs, a) = pz * c3;
        }
        set_row(m, xs, A - 1, L.parent[xs]);
        for (Index a = 0; a < A; ++a) {
            const Index rz = m.row(zs, a);
            m.kernel(rz, zs) = 1 - 1 / Dp;
            m.kernel(rz, xs) = 1 / Dp;
            m.reward(zs, a) = 1.0;
            m.constraint(zs, a) = c3;
            if (a == A - 1) {
                set_row(m, ys, a, ys);
            } else {
                const Index ry = m.row(ys, a);
                m.kernel(ry, ys) = 1 - 1 / Dp;
                m.kernel(ry, xs) = 1 / Dp;
            }
        }
    }
    m.threshold = p.b;
    m.start(L.root) = 1.0;
    return m;
}

bool is_communicating(const Cmdp& m) {
    const Index S = m.n_states, A = m.n_actions;
    MatrixXd reach = MatrixXd::Zero(S, S);
    for (Index s = 0; s < S; ++s)
        for (Index a = 0; a < A; ++a)
            for (Index j = 0; j < S; ++j)
                if (m.kernel(m.row(s, a), j) >= kSupportEps) reach(s, j) = 1;
    for (Index src = 0; src < S; ++src) {
        std::vector<bool> seen(S, false);
        std::deque<Index> q{src};
        seen[src] = true;
        Index count = 1;
        while (!q.empty()) {
            const Index v = q.front();
            q.pop_front();
            for (Index j = 0; j < S; ++j)
                if (reach(v, j) > 0 && !seen[j]) {
                    seen[j] = true;
                    ++count;
                    q.push_back(j);
                }
        }
        if (count != S) return false;
    }
    return true;
}

} // namespace camdp
