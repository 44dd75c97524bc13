#include "camdp/primal_dual.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "camdp/chain.hpp"

namespace camdp {

// ---------------------------------------------------------------- counts

std::string count_to_string(IterCount v) {
    if (v == 0) return "0";
    const bool neg = v < 0;
    std::string s;
    unsigned __int128 u = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1 : static_cast<unsigned __int128>(v);
    while (u > 0) {
        s.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
        u /= 10;
    }
    if (neg) s.push_back('-');
    std::reverse(s.begin(), s.end());
    return s;
}

IterCount ceil_count(long double v) {
    if (!(v >= 0)) throw ArgumentError("iteration count must be non-negative");
    if (!(v < std::ldexp(1.0L, 125))) throw ArgumentError("iteration count exceeds the 128-bit range");
    return static_cast<IterCount>(std::ceil(v));
}

IterCount parse_count(const std::string& s) {
    if (s.empty()) throw ArgumentError("empty iteration count");
    if (s.find_first_of(".eE") != std::string::npos) {
        std::size_t pos = 0;
        const long double v = std::stold(s, &pos);
        if (pos != s.size()) throw ArgumentError("malformed iteration count: " + s);
        return ceil_count(v);
    }
    IterCount v = 0;
    for (char ch : s) {
        if (ch < '0' || ch > '9') throw ArgumentError("malformed iteration count: " + s);
        v = v * 10 + (ch - '0');
    }
    return v;
}

const char* to_string(ScheduleMode m) {
    switch (m) {
    case ScheduleMode::relaxed: return "relaxed";
    case ScheduleMode::strict: return "strict";
    case ScheduleMode::manual: return "manual";
    }
    return "?";
}

ScheduleMode parse_schedule_mode(const std::string& s) {
    if (s == "relaxed") return ScheduleMode::relaxed;
    if (s == "strict") return ScheduleMode::strict;
    if (s == "manual") return ScheduleMode::manual;
    throw ArgumentError("unknown mode '" + s + "' (expected relaxed, strict or manual)");
}

const char* to_string(RunStatus s) { return s == RunStatus::complete ? "complete" : "truncated"; }

// ---------------------------------------------------------------- schedules

void PrimalDualConfig::note(const std::string& name, long double value, const std::string& rule) {
    provenance.push_back({name, value, rule});
}

void PrimalDualConfig::validate() const {
    if (!(U > 0)) throw ArgumentError("U must be positive");
    if (!(eps_net > 0 && eps_net <= U)) throw ArgumentError("net resolution must lie in (0, U]");
    if (!(eta > 0)) throw ArgumentError("step size must be positive");
    if (T < 1) throw ArgumentError("iteration count must be at least 1");
    if (!(gamma > 0 && gamma < 1)) throw ArgumentError("discount must lie in (0,1)");
    if (!(b_prime >= -1 && b_prime <= 2)) throw ArgumentError("shifted threshold must lie in [-1, 2]");
    if (!(omega >= 0)) throw ArgumentError("perturbation must be non-negative");
    if (!(planner_tol > 0)) throw ArgumentError("planner tolerance must be positive");
}

namespace {

// B + H enters the discount as a denominator; the floor keeps gamma >= 1/2.
double horizon_scale(double B, double H, double eps_opt, PrimalDualConfig& cfg) {
    if (!(B >= 0 && H >= 0)) throw ArgumentError("B and H must be non-negative");
    const double floor_v = eps_opt / 2.0;
    const double bh = std::max(B + H, floor_v);
    cfg.note("B+H", bh, B + H < floor_v ? "B+H floored at eps_opt/2" : "B+H");
    return bh;
}

IterCount iterations_for(long double U, long double eps_eff, long double lambda_bar) {
    const long double gap = U - lambda_bar;
    if (!(gap > 0)) throw ArgumentError("U must exceed the dual-optimum surrogate");
    return ceil_count(U * U / (eps_eff * eps_eff) * (1.0L + 1.0L / (gap * gap)));
}

} // namespace

PrimalDualConfig relaxed_schedule(double epsilon, double B, double H, double threshold,
                                  std::optional<double> lambda_bar) {
    if (!(epsilon > 0 && epsilon <= 1)) throw ArgumentError("epsilon must lie in (0, 1]");
    PrimalDualConfig c;
    c.mode = ScheduleMode::relaxed;
    c.eps_opt = epsilon / 4.0;
    c.note("eps_opt", c.eps_opt, "eps/4");
    const double bh = horizon_scale(B, H, c.eps_opt, c);
    c.gamma = 1.0 - c.eps_opt / (4.0 * bh);
    c.note("gamma", c.gamma, "1 - eps_opt/(4(B+H))");
    const long double g1 = 1.0L - static_cast<long double>(c.gamma);
    c.b_prime = threshold - 3.0 * epsilon / 8.0;
    c.note("b_prime", c.b_prime, "b - 3 eps/8");
    c.omega = static_cast<double>(epsilon * g1 / 8.0L);
    c.note("omega", c.omega, "eps (1-gamma)/8");
    const long double U = 32.0L / (5.0L * epsilon * g1);
    c.U = static_cast<double>(U);
    c.note("U", U, "32/(5 eps (1-gamma))");
    c.eps_net = static_cast<double>(static_cast<long double>(epsilon) * epsilon * g1 * g1 / 96.0L);
    c.note("eps_net", c.eps_net, "eps^2 (1-gamma)^2/96");
    c.lambda_bar = lambda_bar ? *lambda_bar : c.U / 2.0;
    c.note("lambda_bar", c.lambda_bar, lambda_bar ? "override" : "U/2");
    c.T = iterations_for(U, c.eps_opt * g1 / 2.0L, c.lambda_bar);
    c.note("T", static_cast<long double>(c.T), "ceil(4U^2/(eps_opt^2 (1-gamma)^2) (1 + 1/(U-lambda_bar)^2))");
    c.eta = static_cast<double>(U / std::sqrt(static_cast<long double>(c.T)));
    c.note("eta", c.eta, "U/sqrt(T)");
    c.planner_tol = c.eps_opt / 8.0;
    c.note("planner_tol", c.planner_tol, "eps_opt/8");
    c.validate();
    return c;
}

PrimalDualConfig strict_schedule(double epsilon, double B, double H, double zeta, double threshold,
                                 const StrictConstants& k, std::optional<double> lambda_bar) {
    if (!(epsilon > 0 && epsilon <= 1)) throw ArgumentError("epsilon must lie in (0, 1]");
    if (!(zeta > 0)) throw ArgumentError("strict schedule requires a positive Slater constant");
    if (!(k.delta_divisor > 0 && k.u_numerator > 0)) throw ArgumentError("strict constants must be positive");
    PrimalDualConfig c;
    c.mode = ScheduleMode::strict;
    // eps_opt depends on gamma and gamma on eps_opt; the discount uses the
    // gamma-free upper bound eps/5 on eps_opt.
    const double bh = horizon_scale(B, H, epsilon / 5.0, c);
    c.gamma = 1.0 - (epsilon / 5.0) / (4.0 * bh);
    c.note("gamma", c.gamma, "1 - (eps/5)/(4(B+H))");
    const long double g1 = 1.0L - static_cast<long double>(c.gamma);
    const long double delta = epsilon * g1 * zeta / k.delta_divisor;
    c.note("Delta", delta, "eps (1-gamma) zeta / divisor");
    c.b_prime = static_cast<double>(threshold + delta);
    c.note("b_prime", c.b_prime, "b + Delta");
    c.eps_opt = static_cast<double>(delta / 5.0L);
    c.note("eps_opt", c.eps_opt, "Delta/5");
    c.omega = static_cast<double>(epsilon * g1 / 10.0L);
    c.note("omega", c.omega, "eps (1-gamma)/10");
    const long double U = k.u_numerator / (zeta * g1);
    c.U = static_cast<double>(U);
    c.note("U", U, "numerator/(zeta (1-gamma))");
    c.eps_net = static_cast<double>(delta * delta * g1 * g1 / 150.0L);
    c.note("eps_net", c.eps_net, "Delta^2 (1-gamma)^2/150");
    c.lambda_bar = lambda_bar ? *lambda_bar : c.U / 2.0;
    c.note("lambda_bar", c.lambda_bar, lambda_bar ? "override" : "U/2");
    c.T = iterations_for(U, static_cast<long double>(c.eps_opt) * g1 / 2.0L, c.lambda_bar);
    c.note("T", static_cast<long double>(c.T), "ceil(4U^2/(eps_opt^2 (1-gamma)^2) (1 + 1/(U-lambda_bar)^2))");
    c.eta = static_cast<double>(U / std::sqrt(static_cast<long double>(c.T)));
    c.note("eta", c.eta, "U/sqrt(T)");
    c.planner_tol = c.eps_opt / 8.0;
    c.note("planner_tol", c.planner_tol, "eps_opt/8");
    c.validate();
    return c;
}

PrimalDualConfig known_dual_schedule(double eps_opt, double U, double lambda_star, double b_prime) {
    if (!(eps_opt > 0)) throw ArgumentError("eps_opt must be positive");
    if (!(U > lambda_star && lambda_star >= 0)) throw ArgumentError("need 0 <= lambda* < U");
    PrimalDualConfig c;
    c.mode = ScheduleMode::manual;
    c.eps_opt = eps_opt;
    c.U = U;
    c.b_prime = b_prime;
    c.lambda_bar = lambda_star;
    c.T = iterations_for(U, eps_opt, lambda_star);
    c.note("T", static_cast<long double>(c.T), "ceil(U^2/eps_opt^2 (1 + 1/(U-lambda*)^2))");
    c.eps_net = eps_opt * eps_opt * (U - lambda_star) / (6.0 * U);
    c.note("eps_net", c.eps_net, "eps_opt^2 (U-lambda*)/(6U)");
    c.eta = static_cast<double>(U / std::sqrt(static_cast<long double>(c.T)));
    c.note("eta", c.eta, "U/sqrt(T)");
    c.planner_tol = eps_opt / 8.0;
    c.validate();
    return c;
}

// ---------------------------------------------------------------- net

double project_interval(double x, double U) {
    if (!(U > 0)) throw ArgumentError("projection bound must be positive");
    return std::min(std::max(x, 0.0), U);
}

double round_to_net(double x, double eps_net, double U) {
    if (!(eps_net > 0) || !(U > 0)) throw ArgumentError("net parameters must be positive");
    if (!(x >= 0 && x <= U)) throw ArgumentError("value outside [0, U]; project before rounding");
    const double k = std::floor(x / eps_net);
    const double low = std::min(k * eps_net, U);
    const double high = std::min((k + 1) * eps_net, U);
    return (x - low <= high - x) ? low : high;
}

double dual_step(double lambda, double eta, double rho_c_hat, double b_prime, double U, double eps_net) {
    return round_to_net(project_interval(lambda - eta * (rho_c_hat - b_prime), U), eps_net, U);
}

DualNet::DualNet(double eps_net, double U) : eps_(eps_net), U_(U) {
    if (!(eps_net > 0 && eps_net <= U)) throw ArgumentError("net resolution must lie in (0, U]");
    const long double r = static_cast<long double>(U) / static_cast<long double>(eps_net);
    if (r > std::ldexp(1.0L, 110)) throw ArgumentError("net has too many points");
    const long double fl = std::floor(r);
    const long double frac = r - fl;
    K_ = static_cast<IterCount>(fl);
    if (frac < 1e-9L) {
        top_ = K_;
    } else if (1.0L - frac < 1e-9L) {
        K_ += 1;
        top_ = K_;
    } else {
        top_ = K_ + 1;
        top_frac_ = frac;
    }
}

long double DualNet::value(IterCount k) const {
    if (k == top_) return U_;
    return static_cast<long double>(k) * static_cast<long double>(eps_);
}

IterCount DualNet::step(IterCount k, long double delta) const {
    IterCount base = k;
    long double off = 0;
    if (k == top_ && top_ != K_) {
        base = K_;
        off = top_frac_;
    }
    const long double z = off + delta;
    const long double fl = std::floor(z);
    const long double fr = z - fl;
    const IterCount q = base + static_cast<IterCount>(fl);
    if (q < 0) return 0;
    if (q >= K_) {
        if (top_ == K_ || q > K_) return top_;
        if (fr >= top_frac_) return top_;
        return (top_frac_ - fr < fr) ? top_ : K_;
    }
    return fr > 0.5L ? q + 1 : q;
}

IterCount DualNet::index_of(long double lambda) const {
    if (lambda <= 0) return 0;
    return step(0, lambda / static_cast<long double>(eps_));
}

// ---------------------------------------------------------------- oracles

DiscountedOracle::DiscountedOracle(MatrixXd kernel, MatrixXd r_p, MatrixXd c, double gamma, double tol, bool refine)
    : kernel_(std::move(kernel)), r_p_(std::move(r_p)), c_(std::move(c)), gamma_(gamma), tol_(tol) {
    opt_.refine = refine;
}

DeterministicPolicy DiscountedOracle::solve(double lambda) {
    return solve_discounted<double>(kernel_, combined_reward<double>(r_p_, c_, lambda), gamma_, tol_, opt_);
}

ExactGainOracle::ExactGainOracle(const MatrixXd& kernel, const MatrixXd& r_p, const MatrixXd& c,
                                 const VectorXd& start, double cap)
    : table_(policy_gain_table<double>(kernel, r_p, c, start, cap)) {}

DeterministicPolicy ExactGainOracle::solve(double lambda) { return table_.policies[table_.best(lambda)]; }

DeterministicPolicy primal_update(const EmpiricalModel& e, const PerturbedReward& r_p, const MatrixXd& c,
                                  double lambda, double gamma, double tol) {
    return solve_discounted<double>(e.kernel_hat, combined_reward<double>(r_p.values, c, lambda), gamma, tol);
}

// ---------------------------------------------------------------- rotation sums

namespace {

using i128 = __int128;

// Monoid over the symbol path of floor((up t + y0)/M): U marks a wrap, R a step.
// For every R it accumulates the displacement up*(R before) - M*(U before).
struct PathNode {
    bool empty = true;
    i128 cr = 0, cu = 0;  // symbol counts
    i128 n_plain = 0;          // R not directly preceded by U
    long double s_plain = 0;   // displacement sum over those
    long double s_all = 0;     // displacement sum over every R
    bool starts_r = false, ends_u = false;
};

i128 floor_div(i128 a, i128 b) {
    i128 q = a / b;
    if (a % b != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

// floor((p l + r) / q) for p, q > 0 and |r| <= q, without forming p l.
i128 mul_add_div(i128 p, i128 l, i128 r, i128 q) { return p * (l / q) + floor_div(p * (l % q) + r, q); }

struct PathAlgebra {
    i128 up, M;

    PathNode unit_u() const {
        PathNode n;
        n.empty = false;
        n.cu = 1;
        n.ends_u = true;
        return n;
    }
    PathNode unit_r() const {
        PathNode n;
        n.empty = false;
        n.cr = 1;
        n.n_plain = 1;
        n.starts_r = true;
        return n;
    }
    PathNode mul(const PathNode& x, const PathNode& y) const {
        if (x.empty) return y;
        if (y.empty) return x;
        const i128 d = up * x.cr - M * x.cu;
        PathNode z;
        z.empty = false;
        z.cr = x.cr + y.cr;
        z.cu = x.cu + y.cu;
        const long double dl = static_cast<long double>(d);
        z.s_all = x.s_all + y.s_all + static_cast<long double>(y.cr) * dl;
        z.n_plain = x.n_plain + y.n_plain;
        z.s_plain = x.s_plain + y.s_plain + static_cast<long double>(y.n_plain) * dl;
        if (x.ends_u && y.starts_r) {
            z.n_plain -= 1;
            z.s_plain -= dl;
        }
        z.starts_r = x.starts_r;
        z.ends_u = y.ends_u;
        return z;
    }
    PathNode pow(PathNode b, i128 e) const {
        PathNode r;
        while (e > 0) {
            if (e & 1) r = mul(r, b);
            b = mul(b, b);
            e >>= 1;
        }
        return r;
    }
    // Product over i = 1..l of U^(f(i) - f(i-1)) R with f(i) = floor((p i + r)/q), 0 <= r < q.
    PathNode euclid(i128 p, i128 q, i128 r, i128 l, const PathNode& a, const PathNode& b) const {
        if (l == 0) return PathNode{};
        if (p >= q) return euclid(p % q, q, r, l, a, mul(pow(a, p / q), b));
        const i128 m = mul_add_div(p, l, r, q);
        if (m == 0) return pow(b, l);
        const i128 cnt = l - mul_add_div(q, m, -r - 1, p);
        PathNode out = mul(pow(b, (q - r - 1) / p), a);
        out = mul(out, euclid(q, p, (q - r - 1) % p, m - 1, b, a));
        return mul(out, pow(b, cnt));
    }
};

struct Region {
    IterCount L = 0, R = 0;
    int pid = 0;
};

struct StepShape {
    long double fl = 0;
    IterCount d = 0;
};

StepShape shape_of(long double delta) {
    StepShape s;
    s.fl = std::floor(delta);
    s.d = static_cast<IterCount>(s.fl) + ((delta - s.fl) > 0.5L ? 1 : 0);
    return s;
}

class Engine {
public:
    Engine(PrimalOracle& oracle, const MatrixXd& kernel, const MatrixXd& r_p, const MatrixXd& c,
           const VectorXd& start, const PrimalDualConfig& cfg, const EngineOptions& opt)
        : oracle_(oracle), kernel_(kernel), r_p_(r_p), c_(c), start_(start), cfg_(cfg), opt_(opt),
          net_(cfg.eps_net, cfg.U) {
        trace_.net = net_;
        trace_.b_prime = cfg.b_prime;
    }

    PrimalDualResult run() {
        if (opt_.kind == EngineKind::literal)
            run_literal();
        else
            run_accelerated();
        return finish();
    }

private:
    PrimalOracle& oracle_;
    const MatrixXd& kernel_;
    const MatrixXd& r_p_;
    const MatrixXd& c_;
    const VectorXd& start_;
    const PrimalDualConfig& cfg_;
    EngineOptions opt_;
    DualNet net_;
    DualTrace trace_;
    std::map<DeterministicPolicy, int> ids_;
    std::vector<long double> delta_;
    std::map<IterCount, int> probes_;
    std::map<IterCount, Region> regions_;
    std::uint64_t planner_calls_ = 0;
    std::uint64_t work_ = 0;
    RunStatus status_ = RunStatus::complete;
    IterCount t_ = 0;
    IterCount k_ = 0;

    int id_of(const DeterministicPolicy& d) {
        auto it = ids_.find(d);
        if (it != ids_.end()) return it->second;
        const int id = static_cast<int>(trace_.policies.size());
        ids_.emplace(d, id);
        PolicyTally tally;
        tally.policy = d;
        tally.rho_r_hat = start_gain<double>(d, kernel_, r_p_, start_);
        tally.rho_c_hat = start_gain<double>(d, kernel_, c_, start_);
        trace_.policies.push_back(tally);
        const long double g = static_cast<long double>(tally.rho_c_hat) - cfg_.b_prime;
        delta_.push_back(-static_cast<long double>(cfg_.eta) * g / static_cast<long double>(cfg_.eps_net));
        return id;
    }

    int call_planner(IterCount k) {
        ++planner_calls_;
        const double lambda = static_cast<double>(net_.value(k));
        try {
            return id_of(oracle_.solve(lambda));
        } catch (const Error& e) {
            throw NumericalError("planner failed at iteration " + count_to_string(t_) + " (lambda = " +
                                 std::to_string(lambda) + "): " + e.what());
        }
    }

    void add(int pid, IterCount count, long double lambda_sum) {
        trace_.policies[pid].count += count;
        trace_.policies[pid].lambda_sum += lambda_sum;
    }

    void record(IterCount first, IterCount len, IterCount start, IterCount step, int pid) {
        if (trace_.segments.size() >= opt_.max_trace_segments) {
            trace_.segments_complete = false;
            return;
        }
        trace_.segments.push_back({first, len, start, static_cast<std::int64_t>(step), pid});
    }

    // ---- literal loop: one planner call per iteration.
    void run_literal() {
        while (t_ < cfg_.T) {
            if (work_ >= opt_.max_work) {
                status_ = RunStatus::truncated;
                break;
            }
            ++work_;
            const int pid = call_planner(k_);
            add(pid, 1, net_.value(k_));
            record(t_, 1, k_, 0, pid);
            k_ = net_.step(k_, delta_[pid]);
            ++t_;
        }
    }

    // ---- region machinery for the accelerated loop.
    int probe(IterCount k) {
        auto it = probes_.find(k);
        if (it != probes_.end()) return it->second;
        if (auto r = find_region(k)) return r->pid;
        const int pid = call_planner(k);
        probes_.emplace(k, pid);
        return pid;
    }

    const Region* find_region(IterCount k) const {
        auto it = regions_.upper_bound(k);
        if (it == regions_.begin()) return nullptr;
        --it;
        return (k >= it->second.L && k <= it->second.R) ? &it->second : nullptr;
    }

    // Maximal index interval around k on which the planner returns the same
    // policy. Relies on those sets being intervals of the dual variable.
    Region region_of(IterCount k) {
        if (auto r = find_region(k)) return *r;
        const int pid = probe(k);
        const IterCount top = net_.top();

        IterCount lo = k, hi = top + 1;
        for (auto it = probes_.upper_bound(k); it != probes_.end(); ++it) {
            if (it->second != pid) {
                hi = it->first;
                break;
            }
            lo = it->first;
        }
        for (IterCount s = 1; lo + s < hi; s *= 2) {
            if (probe(lo + s) == pid) {
                lo += s;
            } else {
                hi = lo + s;
                break;
            }
        }
        while (hi - lo > 1) {
            const IterCount mid = lo + (hi - lo) / 2;
            (probe(mid) == pid ? lo : hi) = mid;
        }
        const IterCount R = lo;

        IterCount up = k, dn = -1;
        {
            auto it = probes_.lower_bound(k);
            while (it != probes_.begin()) {
                --it;
                if (it->second != pid) {
                    dn = it->first;
                    break;
                }
                up = it->first;
            }
        }
        for (IterCount s = 1; up - s > dn; s *= 2) {
            if (probe(up - s) == pid) {
                up -= s;
            } else {
                dn = up - s;
                break;
            }
        }
        while (up - dn > 1) {
            const IterCount mid = dn + (up - dn) / 2;
            (probe(mid) == pid ? up : dn) = mid;
        }
        Region reg{up, R, pid};
        regions_[reg.L] = reg;
        return reg;
    }

    bool interior(IterCount k, long double fl) const {
        const IterCount q = k + static_cast<IterCount>(fl);
        return k <= net_.grid_max() && q >= 0 && q <= net_.grid_max() - 1;
    }

    // Two adjacent regions pushing toward their common boundary form a
    // rotation on a window of size up + down; the remaining iterations are
    // summed in closed form.
    bool try_rotation(const Region& reg, const StepShape& sh) {
        const IterCount K = net_.grid_max();
        Region A, B;
        StepShape sa, sb;
        IterCount beta;
        if (sh.d > 0) {
            A = reg;
            sa = sh;
            beta = A.R;
            if (beta + 1 > K) return false;
            B = region_of(beta + 1);
            sb = shape_of(delta_[B.pid]);
        } else {
            B = reg;
            sb = sh;
            beta = B.L - 1;
            if (beta < 0) return false;
            A = region_of(beta);
            sa = shape_of(delta_[A.pid]);
        }
        if (!(sa.d > 0 && sb.d < 0)) return false;
        const IterCount up = sa.d, down = -sb.d;
        const IterCount w0 = beta - down + 1, w1 = beta + up;
        if (w0 < A.L || w0 < 0 || w1 > B.R || w1 > K) return false;
        if (!interior(w0, sa.fl) || !interior(beta, sa.fl)) return false;
        if (!interior(beta + 1, sb.fl) || !interior(w1, sb.fl)) return false;
        if (k_ < w0 || k_ > w1) return false;

        const IterCount n = cfg_.T - t_;
        const IterCount M = up + down;
        const IterCount y0 = k_ - w0;
        const PathAlgebra alg{up, M};
        const PathNode path = alg.euclid(up, M, y0, n, alg.unit_u(), alg.unit_r());
        // Index sums exceed 128 bits at the largest schedules, so they are long double.
        const IterCount nA = path.n_plain;
        const long double nl = static_cast<long double>(n), nAl = static_cast<long double>(nA);
        const long double y0l = static_cast<long double>(y0);
        const long double sumA = nAl * y0l + path.s_plain;
        const long double sumAll = nl * y0l + path.s_all + static_cast<long double>(M) * (nl - nAl);
        const long double eps = cfg_.eps_net;
        const long double wd = static_cast<long double>(w0);
        add(A.pid, nA, eps * (nAl * wd + sumA));
        add(B.pid, n - nA, eps * ((nl - nAl) * wd + (sumAll - sumA)));
        record(t_, n, k_, 0, k_ <= beta ? A.pid : B.pid);
        trace_.segments_complete = false;
        k_ = w0 + ((n % M) * up + y0) % M;
        t_ = cfg_.T;
        return true;
    }

    struct Seg {
        int pid;
        IterCount len;   // untruncated
        IterCount step;  // index increment per iteration (0 for a single explicit step)
        IterCount next;  // index after the full segment
    };

    Seg next_segment(IterCount k) {
        const Region reg = region_of(k);
        const StepShape sh = shape_of(delta_[reg.pid]);
        const IterCount nxt = net_.step(k, delta_[reg.pid]);
        if (nxt != k && sh.d != 0 && interior(k, sh.fl)) {
            const IterCount K = net_.grid_max();
            const IterCount fl = static_cast<IterCount>(sh.fl);
            IterCount m;
            if (sh.d > 0) {
                const IterCount limit = std::min(reg.R, K - 1 - fl);
                m = (limit - k) / sh.d + 1;
            } else {
                const IterCount limit = std::max(reg.L, -fl);
                m = (k - limit) / (-sh.d) + 1;
            }
            return {reg.pid, m, sh.d, k + m * sh.d};
        }
        return {reg.pid, 1, 0, nxt};
    }

    void apply(const Seg& s, IterCount len) {
        const long double eps = cfg_.eps_net;
        long double lsum;
        if (s.step == 0) {
            lsum = static_cast<long double>(len) * net_.value(k_);
        } else {
            const long double m = static_cast<long double>(len);
            lsum = eps * (m * static_cast<long double>(k_) + static_cast<long double>(s.step) * (m * (m - 1) / 2));
        }
        add(s.pid, len, lsum);
        record(t_, len, k_, s.step, s.pid);
        t_ += len;
        k_ = (len == s.len) ? s.next : k_ + len * s.step;
        ++work_;
    }

    void run_accelerated() {
        // Online Brent cycle detection on segment-start indices.
        IterCount tortoise = k_;
        std::uint64_t power = 1, lam = 0;
        bool cycle_done = false;
        while (t_ < cfg_.T) {
            if (work_ >= opt_.max_work) {
                status_ = RunStatus::truncated;
                return;
            }
            const Region reg = region_of(k_);
            const long double delta = delta_[reg.pid];
            if (net_.step(k_, delta) == k_) {
                const IterCount n = cfg_.T - t_;
                add(reg.pid, n, static_cast<long double>(n) * net_.value(k_));
                record(t_, n, k_, 0, reg.pid);
                t_ = cfg_.T;
                return;
            }
            const StepShape sh = shape_of(delta);
            if (sh.d != 0 && interior(k_, sh.fl) && try_rotation(reg, sh)) return;

            const Seg s = next_segment(k_);
            apply(s, std::min(s.len, cfg_.T - t_));
            if (cycle_done || t_ >= cfg_.T) continue;

            ++lam;
            if (k_ == tortoise) {
                cycle_done = true;
                skip_cycles(lam);
                continue;
            }
            if (lam == power) {
                tortoise = k_;
                power *= 2;
                lam = 0;
            }
        }
    }

    // The current index starts a cycle of `len` segments: run it once, then
    // add as many whole repetitions as fit.
    void skip_cycles(std::uint64_t len) {
        std::vector<IterCount> c0(trace_.policies.size());
        std::vector<long double> l0(trace_.policies.size());
        for (std::size_t i = 0; i < c0.size(); ++i) {
            c0[i] = trace_.policies[i].count;
            l0[i] = trace_.policies[i].lambda_sum;
        }
        const IterCount t0 = t_;
        const IterCount k0 = k_;
        for (std::uint64_t i = 0; i < len && t_ < cfg_.T; ++i) {
            if (work_ >= opt_.max_work) return;
            const Seg s = next_segment(k_);
            apply(s, std::min(s.len, cfg_.T - t_));
        }
        if (t_ >= cfg_.T || k_ != k0) return;
        const IterCount per = t_ - t0;
        const IterCount reps = (cfg_.T - t_) / per;
        if (reps <= 0) return;
        for (std::size_t i = 0; i < trace_.policies.size(); ++i) {
            const IterCount dc = trace_.policies[i].count - (i < c0.size() ? c0[i] : 0);
            const long double dl = trace_.policies[i].lambda_sum - (i < l0.size() ? l0[i] : 0.0L);
            trace_.policies[i].count += reps * dc;
            trace_.policies[i].lambda_sum += static_cast<long double>(reps) * dl;
        }
        t_ += reps * per;
        trace_.segments_complete = false;
    }

    PrimalDualResult finish() {
        PrimalDualResult res;
        trace_.iterations = t_;
        trace_.final_index = k_;
        const long double total = static_cast<long double>(t_);
        for (const auto& p : trace_.policies) {
            if (p.count == 0) continue;
            const double w = static_cast<double>(static_cast<long double>(p.count) / total);
            res.mixture.members.emplace_back(w, Policy::from_deterministic(p.policy, r_p_.cols()));
        }
        res.trace = std::move(trace_);
        res.status = status_;
        res.planner_calls = planner_calls_;
        res.simulated_segments = work_;
        return res;
    }
};

} // namespace

PrimalDualResult run_primal_dual(PrimalOracle& oracle, const MatrixXd& kernel_hat, const MatrixXd& r_p,
                                 const MatrixXd& c, const VectorXd& start, const PrimalDualConfig& cfg,
                                 const EngineOptions& opt) {
    cfg.validate();
    if (r_p.rows() != c.rows() || r_p.cols() != c.cols()) throw ArgumentError("reward and constraint shapes differ");
    if (kernel_hat.rows() != r_p.rows() * r_p.cols() || kernel_hat.cols() != r_p.rows())
        throw ArgumentError("kernel shape does not match reward table");
    if (start.size() != r_p.rows()) throw ArgumentError("start distribution has the wrong length");
    Engine engine(oracle, kernel_hat, r_p, c, start, cfg, opt);
    return engine.run();
}

PrimalDualResult run_primal_dual(const EmpiricalModel& e, const PerturbedReward& r_p, const MatrixXd& c,
                                 const VectorXd& start, const PrimalDualConfig& cfg, const EngineOptions& opt) {
    DiscountedOracle oracle(e.kernel_hat, r_p.values, c, cfg.gamma, cfg.planner_tol);
    return run_primal_dual(oracle, e.kernel_hat, r_p.values, c, start, cfg, opt);
}

// ---------------------------------------------------------------- trace

std::vector<DualRecord> DualTrace::records(std::size_t limit) const {
    std::vector<DualRecord> out;
    for (const auto& s : segments) {
        const auto& p = policies[s.policy_id];
        for (IterCount j = 0; j < s.length && out.size() < limit; ++j) {
            DualRecord r;
            r.iter = s.first_iter + j;
            r.lambda = net.value(s.start_index + j * s.index_step);
            r.policy_id = s.policy_id;
            r.rho_c_hat = p.rho_c_hat;
            r.rho_combined_hat = static_cast<double>(p.rho_r_hat + r.lambda * p.rho_c_hat);
            out.push_back(r);
        }
        if (out.size() >= limit) break;
    }
    return out;
}

long double dual_regret(const DualTrace& trace, double lambda, double b_prime) {
    long double r = 0;
    for (const auto& p : trace.policies) {
        if (p.count == 0) continue;
        const long double g = static_cast<long double>(p.rho_c_hat) - b_prime;
        r += g * (p.lambda_sum - static_cast<long double>(lambda) * static_cast<long double>(p.count));
    }
    return r;
}

long double dual_regret(const std::vector<DualRecord>& records, double lambda, double b_prime) {
    long double r = 0;
    for (const auto& rec : records)
        r += (rec.lambda - static_cast<long double>(lambda)) * (static_cast<long double>(rec.rho_c_hat) - b_prime);
    return r;
}

long double dual_regret_bound(IterCount T, double eps_net, double U) {
    const long double t = static_cast<long double>(T);
    const long double e = eps_net, u = U;
    return std::pow(t, 1.5L) * (e * e + 2 * e * u) / (2 * u) + u * std::sqrt(t);
}

void write_trace_csv(const DualTrace& trace, std::ostream& out) {
    out << "iter,lambda,rho_c_hat,rho_combined_hat,policy_id\n";
    std::ostringstream line;
    for (const auto& s : trace.segments) {
        const auto& p = trace.policies[s.policy_id];
        const long double lam = trace.net.value(s.start_index);
        line.str("");
        line.precision(17);
        line << count_to_string(s.first_iter) << ',' << static_cast<double>(lam) << ',' << p.rho_c_hat << ','
             << static_cast<double>(p.rho_r_hat + lam * p.rho_c_hat) << ',' << s.policy_id << '\n';
        out << line.str();
    }
}

} // namespace camdp
