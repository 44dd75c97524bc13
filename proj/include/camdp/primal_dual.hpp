#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "camdp/generative.hpp"
#include "camdp/planner.hpp"
#include "camdp/types.hpp"

namespace camdp {

/// Iteration counts reach ~1e24 under the theoretical schedules.
using IterCount = __int128;

std::string count_to_string(IterCount v);
IterCount parse_count(const std::string& s);
/// ceil of a non-negative long double; throws beyond 2^125.
IterCount ceil_count(long double v);

enum class ScheduleMode { relaxed, strict, manual };
const char* to_string(ScheduleMode m);
ScheduleMode parse_schedule_mode(const std::string& s);

struct ProvenanceEntry {
    std::string name;
    long double value = 0;
    std::string rule;
};

struct PrimalDualConfig {
    double U = 1.0;
    double eta = 1.0;
    double eps_net = 0.1;
    double omega = 0.0;
    double b_prime = 0.0;
    double gamma = 0.99;
    double eps_opt = 0.1;
    double planner_tol = 0.0125;
    double lambda_bar = 0.5;
    IterCount T = 1;
    std::uint64_t seed = 0;
    ScheduleMode mode = ScheduleMode::manual;
    std::vector<ProvenanceEntry> provenance;

    void validate() const;
    void note(const std::string& name, long double value, const std::string& rule);
};

/// Constants of the strict schedule: Delta = eps (1-gamma) zeta / delta_divisor,
/// U = u_numerator / (zeta (1-gamma)).
struct StrictConstants {
    double delta_divisor = 40.0;
    double u_numerator = 8.0;
};

/// Relaxed-feasibility schedule: eps_opt = eps/4, b' = b - 3 eps / 8.
PrimalDualConfig relaxed_schedule(double epsilon, double B, double H, double threshold,
                                  std::optional<double> lambda_bar = std::nullopt);

/// Strict-feasibility schedule: b' = b + Delta, eps_opt = Delta / 5.
PrimalDualConfig strict_schedule(double epsilon, double B, double H, double zeta, double threshold,
                                 const StrictConstants& k = {}, std::optional<double> lambda_bar = std::nullopt);

/// Generic schedule for a known dual optimum: T = U^2/eps_opt^2 (1 + 1/(U - lambda*)^2),
/// eps_net = eps_opt^2 (U - lambda*) / (6U), eta = U / sqrt(T).
PrimalDualConfig known_dual_schedule(double eps_opt, double U, double lambda_star, double b_prime);

double project_interval(double x, double U);
/// Nearest point of {0, eps, 2 eps, ...} U {U}; ties go down.
double round_to_net(double x, double eps_net, double U);
double dual_step(double lambda, double eta, double rho_c_hat, double b_prime, double U, double eps_net);

/// The epsilon-net in index space. Indices 0..K are k*eps; `top()` is U
/// (equal to K when U is a multiple of eps, K+1 otherwise).
class DualNet {
public:
    DualNet() = default;
    DualNet(double eps_net, double U);

    IterCount grid_max() const { return K_; }
    IterCount top() const { return top_; }
    long double value(IterCount k) const;
    /// Index of project-then-round applied to value(k) + delta * eps.
    IterCount step(IterCount k, long double delta) const;
    /// Nearest net index to a value in [0, U].
    IterCount index_of(long double lambda) const;
    double eps() const { return eps_; }
    double upper() const { return U_; }

private:
    double eps_ = 1.0;
    double U_ = 1.0;
    IterCount K_ = 1;
    IterCount top_ = 1;
    long double top_frac_ = 0;  // position of U above K, in units of eps
};

/// Primal update as a black box of the dual variable.
class PrimalOracle {
public:
    virtual ~PrimalOracle() = default;
    virtual DeterministicPolicy solve(double lambda) = 0;
};

/// Discounted surrogate on the empirical model with reward (r_p + lambda c)/(1 + lambda).
class DiscountedOracle : public PrimalOracle {
public:
    DiscountedOracle(MatrixXd kernel, MatrixXd r_p, MatrixXd c, double gamma, double tol, bool refine = true);
    DeterministicPolicy solve(double lambda) override;

private:
    MatrixXd kernel_, r_p_, c_;
    double gamma_, tol_;
    PlannerOptions<double> opt_;
};

/// Exact average-reward maximizer over deterministic policies (small models only).
class ExactGainOracle : public PrimalOracle {
public:
    ExactGainOracle(const MatrixXd& kernel, const MatrixXd& r_p, const MatrixXd& c, const VectorXd& start,
                    double cap = 1e6);
    DeterministicPolicy solve(double lambda) override;
    const PolicyGainTable<double>& table() const { return table_; }

private:
    PolicyGainTable<double> table_;
};

/// primal_update: the discounted surrogate at the given dual value.
DeterministicPolicy primal_update(const EmpiricalModel& e, const PerturbedReward& r_p, const MatrixXd& c,
                                  double lambda, double gamma, double tol);

struct DualRecord {
    IterCount iter = 0;
    long double lambda = 0;
    int policy_id = 0;
    double rho_c_hat = 0;
    double rho_combined_hat = 0;
};

/// Iterations first_iter .. first_iter+length-1 at indices start, start+step, ...
struct DualSegment {
    IterCount first_iter = 0;
    IterCount length = 0;
    IterCount start_index = 0;
    std::int64_t index_step = 0;
    int policy_id = 0;
};

struct PolicyTally {
    DeterministicPolicy policy;
    double rho_r_hat = 0;  // empirical start gain under r_p
    double rho_c_hat = 0;  // empirical start gain under c
    IterCount count = 0;
    long double lambda_sum = 0;
};

struct DualTrace {
    DualNet net;
    double b_prime = 0;
    IterCount iterations = 0;
    std::vector<PolicyTally> policies;
    std::vector<DualSegment> segments;
    bool segments_complete = true;

    /// Per-iteration records, expanded from the segments (at most `limit`).
    std::vector<DualRecord> records(std::size_t limit = 1'000'000) const;
    /// Final dual iterate index (after the last step).
    IterCount final_index = 0;
};

enum class RunStatus { complete, truncated };
const char* to_string(RunStatus s);

enum class EngineKind { accelerated, literal };

struct EngineOptions {
    EngineKind kind = EngineKind::accelerated;
    /// Work ceiling on explicitly simulated segments (accelerated) or iterations (literal).
    std::uint64_t max_work = 10'000'000;
    std::size_t max_trace_segments = 100'000;
};

struct PrimalDualResult {
    MixturePolicy<double> mixture;
    DualTrace trace;
    RunStatus status = RunStatus::complete;
    std::uint64_t planner_calls = 0;
    std::uint64_t simulated_segments = 0;
};

PrimalDualResult run_primal_dual(PrimalOracle& oracle, const MatrixXd& kernel_hat, const MatrixXd& r_p,
                                 const MatrixXd& c, const VectorXd& start, const PrimalDualConfig& cfg,
                                 const EngineOptions& opt = {});

/// Algorithm loop with the discounted surrogate planner.
PrimalDualResult run_primal_dual(const EmpiricalModel& e, const PerturbedReward& r_p, const MatrixXd& c,
                                 const VectorXd& start, const PrimalDualConfig& cfg, const EngineOptions& opt = {});

/// sum_t (lambda_t - lambda)(rho_c_hat_t - b'), from the per-policy sums.
long double dual_regret(const DualTrace& trace, double lambda, double b_prime);
/// The same sum taken literally over expanded records.
long double dual_regret(const std::vector<DualRecord>& records, double lambda, double b_prime);
/// T^{3/2} (eps^2 + 2 eps U) / (2U) + U sqrt(T).
long double dual_regret_bound(IterCount T, double eps_net, double U);

/// Columns: iter,lambda,rho_c_hat,rho_combined_hat,policy_id; one row per segment.
void write_trace_csv(const DualTrace& trace, std::ostream& out);

} // namespace camdp
