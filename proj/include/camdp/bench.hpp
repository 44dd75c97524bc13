#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "camdp/io.hpp"
#include "camdp/primal_dual.hpp"
#include "camdp/types.hpp"

namespace camdp {

struct SolveSettings {
    ScheduleMode mode = ScheduleMode::relaxed;
    double epsilon = 0.2;
    std::int64_t N = 1000;
    std::uint64_t seed = 0;
    EngineOptions engine;
    bool timing = false;
    std::optional<double> lambda_bar;
    StrictConstants strict;
};

/// Outcome of one cell. gap and violation are measured on the true model.
struct SolveReport {
    std::string mode;
    double epsilon = 0;
    std::int64_t N = 0;
    std::uint64_t seed = 0;
    std::int64_t total_samples = 0;
    double rho_hat = 0;
    double rho_star = 0;
    double gap = 0;
    double constraint_value = 0;
    double violation = 0;
    IterCount T = 0;
    double wall_ms = 0;
    /// ok | unmet | truncated | infeasible | error
    std::string status = "error";
    std::string message;
    double threshold = 0;
    double b_prime = 0;
    std::uint64_t planner_calls = 0;
    std::size_t mixture_size = 0;

    /// Relaxed mode allows a violation up to epsilon; strict mode allows none.
    bool objective_met() const { return status == "ok"; }
};

Json report_to_json(const SolveReport& r);

/// Schedule for the given mode and structural parameters (throws on invalid input).
PrimalDualConfig schedule_for(const SolveSettings& s, const StructuralParams<double>& p, double threshold);

/// One solve from sampling to true-model evaluation.
SolveReport run_cell(const Cmdp& m, const StructuralParams<double>& p, const SolveSettings& s);

struct SweepSpec {
    std::string instance;
    ScheduleMode mode = ScheduleMode::relaxed;
    std::vector<double> epsilons;
    std::vector<std::int64_t> samples;
    std::vector<std::uint64_t> seeds;
    std::string out;
    unsigned workers = 0;  // 0 = hardware concurrency
    bool timing = false;
    std::uint64_t max_work = 10'000'000;

    void validate() const;
    static SweepSpec from_config(const KeyValueConfig& c);
};

/// Parses "3", "0..49" and comma lists of both.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// Runs every (epsilon, N, seed) cell on a worker pool; rows sorted by (epsilon, N, seed).
std::vector<SolveReport> run_sweep(const SweepSpec& spec, const Cmdp& m, const StructuralParams<double>& p);

inline constexpr const char* kSweepCsvHeader =
    "mode,epsilon,N,seed,total_samples,rho_hat,rho_star,gap,constraint_value,violation,T,wall_ms,status";

void write_sweep_csv(const std::vector<SolveReport>& rows, std::ostream& out);

/// Median of a sample (average of the middle pair for even sizes).
double median(std::vector<double> v);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace camdp
