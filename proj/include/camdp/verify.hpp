#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace camdp {

/// One named invariant with its aggregated outcome.
struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct SuiteReport {
    std::string suite;
    std::vector<CheckResult> checks;
    double seconds = 0;

    bool pass() const;
    /// First failing check, or empty.
    std::string first_failure() const;
};

/// Names accepted by run_suite.
std::vector<std::string> suite_names();

/// Throws ArgumentError on an unknown name.
SuiteReport run_suite(const std::string& name);

/// Gain and bias identities on seeded instances (S <= 6, A <= 4), `policies` policies each.
SuiteReport verify_core_identities(int instances = 100, int policies = 5, std::uint64_t seed = 1);

/// Strong duality and the two dual-optimum bounds over `seeds` instances.
SuiteReport verify_duality(int seeds = 50);

/// Exact-planner primal-dual runs with a known dual optimum; checks the
/// mixture guarantees and the dual-regret bound at lambda in {0, U}.
SuiteReport verify_known_dual(int runs = 50, double eps_opt = 0.05);

/// verify_known_dual on 20 runs plus the literal-versus-accelerated cross-check.
SuiteReport verify_regret();

/// Lower-bound fixtures of both hard families.
SuiteReport verify_hard_instances();

/// Schedule identities and argument checking.
SuiteReport verify_schedules();

} // namespace camdp
