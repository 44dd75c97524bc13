#include "camdp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include "camdp/chain.hpp"
#include "camdp/generative.hpp"
#include "camdp/oracle.hpp"

namespace camdp {

Json report_to_json(const SolveReport& r) {
    Json j;
    j["mode"] = r.mode;
    j["epsilon"] = r.epsilon;
    j["N"] = r.N;
    j["seed"] = r.seed;
    j["total_samples"] = r.total_samples;
    j["rho_hat"] = r.rho_hat;
    j["rho_star"] = r.rho_star;
    j["gap"] = r.gap;
    j["constraint_value"] = r.constraint_value;
    j["violation"] = r.violation;
    j["T"] = count_to_string(r.T);
    j["wall_ms"] = r.wall_ms;
    j["status"] = r.status;
    j["objective_met"] = r.objective_met();
    j["threshold"] = r.threshold;
    j["b_prime"] = r.b_prime;
    j["planner_calls"] = r.planner_calls;
    j["mixture_size"] = r.mixture_size;
    if (!r.message.empty()) j["message"] = r.message;
    return j;
}

PrimalDualConfig schedule_for(const SolveSettings& s, const StructuralParams<double>& p, double threshold) {
    PrimalDualConfig cfg;
    switch (s.mode) {
    case ScheduleMode::relaxed:
        cfg = relaxed_schedule(s.epsilon, p.B, p.H, threshold, s.lambda_bar);
        break;
    case ScheduleMode::strict:
        cfg = strict_schedule(s.epsilon, p.B, p.H, p.zeta, threshold, s.strict, s.lambda_bar);
        break;
    case ScheduleMode::manual:
        throw ArgumentError("manual mode has no schedule; build the configuration directly");
    }
    cfg.seed = s.seed;
    return cfg;
}

SolveReport run_cell(const Cmdp& m, const StructuralParams<double>& p, const SolveSettings& s) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    SolveReport r;
    r.mode = to_string(s.mode);
    r.epsilon = s.epsilon;
    r.N = s.N;
    r.seed = s.seed;
    r.threshold = m.threshold;
    auto finish = [&] {
        if (s.timing)
            r.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        return r;
    };

    if (s.mode == ScheduleMode::strict && !(p.zeta > 0)) {
        r.status = "infeasible";
        r.message = "strict mode needs a positive Slater constant";
        return finish();
    }
    const auto star = solve_camdp_lp(m);
    if (star.status != LpStatus::optimal) {
        r.status = "infeasible";
        r.message = "the constraint cannot be met on the true model";
        return finish();
    }
    r.rho_star = star.objective;

    const PrimalDualConfig cfg = schedule_for(s, p, m.threshold);
    r.T = cfg.T;
    r.b_prime = cfg.b_prime;
    const EmpiricalModel e = build_empirical_model(m, s.N, s.seed);
    r.total_samples = e.total_samples();
    const PerturbedReward rp = perturb_rewards(m.reward, cfg.omega, s.seed);
    const PrimalDualResult res = run_primal_dual(e, rp, m.constraint, m.start, cfg, s.engine);
    r.planner_calls = res.planner_calls;
    r.mixture_size = res.mixture.members.size();

    r.rho_hat = mixture_value(res.mixture, m, RewardKind::reward);
    r.constraint_value = mixture_value(res.mixture, m, RewardKind::constraint);
    r.gap = r.rho_star - r.rho_hat;
    r.violation = std::max(0.0, m.threshold - r.constraint_value);
    if (res.status == RunStatus::truncated) {
        r.status = "truncated";
    } else {
        const bool feasible = s.mode == ScheduleMode::strict ? r.violation == 0.0 : r.violation <= s.epsilon;
        r.status = (feasible && r.gap <= s.epsilon) ? "ok" : "unmet";
    }
    return finish();
}

void SweepSpec::validate() const {
    if (epsilons.empty() || samples.empty() || seeds.empty()) throw ArgumentError("sweep lists must be non-empty");
    for (double e : epsilons)
        if (!(e > 0 && e <= 1)) throw ArgumentError("sweep epsilon must lie in (0, 1]");
    for (auto n : samples)
        if (n < 1) throw ArgumentError("sweep sample counts must be at least 1");
    if (mode == ScheduleMode::manual) throw ArgumentError("sweep mode must be relaxed or strict");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        std::string item = text.substr(pos, comma - pos);
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty()) throw FormatError("empty seed entry");
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(static_cast<std::uint64_t>(parse_int(item, "seeds")));
        } else {
            const auto lo = parse_int(item.substr(0, dots), "seeds");
            const auto hi = parse_int(item.substr(dots + 2), "seeds");
            if (lo < 0 || hi < lo) throw FormatError("bad seed range '" + item + "'");
            for (auto v = lo; v <= hi; ++v) out.push_back(static_cast<std::uint64_t>(v));
        }
        pos = comma + 1;
    }
    return out;
}

SweepSpec SweepSpec::from_config(const KeyValueConfig& c) {
    SweepSpec s;
    s.instance = c.get("instance", "");
    s.mode = parse_schedule_mode(c.get("mode", "relaxed"));
    s.epsilons = c.doubles("epsilon");
    for (auto n : c.ints("samples")) s.samples.push_back(n);
    s.seeds = parse_seed_list(c.get("seeds"));
    s.out = c.get("out", "");
    if (c.has("workers")) s.workers = static_cast<unsigned>(parse_int(c.get("workers"), "workers"));
    if (c.has("max_work")) s.max_work = static_cast<std::uint64_t>(parse_int(c.get("max_work"), "max_work"));
    if (c.has("timing")) s.timing = c.get("timing") == "true" || c.get("timing") == "1";
    s.validate();
    return s;
}

std::vector<SolveReport> run_sweep(const SweepSpec& spec, const Cmdp& m, const StructuralParams<double>& p) {
    spec.validate();
    std::vector<SolveSettings> cells;
    for (double e : spec.epsilons)
        for (auto n : spec.samples)
            for (auto seed : spec.seeds) {
                SolveSettings s;
                s.mode = spec.mode;
                s.epsilon = e;
                s.N = n;
                s.seed = seed;
                s.timing = spec.timing;
                s.engine.max_work = spec.max_work;
                s.engine.max_trace_segments = 0;
                cells.push_back(s);
            }
    std::vector<SolveReport> rows(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                rows[i] = run_cell(m, p, cells[i]);
            } catch (const std::exception& ex) {
                SolveReport r;
                r.mode = to_string(cells[i].mode);
                r.epsilon = cells[i].epsilon;
                r.N = cells[i].N;
                r.seed = cells[i].seed;
                r.threshold = m.threshold;
                r.status = "error";
                r.message = ex.what();
                rows[i] = r;
            }
        }
    };
    unsigned n_workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
    n_workers = static_cast<unsigned>(std::min<std::size_t>(n_workers, cells.size()));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    std::sort(rows.begin(), rows.end(), [](const SolveReport& a, const SolveReport& b) {
        return std::tie(a.epsilon, a.N, a.seed) < std::tie(b.epsilon, b.N, b.seed);
    });
    return rows;
}

void write_sweep_csv(const std::vector<SolveReport>& rows, std::ostream& out) {
    out << kSweepCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.mode << ',' << format_double(r.epsilon) << ',' << r.N << ',' << r.seed << ',' << r.total_samples << ','
            << format_double(r.rho_hat) << ',' << format_double(r.rho_star) << ',' << format_double(r.gap) << ','
            << format_double(r.constraint_value) << ',' << format_double(r.violation) << ',' << count_to_string(r.T)
            << ',' << format_double(r.wall_ms) << ',' << r.status << '\n';
    }
}

double median(std::vector<double> v) {
    if (v.empty()) throw ArgumentError("median of an empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("slope needs at least two paired points");
    double mx = 0, my = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0 && y[i] > 0)) throw ArgumentError("log-log slope needs positive data");
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0) throw ArgumentError("slope needs distinct x values");
    return sxy / sxx;
}

} // namespace camdp
