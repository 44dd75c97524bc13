// camdp command-line front end.
//
// Exit codes: 0 success, 1 malformed input, 2 infeasible instance,
// 3 objective unmet (solve) or failing invariant (verify).

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "camdp/bench.hpp"
#include "camdp/hard_instances.hpp"
#include "camdp/io.hpp"
#include "camdp/oracle.hpp"
#include "camdp/structure.hpp"
#include "camdp/verify.hpp"

namespace {

using namespace camdp;

constexpr int kOk = 0, kMalformed = 1, kInfeasible = 2, kUnmet = 3;

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write '" + path + "'");
    out << text;
}

Json structural_to_json(const StructuralParams<double>& p) {
    return Json{{"H", p.H}, {"B", p.B}, {"D", p.D}, {"zeta", p.zeta}};
}

int cmd_solve(const std::string& instance, const std::string& mode, double epsilon, std::int64_t N,
              std::uint64_t seed, bool timing, std::uint64_t max_work) {
    const Cmdp m = read_instance(instance);
    SolveSettings s;
    s.mode = parse_schedule_mode(mode);
    if (s.mode == ScheduleMode::manual) throw ArgumentError("solve mode must be relaxed or strict");
    if (!(epsilon > 0 && epsilon <= 1)) throw ArgumentError("epsilon must lie in (0, 1]");
    if (N < 1) throw ArgumentError("samples must be at least 1");
    s.epsilon = epsilon;
    s.N = N;
    s.seed = seed;
    s.timing = timing;
    s.engine.max_work = max_work;
    s.engine.max_trace_segments = 0;
    const auto p = structural_params(m);
    const SolveReport r = run_cell(m, p, s);
    Json j = report_to_json(r);
    j["structural"] = structural_to_json(p);
    std::cout << j.dump(2) << '\n';
    if (r.status == "infeasible") return kInfeasible;
    if (r.status == "error") return kMalformed;
    return r.objective_met() ? kOk : kUnmet;
}

int cmd_sweep(SweepSpec spec) {
    spec.validate();
    if (spec.instance.empty()) throw ArgumentError("sweep needs an instance");
    const Cmdp m = read_instance(spec.instance);
    const auto p = structural_params(m);
    const auto rows = run_sweep(spec, m, p);
    std::ostringstream csv;
    write_sweep_csv(rows, csv);
    write_text(spec.out, csv.str());
    std::size_t failed = 0, infeasible = 0;
    for (const auto& r : rows) {
        failed += r.status == "error" || r.status == "infeasible";
        infeasible += r.status == "infeasible";
    }
    if (failed < rows.size()) return kOk;
    return infeasible == rows.size() ? kInfeasible : kMalformed;
}

int cmd_hard_gen(const std::string& params_path, const std::string& out) {
    if (out.empty()) throw ArgumentError("hard-gen needs --out");
    const KeyValueConfig c = KeyValueConfig::read(params_path);
    const std::string family = c.get("family", "general");
    auto num = [&](const char* key, double fallback) {
        return c.has(key) ? parse_double(c.get(key), key) : fallback;
    };
    auto idx = [&](const char* key, Index fallback) {
        return c.has(key) ? static_cast<Index>(parse_int(c.get(key), key)) : fallback;
    };
    Json meta;
    meta["family"] = family;
    Cmdp m;
    if (family == "general") {
        GeneralHardParams p;
        p.S = idx("S", p.S);
        p.A = idx("A", p.A);
        p.B = num("B", p.B);
        p.epsilon = num("epsilon", p.epsilon);
        p.zeta = num("zeta", p.zeta);
        if (c.has("s_star")) p.s_star = idx("s_star", 0);
        p.a_star = idx("a_star", p.a_star);
        m = build_general_master(p);
        meta["params"] = {{"S", p.S},           {"A", p.A},       {"B", p.B},
                          {"epsilon", p.epsilon}, {"zeta", p.zeta}, {"a_star", p.a_star},
                          {"b", p.b}};
        meta["params"]["s_star"] = p.s_star ? Json(*p.s_star) : Json(nullptr);
        const double x = p.epsilon * p.zeta;
        meta["first_order_lp_optimum"] = p.s_star ? 0.25 + p.epsilon / 8 + 3 * x / 8 : 0.25;
    } else if (family == "communicating") {
        CommunicatingHardParams p;
        p.S = idx("S", p.S);
        p.A = idx("A", p.A);
        p.D = num("D", p.D);
        p.epsilon = num("epsilon", p.epsilon);
        p.zeta = num("zeta", p.zeta);
        if (c.has("k")) p.k = idx("k", 0);
        p.l = idx("l", p.l);
        m = build_communicating_hard(p);
        meta["params"] = {{"S", p.S}, {"A", p.A}, {"D", p.D}, {"epsilon", p.epsilon}, {"zeta", p.zeta}, {"l", p.l},
                          {"b", p.b}};
        meta["params"]["k"] = p.k ? Json(*p.k) : Json(nullptr);
        meta["best_effort"] = true;
    } else {
        throw FormatError("unknown family '" + family + "' (expected general or communicating)");
    }
    meta["n_states"] = m.n_states;
    meta["n_actions"] = m.n_actions;
    meta["nominal_zeta"] = meta["params"]["zeta"];
    meta["measured_zeta"] = slater_constant(m);
    const auto sol = solve_camdp_lp(m);
    if (sol.status == LpStatus::optimal) meta["lp_optimum"] = sol.objective;
    write_instance(out, m);
    write_text(out + ".meta.json", meta.dump(2) + "\n");
    return kOk;
}

int cmd_oracle(const std::string& instance, std::optional<double> threshold, bool structural) {
    const Cmdp m = read_instance(instance);
    const auto sol = solve_camdp_lp(m, threshold);
    Json j = solution_to_json(sol);
    j["threshold"] = threshold ? *threshold : m.threshold;
    j["zeta"] = slater_constant(m);
    if (structural) j["structural"] = structural_to_json(structural_params(m));
    std::cout << j.dump(2) << '\n';
    return sol.status == LpStatus::optimal ? kOk : kInfeasible;
}

int cmd_verify(const std::string& suite) {
    const auto names = suite_names();
    if (std::find(names.begin(), names.end(), suite) == names.end()) {
        std::cerr << "unknown suite '" << suite << "'; available:";
        for (const auto& n : names) std::cerr << ' ' << n;
        std::cerr << '\n';
        return kMalformed;
    }
    const SuiteReport r = run_suite(suite);
    for (const auto& c : r.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    std::cout << "suite " << r.suite << ": " << (r.pass() ? "PASS" : "FAIL") << " (" << r.seconds << " s)\n";
    if (!r.pass()) {
        std::cerr << "failing invariant: " << r.first_failure() << '\n';
        return kUnmet;
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constrained average-reward MDP toolkit"};
    app.require_subcommand(1);

    std::string instance, mode = "relaxed", out, suite, params, seeds_text = "0", spec_path;
    double epsilon = 0.2;
    std::string samples_text = "1000";
    std::uint64_t seed = 0, max_work = 10'000'000;
    unsigned workers = 0;
    bool timing = false, with_structural = false;
    std::optional<double> threshold;
    std::vector<double> epsilons;
    std::vector<std::string> sample_list;

    auto* solve = app.add_subcommand("solve", "Sample, plan and evaluate one cell; prints a JSON report");
    solve->add_option("--instance", instance, "Instance JSON")->required();
    solve->add_option("--mode", mode, "relaxed or strict");
    solve->add_option("--epsilon", epsilon, "Target accuracy in (0, 1]");
    solve->add_option("--samples", samples_text, "Samples per state-action pair");
    solve->add_option("--seed", seed, "Seed");
    solve->add_option("--max-work", max_work, "Ceiling on simulated dual segments");
    solve->add_flag("--timing", timing, "Record wall-clock milliseconds");

    auto* sweep = app.add_subcommand("sweep", "Grid of (epsilon, N, seed) cells to CSV");
    sweep->add_option("--params", spec_path, "Sweep settings as key = value text");
    sweep->add_option("--instance", instance, "Instance JSON");
    sweep->add_option("--mode", mode, "relaxed or strict");
    sweep->add_option("--epsilon", epsilons, "Epsilon list")->delimiter(',');
    sweep->add_option("--samples", sample_list, "Samples-per-pair list")->delimiter(',');
    sweep->add_option("--seeds", seeds_text, "Seeds, e.g. 0..49 or 1,2,5");
    sweep->add_option("--out", out, "CSV path (stdout if omitted)");
    sweep->add_option("--workers", workers, "Worker threads (0 = all cores)");
    sweep->add_option("--max-work", max_work, "Ceiling on simulated dual segments per cell");
    sweep->add_flag("--timing", timing, "Record wall-clock milliseconds");

    auto* hard = app.add_subcommand("hard-gen", "Generate a lower-bound instance and metadata sidecar");
    hard->add_option("--params", params, "Generator parameters as key = value text")->required();
    hard->add_option("--out", out, "Instance JSON path; metadata goes to <out>.meta.json")->required();

    auto* oracle = app.add_subcommand("oracle", "Exact occupancy LP solution");
    oracle->add_option("--instance", instance, "Instance JSON")->required();
    oracle->add_option("--threshold", threshold, "Override the constraint threshold");
    oracle->add_flag("--structural", with_structural, "Also report H, B, D and zeta");

    auto* verify = app.add_subcommand("verify", "Run a property suite");
    verify->add_option("--suite,suite", suite, "core-identities | duality | regret | hard-instances | schedules")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kMalformed;
    }

    try {
        if (*solve) return cmd_solve(instance, mode, epsilon, parse_int(samples_text, "samples"), seed, timing, max_work);
        if (*sweep) {
            SweepSpec spec;
            if (!spec_path.empty()) spec = SweepSpec::from_config(KeyValueConfig::read(spec_path));
            // Flags given on the command line override the file.
            if (sweep->count("--instance")) spec.instance = instance;
            if (sweep->count("--mode")) spec.mode = parse_schedule_mode(mode);
            if (sweep->count("--epsilon")) spec.epsilons = epsilons;
            if (sweep->count("--samples")) {
                spec.samples.clear();
                for (const auto& n : sample_list) spec.samples.push_back(parse_int(n, "samples"));
            }
            if (sweep->count("--seeds") || spec.seeds.empty()) spec.seeds = parse_seed_list(seeds_text);
            if (sweep->count("--out")) spec.out = out;
            if (sweep->count("--workers")) spec.workers = workers;
            if (sweep->count("--max-work")) spec.max_work = max_work;
            if (timing) spec.timing = true;
            return cmd_sweep(spec);
        }
        if (*hard) return cmd_hard_gen(params, out);
        if (*oracle) return cmd_oracle(instance, threshold, with_structural);
        if (*verify) return cmd_verify(suite);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kMalformed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kMalformed;
    }
    return kMalformed;
}
