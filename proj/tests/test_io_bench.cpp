#include <doctest.h>

#include <sstream>

#include "camdp/bench.hpp"
#include "camdp/instances.hpp"
#include "camdp/io.hpp"
#include "camdp/structure.hpp"

using namespace camdp;

TEST_CASE("instance JSON round-trips exactly") {
    Cmdp m = random_binding_instance(3, 2, 21);
    const Cmdp back = instance_from_json(Json::parse(instance_to_json(m).dump()));
    CHECK(back.kernel == m.kernel);
    CHECK(back.reward == m.reward);
    CHECK(back.constraint == m.constraint);
    CHECK(back.start == m.start);
    CHECK(back.threshold == m.threshold);
}

TEST_CASE("malformed instances are rejected") {
    Json j = instance_to_json(random_instance(2, 2, 1));
    Json missing = j;
    missing.erase("kernel");
    CHECK_THROWS_AS(instance_from_json(missing), FormatError);
    Json shape = j;
    shape["reward"] = Json::array({Json::array({0.1, 0.2})});
    CHECK_THROWS_AS(instance_from_json(shape), FormatError);
    Json prob = j;
    prob["kernel"][0][0][0] = 2.0;
    CHECK_THROWS_AS(instance_from_json(prob), ArgumentError);
    Json text = j;
    text["threshold"] = "high";
    CHECK_THROWS_AS(instance_from_json(text), FormatError);
    CHECK_THROWS_AS(read_instance("/nonexistent/file.json"), FormatError);
}

TEST_CASE("empirical model and LP solution serialize") {
    const Cmdp m = random_instance(2, 2, 3);
    const auto e = build_empirical_model(m, 10, 4);
    const Json j = empirical_to_json(e, m);
    CHECK(j["samples_per_pair"] == 10);
    CHECK(j["counts"][1][1].size() == 2);
    const Json s = solution_to_json(solve_camdp_lp(m));
    CHECK(s["status"] == "optimal");
    CHECK(s.contains("lambda"));
}

TEST_CASE("key = value config") {
    const auto c = KeyValueConfig::parse("# sweep\nmode = strict\nepsilon = 0.1, 0.2\nsamples=1e3,2000\nseeds = 0..2, 7\n");
    CHECK(c.get("mode") == "strict");
    CHECK(c.doubles("epsilon") == std::vector<double>{0.1, 0.2});
    CHECK(c.ints("samples") == std::vector<std::int64_t>{1000, 2000});
    CHECK(parse_seed_list(c.get("seeds")) == std::vector<std::uint64_t>{0, 1, 2, 7});
    CHECK_THROWS_AS(KeyValueConfig::parse("novalue\n"), FormatError);
    CHECK_THROWS_AS(KeyValueConfig::parse("a = 1\na = 2\n"), FormatError);
    CHECK_THROWS_AS(parse_int("1.5", "x"), FormatError);
    CHECK_THROWS_AS(parse_double("abc", "x"), FormatError);
    CHECK_THROWS_AS(parse_seed_list("3..1"), FormatError);
}

TEST_CASE("shortest round-trip number formatting") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, 0.0})
        CHECK(parse_double(format_double(v), "v") == v);
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("sweep settings validation") {
    SweepSpec s;
    CHECK_THROWS_AS(s.validate(), ArgumentError);
    s.epsilons = {0.1};
    s.samples = {10};
    s.seeds = {0};
    CHECK_NOTHROW(s.validate());
    s.epsilons = {1.5};
    CHECK_THROWS_AS(s.validate(), ArgumentError);
    s.epsilons = {0.1};
    s.samples = {0};
    CHECK_THROWS_AS(s.validate(), ArgumentError);
}

TEST_CASE("vacuous constraint: zero violation and exact sample accounting") {
    Cmdp m = random_instance(3, 2, 8);
    m.constraint.setOnes();
    m.threshold = 0.0;
    const auto p = structural_params(m);
    SolveSettings s;
    s.epsilon = 0.2;
    s.N = 200;
    s.seed = 1;
    const SolveReport r = run_cell(m, p, s);
    CHECK(r.violation == 0.0);
    CHECK(r.total_samples == 200 * 3 * 2);
    CHECK(r.gap <= 0.2);
    CHECK(r.status == "ok");
}

TEST_CASE("strict mode without a Slater margin is infeasible") {
    Cmdp m = random_instance(2, 2, 9);
    m.threshold = 2.0;
    StructuralParams<double> p;
    p.zeta = -1;
    SolveSettings s;
    s.mode = ScheduleMode::strict;
    CHECK(run_cell(m, p, s).status == "infeasible");
    s.mode = ScheduleMode::relaxed;
    CHECK(run_cell(m, p, s).status == "infeasible");
}

TEST_CASE("sweep output does not depend on the worker count") {
    const Cmdp m = read_instance(std::string(CAMDP_DATA_DIR) + "/bench4.json");
    const auto p = structural_params(m);
    SweepSpec spec;
    spec.epsilons = {0.2, 0.5};
    spec.samples = {64, 512};
    spec.seeds = {0, 1, 2};
    std::string csv[2];
    for (unsigned w : {1u, 3u}) {
        spec.workers = w;
        std::ostringstream out;
        write_sweep_csv(run_sweep(spec, m, p), out);
        csv[w == 3] = out.str();
    }
    CHECK(csv[0] == csv[1]);
    CHECK(csv[0].rfind(std::string(kSweepCsvHeader) + "\n", 0) == 0);
    CHECK(std::count(csv[0].begin(), csv[0].end(), '\n') == 13);
}

TEST_CASE("median and log-log slope") {
    CHECK(median({3, 1, 2}) == 2);
    CHECK(median({4, 1, 2, 3}) == 2.5);
    std::vector<double> x, y;
    for (int k = 0; k < 6; ++k) {
        x.push_back(std::pow(2.0, k));
        y.push_back(3.0 / std::sqrt(x.back()));
    }
    CHECK(loglog_slope(x, y) == doctest::Approx(-0.5));
    CHECK_THROWS_AS(loglog_slope({1}, {1}), ArgumentError);
}
