#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "vrpd/json_io.hpp"
#include "vrpd/metrics.hpp"

using namespace vrpd;

namespace {

RunTrace staircase(const std::string& instance, const std::string& method, uint64_t seed,
                   double init, std::vector<std::pair<double, double>> events) {
    RunTrace t;
    t.instance_id = instance;
    t.method_id = method;
    t.seed = seed;
    t.events.push_back(TraceEvent{0.0, init, 0, false, "init"});
    int step = 1;
    for (auto& [time, cost] : events) {
        t.events.push_back(TraceEvent{time, cost, step++, true, method});
    }
    return t;
}

}  // namespace

TEST_CASE("cost_at piecewise reconstruction") {
    RunTrace t = staircase("i", "m", 1, 100.0, {{1.0, 90.0}, {2.5, 85.0}, {4.0, 80.0}});
    CHECK(cost_at(t, 0.0) == 100.0);
    CHECK(cost_at(t, 0.999) == 100.0);
    CHECK(cost_at(t, 1.0) == 90.0);
    CHECK(cost_at(t, 3.0) == 85.0);
    CHECK(cost_at(t, 100.0) == 80.0);  // beyond the last event
    CHECK_THROWS_AS(cost_at(t, -1.0), std::invalid_argument);

    // replay oracle: scan events directly
    for (double probe : {0.0, 0.5, 1.0, 1.5, 2.5, 3.9, 4.0, 9.0}) {
        double expect = 100.0;
        for (const TraceEvent& e : t.events) {
            if (e.t <= probe) expect = e.cost;
        }
        CHECK(cost_at(t, probe) == expect);
    }
}

TEST_CASE("improvement_over identities") {
    RunTrace x = staircase("i", "x", 1, 100.0, {{1.0, 90.0}, {3.0, 80.0}});
    RunTrace y = staircase("i", "y", 1, 100.0, {{0.5, 88.0}, {2.0, 78.0}});
    CHECK(improvement_over(x, x, 2.0) == 0.0);
    CHECK(improvement_over(y, x, 1.5) == doctest::Approx(90.0 - 88.0));
    CHECK(improvement_over(y, x, 2.5) == doctest::Approx(90.0 - 78.0));
    // antisymmetry on a grid
    for (double t : {0.0, 0.5, 1.0, 2.0, 3.0, 5.0}) {
        CHECK(improvement_over(y, x, t) == doctest::Approx(-improvement_over(x, y, t)));
    }
    RunTrace other = staircase("j", "x", 1, 100.0, {{1.0, 90.0}});
    CHECK_THROWS_AS(improvement_over(other, x, 1.0), std::invalid_argument);
    RunTrace bad_init = staircase("i", "x", 1, 105.0, {{1.0, 90.0}});
    CHECK_THROWS_AS(improvement_over(bad_init, x, 1.0), std::invalid_argument);
}

TEST_CASE("quality_at_fraction arithmetic") {
    RunTrace t = staircase("i", "m", 1, 100.0, {{1.0, 80.0}});
    CHECK(*quality_at_fraction(t, 1.0) == doctest::Approx(80.0));
    CHECK(*quality_at_fraction(t, 0.95) == doctest::Approx(81.0));
    // thresholds are monotone in q
    double prev = 1e300;
    for (double q = 0.05; q <= 1.0; q += 0.05) {
        double thr = *quality_at_fraction(t, q);
        CHECK(thr <= prev + 1e-12);
        prev = thr;
    }
    RunTrace flat = staircase("i", "m", 1, 100.0, {});
    CHECK_FALSE(quality_at_fraction(flat, 0.95).has_value());
    CHECK_THROWS_AS(quality_at_fraction(t, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(quality_at_fraction(t, 1.5), std::invalid_argument);
}

TEST_CASE("speedup_at hand-computed staircases") {
    // X improves to 80 at t=100; its 0.95 threshold is 81, crossed at t=100
    RunTrace x = staircase("i", "x", 1, 100.0, {{50.0, 82.0}, {100.0, 80.0}});
    // Y crosses 81 at t=20
    RunTrace y = staircase("i", "y", 1, 100.0, {{20.0, 80.5}});
    CHECK(*speedup_at(y, x, 0.95) == doctest::Approx(5.0));
    CHECK(*speedup_at(x, x, 0.95) == doctest::Approx(1.0));

    // Y never reaches the threshold -> undefined, not infinity
    RunTrace z = staircase("i", "z", 1, 100.0, {{10.0, 92.0}});
    CHECK_FALSE(speedup_at(z, x, 0.95).has_value());

    // exact crossing at q = 1: the threshold is X's own final cost
    CHECK(*speedup_at(x, x, 1.0) == doctest::Approx(1.0));
    // Y's final (80.5) never reaches X's final (80.0)
    CHECK_FALSE(speedup_at(y, x, 1.0).has_value());
}

TEST_CASE("report emits deterministic csv and svg") {
    std::vector<RunTrace> traces;
    for (uint64_t seed = 1; seed <= 3; ++seed) {
        traces.push_back(staircase("a", "random", seed, 100.0,
                                   {{10.0 + static_cast<double>(seed), 90.0}, {40.0, 85.0}}));
        traces.push_back(staircase("a", "learned", seed, 100.0,
                                   {{5.0, 89.0}, {20.0 + static_cast<double>(seed), 84.0}}));
        traces.push_back(staircase("b", "random", seed, 60.0, {{8.0, 50.0}, {30.0, 45.0}}));
        traces.push_back(staircase("b", "learned", seed, 60.0, {{4.0, 49.0}, {15.0, 44.0}}));
    }
    ReportConfig cfg;
    cfg.reference_method = "random";
    std::string dir = "/tmp/vrpd_test_report";
    std::filesystem::remove_all(dir);
    write_report(traces, cfg, dir);

    std::string imp1 = read_file(dir + "/improvement.csv");
    std::string sp1 = read_file(dir + "/speedup.csv");
    std::string svg1 = read_file(dir + "/improvement.svg");
    std::string sum1 = read_file(dir + "/summary.csv");
    CHECK(imp1.rfind("method,t,mean_improvement,stderr,n\n", 0) == 0);
    CHECK(sp1.rfind("method,q,geomean_speedup,se_log,n\n", 0) == 0);
    CHECK(imp1.find("learned") != std::string::npos);
    CHECK(svg1.find("<svg") != std::string::npos);
    CHECK(sum1.find("learned") != std::string::npos);

    // identical methods overlap: Y = X gives speedup exactly 1, stderr 0
    size_t pos = sp1.find("\nrandom,");
    REQUIRE(pos != std::string::npos);
    std::string row = sp1.substr(pos + 1, sp1.find('\n', pos + 1) - pos - 1);
    CHECK(row.find(",1,0,") != std::string::npos);

    write_report(traces, cfg, dir);  // byte-identical on rerun
    CHECK(read_file(dir + "/improvement.csv") == imp1);
    CHECK(read_file(dir + "/speedup.csv") == sp1);
    CHECK(read_file(dir + "/improvement.svg") == svg1);
    CHECK(read_file(dir + "/summary.csv") == sum1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("report row counts follow the grid x method schema") {
    std::vector<RunTrace> traces;
    traces.push_back(staircase("a", "x", 1, 100.0, {{10.0, 90.0}}));
    traces.push_back(staircase("a", "y", 1, 100.0, {{5.0, 90.0}}));
    ReportConfig cfg;
    cfg.reference_method = "x";
    cfg.time_grid = 10;
    std::string dir = "/tmp/vrpd_test_report2";
    std::filesystem::remove_all(dir);
    write_report(traces, cfg, dir);
    std::string imp = read_file(dir + "/improvement.csv");
    size_t rows = 0;
    for (char c : imp) rows += c == '\n' ? 1 : 0;
    CHECK(rows == 1 + 11);  // header + (grid + 1) points for the one non-reference method
    std::filesystem::remove_all(dir);
}
