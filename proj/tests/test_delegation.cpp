#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "test_util.hpp"
#include "vrpd/datagen.hpp"
#include "vrpd/delegation.hpp"
#include "vrpd/gen.hpp"
#include "vrpd/init.hpp"
#include "vrpd/metrics.hpp"

using namespace vrpd;

namespace {

SubsolverBudget steps(long n) {
    SubsolverBudget b;
    b.max_steps = n;
    return b;
}

StopCriteria stop_after(long t) {
    StopCriteria s;
    s.max_steps = t;
    return s;
}

}  // namespace

TEST_CASE("run with T=0 returns the initial solution unchanged") {
    Instance inst = gen_uniform(50, 3);
    Solution init = initialize(inst, 50, 10, 3);
    Selector sel;
    RunResult res = run(inst, init, sel, SubsolverConfig{}, 3, steps(1000), stop_after(0), 1);
    CHECK(res.solution.cost == init.cost);
    CHECK(res.trace.events.size() == 1);  // only the initialization event
    CHECK(res.trace.events[0].cost == doctest::Approx(init.cost));
}

TEST_CASE("hill climbing: rejected steps mask, accepted steps splice") {
    Instance inst = gen_uniform(120, 7);
    Solution init = initialize(inst, 20, 10, 7);
    SelectionState state(inst.n());
    std::vector<Centroid> centroids = route_centroids(inst, init);
    RngStream rng(1, 0x5E1EC7);
    Selector sel;
    sel.kind = SelectorKind::Random;

    Solution cur = init;
    int accepted = 0, rejected = 0;
    for (int i = 1; i <= 60; ++i) {
        StepRecord rec;
        Solution next = delegate_step(inst, cur, state, sel, SubsolverConfig{}, 4, steps(3000), 7,
                                      i, centroids, rng, rec, nullptr);
        if (rec.exhausted) break;
        CHECK(validate_solution(inst, next).ok);
        if (rec.accepted) {
            ++accepted;
            CHECK(rec.delta > 0.0);
            // splice arithmetic: new cost = old cost - delta
            CHECK(next.cost == doctest::Approx(cur.cost - rec.delta).epsilon(1e-9));
        } else {
            ++rejected;
            CHECK(next.cost == cur.cost);
            CHECK(state.masked(rec.selected.signature));
        }
        // centroid cache stays consistent with a fresh recomputation
        auto fresh = route_centroids(inst, next);
        REQUIRE(centroids.size() == fresh.size());
        for (size_t r = 0; r < fresh.size(); ++r) {
            CHECK(centroids[r].x == doctest::Approx(fresh[r].x).epsilon(1e-12));
            CHECK(centroids[r].y == doctest::Approx(fresh[r].y).epsilon(1e-12));
        }
        cur = next;
    }
    CHECK(accepted > 0);
    CHECK(rejected >= 0);
}

TEST_CASE("subsolver returning the incumbent routes is rejected and masked") {
    // a pre-converged instance: re-solving with the same budget cannot improve
    Instance inst = gen_uniform(12, 9);
    std::vector<int> all(12);
    for (int i = 0; i < 12; ++i) all[static_cast<size_t>(i)] = i + 1;
    SubproblemView view = make_view(inst, all);
    Solution opt = solve_builtin(view, steps(2000000), 2);
    Solution mapped = map_back(view, opt);
    mapped.cost = solution_cost(inst, mapped);

    SelectionState state(inst.n());
    auto centroids = route_centroids(inst, mapped);
    RngStream rng(1, 0x5E1EC7);
    Selector sel;
    StepRecord rec;
    // k >= route count makes the single candidate the whole problem, and the
    // candidate seed is signature-derived, so the re-solve is identical
    Solution next = delegate_step(inst, mapped, state, sel, SubsolverConfig{}, 1000, steps(2000000),
                                  2, 1, centroids, rng, rec, nullptr);
    CHECK_FALSE(rec.accepted);
    CHECK(rec.delta <= kCostTolerance);
    CHECK(next.cost == mapped.cost);
    CHECK(state.mask.size() == 1);
}

TEST_CASE("all-masked termination on a tiny pre-optimized instance") {
    Instance inst = gen_uniform(10, 31);
    Solution init = initialize(inst, 1000000, 1, 5);
    Selector sel;
    sel.kind = SelectorKind::Random;
    RunResult res = run(inst, init, sel, SubsolverConfig{}, 1000, steps(1000000), stop_after(100), 5);
    // every candidate is eventually masked, far before 100 steps
    CHECK(res.trace.events.back().step < 100);
    CHECK(res.solution.cost <= init.cost + 1e-12);
}

TEST_CASE("run traces are monotone and final <= initial across selectors and variants") {
    for (SelectorKind kind : {SelectorKind::Random, SelectorKind::Count, SelectorKind::MaxMin}) {
        for (int v = 0; v < 3; ++v) {
            uint64_t seed = 100 + static_cast<uint64_t>(v) * 10 + static_cast<uint64_t>(kind);
            Instance inst = v == 0   ? gen_uniform(150, seed)
                            : v == 1 ? gen_cvrptw(150, seed)
                                     : gen_vrpmpd(150, seed);
            Solution init = initialize(inst, 50, 10, seed);
            Selector sel;
            sel.kind = kind;
            RunHooks hooks;
            hooks.after_step = [&](const Solution& s, const StepRecord&) {
                CHECK(validate_solution(inst, s).ok);
            };
            RunResult res =
                run(inst, init, sel, SubsolverConfig{}, 3, steps(2000), stop_after(25), seed, &hooks);
            CHECK(validate_solution(inst, res.solution).ok);
            double prev = 1e300;
            for (const TraceEvent& e : res.trace.events) {
                CHECK(e.cost <= prev + 1e-12);
                prev = e.cost;
            }
            CHECK(res.solution.cost <= init.cost + 1e-12);
        }
    }
}

TEST_CASE("selection space size equals route count before dedup") {
    Instance inst = gen_uniform(200, 77);
    RngStream rng(3, 0xF2);
    Solution sol = testutil::random_feasible(inst, rng);
    auto centroids = route_centroids(inst, sol);
    for (int k : {2, 5, 10}) {
        auto raw = construct_subproblems_raw(inst, sol, k, centroids);
        CHECK(raw.size() == sol.routes.size());
    }
}

TEST_CASE("cache soundness: hits equal a fresh re-solve, eviction on membership change") {
    Instance inst = gen_uniform(100, 83);
    Solution init = initialize(inst, 30, 10, 83);
    SelectionState state(inst.n());
    auto centroids = route_centroids(inst, init);
    auto candidates = construct_subproblems(inst, init, 3, centroids);
    SubsolverConfig cfg;

    // solve one candidate twice: second time must be a cache hit with
    // identical routes
    bool cached = false;
    CachedSubsolution a =
        solve_candidate(inst, init, candidates[0], state, cfg, steps(2000), 83, &cached);
    CHECK_FALSE(cached);
    CachedSubsolution b =
        solve_candidate(inst, init, candidates[0], state, cfg, steps(2000), 83, &cached);
    CHECK(cached);
    REQUIRE(a.routes.size() == b.routes.size());
    for (size_t r = 0; r < a.routes.size(); ++r) CHECK(a.routes[r].cities == b.routes[r].cities);

    // fresh state: re-solving from scratch gives the identical result
    SelectionState fresh(inst.n());
    CachedSubsolution c =
        solve_candidate(inst, init, candidates[0], fresh, cfg, steps(2000), 83, nullptr);
    CHECK(c.cost == a.cost);

    // eviction: marking one member city as changed clears the entry
    std::vector<char> changed(static_cast<size_t>(inst.n()) + 1, 0);
    int touched = member_cities(init, candidates[0])[0];
    changed[static_cast<size_t>(touched)] = 1;
    state.invalidate(changed);
    CHECK(state.sub_cache.count(candidates[0].signature) == 0);
}

TEST_CASE("generate_labels: dedup, per-step bound, labels match re-solves") {
    Instance inst = gen_uniform(150, 4);
    Solution init = initialize(inst, 30, 10, 4);
    LabelGenResult res =
        generate_labels(inst, init, "test_inst", 4, SubsolverConfig{}, steps(2000), 6, 4, 1);

    REQUIRE(!res.steps.empty());
    // per-step emitted labels never exceed the route count bound
    for (const LabeledStep& ls : res.steps) {
        CHECK(ls.candidates.size() <= init.routes.size() + 16);  // routes can split, bound loosely
        for (const TrainingExample& ex : ls.candidates) {
            CHECK(ex.target > 0.0);
            CHECK(ex.instance_id == "test_inst");
            CHECK(ex.k == 4);
        }
    }
    // step 2 emits strictly fewer fresh labels than step 1
    if (res.steps.size() >= 2) {
        size_t fresh_step1 = res.steps[0].candidates.size();
        size_t emitted_after = res.examples.size();
        CHECK(fresh_step1 < emitted_after);  // later steps add fewer than another full R
        CHECK(emitted_after < fresh_step1 * res.steps.size());
    }

    // spot re-solve: sampled labels equal re-solving the same signature
    SelectionState fresh(inst.n());
    auto centroids = route_centroids(inst, init);
    auto candidates = construct_subproblems(inst, init, 4, centroids);
    for (size_t i = 0; i < std::min<size_t>(candidates.size(), 10); ++i) {
        CachedSubsolution re =
            solve_candidate(inst, init, candidates[i], fresh, SubsolverConfig{}, steps(2000), 4,
                            nullptr);
        // find the matching step-1 label by center route
        bool found = false;
        for (const TrainingExample& ex : res.steps[0].candidates) {
            if (ex.center_route == candidates[i].center_route) {
                CHECK(ex.target == re.cost);
                found = true;
                break;
            }
        }
        CHECK(found);
    }
}

TEST_CASE("trace jsonl round trip") {
    RunTrace t;
    t.instance_id = "foo";
    t.method_id = "random";
    t.seed = 42;
    t.events.push_back(TraceEvent{0.0, 100.5, 0, false, "init"});
    t.events.push_back(TraceEvent{0.25, 97.25, 1, true, "random"});
    t.events.push_back(TraceEvent{0.5, 97.25, 2, false, "random"});
    std::string path = "/tmp/vrpd_test_trace.jsonl";
    save_trace(path, t);
    RunTrace back = load_trace(path);
    CHECK(back.instance_id == "foo");
    CHECK(back.method_id == "random");
    CHECK(back.seed == 42);
    REQUIRE(back.events.size() == 3);
    CHECK(back.events[1].cost == 97.25);
    CHECK(back.events[1].accepted);
    CHECK(back.events[2].t == 0.5);
    std::remove(path.c_str());
}

TEST_CASE("prediction cache persists for untouched candidates across a step") {
    Instance inst = gen_uniform(200, 91);
    Solution init = initialize(inst, 30, 10, 91);
    RegressionModel model = make_model(ModelKind::Mlp, ArchConfig{}, 7);
    model.target = {3.0, 1.0};

    SelectionState state(inst.n());
    auto centroids = route_centroids(inst, init);
    RngStream rng(1, 0x5E1EC7);
    Selector sel;
    sel.kind = SelectorKind::Learned;
    sel.model = &model;

    StepRecord rec1;
    Solution s1 = delegate_step(inst, init, state, sel, SubsolverConfig{}, 5, steps(3000), 91, 1,
                                centroids, rng, rec1, nullptr);
    long miss_before = state.pred_misses;
    state.pred_hits = 0;
    StepRecord rec2;
    delegate_step(inst, s1, state, sel, SubsolverConfig{}, 5, steps(3000), 91, 2, centroids, rng,
                  rec2, nullptr);
    long r = static_cast<long>(construct_subproblems(inst, s1, 5, centroids).size());
    // at least R - (touched routes * churn) candidates hit the cache; with
    // k = 5 an accepted splice can disturb at most the k member routes'
    // neighborhoods, so demand a nontrivial hit count
    CHECK(state.pred_hits > 0);
    CHECK(state.pred_hits + state.pred_misses - miss_before >= r - state.pred_misses);
}
