#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "test_util.hpp"
#include "vrpd/delegation.hpp"
#include "vrpd/gen.hpp"
#include "vrpd/selectors.hpp"

using namespace vrpd;

namespace {

struct Fixture {
    Instance inst;
    Solution sol;
    std::vector<Centroid> centroids;
    std::vector<SubproblemRef> candidates;

    Fixture(int n, uint64_t seed, int k) {
        inst = gen_uniform(n, seed);
        RngStream rng(seed, 0xF1);
        sol = testutil::random_feasible(inst, rng);
        centroids = route_centroids(inst, sol);
        candidates = construct_subproblems(inst, sol, k, centroids);
    }
};

SubsolverBudget steps(long n) {
    SubsolverBudget b;
    b.max_steps = n;
    return b;
}

}  // namespace

TEST_CASE("select_random: uniform over unmasked, never masked, exhaustion") {
    Fixture fx(60, 3, 3);
    SelectionState state(fx.inst.n());
    RngStream rng(1, 0x5);

    // single unmasked candidate -> that candidate
    for (size_t i = 1; i < fx.candidates.size(); ++i) state.mask.insert(fx.candidates[i].signature);
    for (int t = 0; t < 20; ++t) {
        auto r = select_random(fx.candidates, state, rng);
        CHECK(r.candidate_index == 0);
    }

    // all masked -> exhaustion
    state.mask.insert(fx.candidates[0].signature);
    CHECK(select_random(fx.candidates, state, rng).exhausted());

    // chi^2 uniformity over 10 candidates at alpha = 0.01
    Fixture fx10(200, 7, 2);
    REQUIRE(fx10.candidates.size() >= 10);
    std::vector<SubproblemRef> ten(fx10.candidates.begin(), fx10.candidates.begin() + 10);
    SelectionState fresh(fx10.inst.n());
    std::vector<long> counts(10, 0);
    const long draws = 100000;
    for (long t = 0; t < draws; ++t) {
        auto r = select_random(ten, fresh, rng);
        ++counts[static_cast<size_t>(r.candidate_index)];
    }
    double chi2 = 0.0;
    double expect = draws / 10.0;
    for (long c : counts) chi2 += (c - expect) * (c - expect) / expect;
    CHECK(chi2 < 21.666);  // chi^2_{9, 0.99}
}

TEST_CASE("select_count_based: tie-break, disjoint preference, replay oracle") {
    Fixture fx(80, 11, 2);
    SelectionState state(fx.inst.n());

    auto first = select_count_based(fx.candidates, fx.sol, state);
    CHECK(fx.candidates[static_cast<size_t>(first.candidate_index)].center_route == 0);

    // after recording candidate A, any disjoint candidate outranks it
    const SubproblemRef& a = fx.candidates[static_cast<size_t>(first.candidate_index)];
    state.record_selection(fx.sol, a, fx.centroids[static_cast<size_t>(a.center_route)]);
    auto second = select_count_based(fx.candidates, fx.sol, state);
    const SubproblemRef& b = fx.candidates[static_cast<size_t>(second.candidate_index)];
    auto a_cities = member_cities(fx.sol, a);
    for (int c : fx.sol.routes[static_cast<size_t>(b.center_route)].cities) {
        CHECK(!std::binary_search(a_cities.begin(), a_cities.end(), c));
    }

    // 50-step replay against an independent recount
    SelectionState replay(fx.inst.n());
    std::vector<long> shadow_counts(static_cast<size_t>(fx.inst.n()) + 1, 0);
    RngStream rng(5, 0x51);
    for (int stepi = 0; stepi < 50; ++stepi) {
        auto r = select_count_based(fx.candidates, fx.sol, replay);
        REQUIRE_FALSE(r.exhausted());
        // oracle: recompute the argmin over center-route city counts
        int best = -1;
        long best_count = 0;
        for (size_t i = 0; i < fx.candidates.size(); ++i) {
            long cnt = 0;
            for (int c : fx.sol.routes[static_cast<size_t>(fx.candidates[i].center_route)].cities) {
                cnt += shadow_counts[static_cast<size_t>(c)];
            }
            if (best < 0 || cnt < best_count) {
                best = static_cast<int>(i);
                best_count = cnt;
            }
        }
        CHECK(r.candidate_index == best);
        const SubproblemRef& sel = fx.candidates[static_cast<size_t>(r.candidate_index)];
        replay.record_selection(fx.sol, sel, fx.centroids[static_cast<size_t>(sel.center_route)]);
        for (int rid : sel.member_routes) {
            for (int c : fx.sol.routes[static_cast<size_t>(rid)].cities) {
                ++shadow_counts[static_cast<size_t>(c)];
            }
        }
        (void)rng;
    }
}

TEST_CASE("select_maxmin: first pick, geometry, replay oracle") {
    Fixture fx(80, 13, 2);
    SelectionState state(fx.inst.n());
    auto first = select_maxmin(fx.candidates, fx.centroids, state);
    CHECK(fx.candidates[static_cast<size_t>(first.candidate_index)].center_route == 0);

    // synthetic geometry: history at (0,0); centroids at (0.1,0) and (0.9,0)
    Instance tiny = gen_uniform(2, 1);
    tiny.cities[0] = City{0.1, 0.0, 1, 0, 0, 0, 0};
    tiny.cities[1] = City{0.9, 0.0, 1, 0, 0, 0, 0};
    Solution tsol;
    tsol.routes = {Route{{1}}, Route{{2}}};
    auto tcents = route_centroids(tiny, tsol);
    auto tcands = construct_subproblems(tiny, tsol, 1, tcents);
    SelectionState tstate(tiny.n());
    tstate.history.push_back(Centroid{0.0, 0.0});
    auto pick = select_maxmin(tcands, tcents, tstate);
    CHECK(tcands[static_cast<size_t>(pick.candidate_index)].center_route == 1);

    // 30-step replay against a brute-force O(H * R) recomputation
    SelectionState replay(fx.inst.n());
    std::vector<Centroid> shadow_history;
    for (int stepi = 0; stepi < 30; ++stepi) {
        auto r = select_maxmin(fx.candidates, fx.centroids, replay);
        REQUIRE_FALSE(r.exhausted());
        int best = -1;
        double best_d = -1.0;
        for (size_t i = 0; i < fx.candidates.size(); ++i) {
            const Centroid& c = fx.centroids[static_cast<size_t>(fx.candidates[i].center_route)];
            double min_d = 1e300;
            for (const Centroid& h : shadow_history) {
                min_d = std::min(min_d, std::sqrt((c.x - h.x) * (c.x - h.x) + (c.y - h.y) * (c.y - h.y)));
            }
            if (shadow_history.empty()) min_d = 0.0;
            if (best < 0 || min_d > best_d) {
                best = static_cast<int>(i);
                best_d = min_d;
            }
        }
        CHECK(r.candidate_index == best);
        const SubproblemRef& sel = fx.candidates[static_cast<size_t>(r.candidate_index)];
        replay.record_selection(fx.sol, sel, fx.centroids[static_cast<size_t>(sel.center_route)]);
        shadow_history.push_back(fx.centroids[static_cast<size_t>(sel.center_route)]);
    }
}

TEST_CASE("select_learned: constant model reduces to argmax incumbent, cache works") {
    Fixture fx(100, 17, 3);
    RegressionModel constant = make_model(ModelKind::Linear, ArchConfig{}, 1);
    for (double& w : constant.params[0].v) w = 0.0;
    constant.params[1].v[0] = 0.0;
    constant.target = {0.0, 1.0};  // predicts 0 for everything

    SelectionState state(fx.inst.n());
    auto pick = select_learned(fx.candidates, fx.inst, fx.sol, state, constant);
    int expect = 0;
    for (size_t i = 1; i < fx.candidates.size(); ++i) {
        if (fx.candidates[i].incumbent_cost >
            fx.candidates[static_cast<size_t>(expect)].incumbent_cost) {
            expect = static_cast<int>(i);
        }
    }
    CHECK(pick.candidate_index == expect);
    CHECK(state.pred_misses == static_cast<long>(fx.candidates.size()));
    CHECK(state.pred_hits == 0);

    // second pass: all predictions served from cache
    auto again = select_learned(fx.candidates, fx.inst, fx.sol, state, constant);
    CHECK(again.candidate_index == pick.candidate_index);
    CHECK(state.pred_hits == static_cast<long>(fx.candidates.size()));
}

TEST_CASE("select_learned matches a no-cache full re-scoring pass") {
    Fixture fx(120, 23, 4);
    RegressionModel model = make_model(ModelKind::Mlp, ArchConfig{}, 99);
    model.target = {2.0, 1.5};

    SelectionState cached(fx.inst.n());
    auto with_cache = select_learned(fx.candidates, fx.inst, fx.sol, cached, model);
    // warm cache, pick again
    auto warm = select_learned(fx.candidates, fx.inst, fx.sol, cached, model);

    int best = -1;
    double best_score = 0.0;
    for (size_t i = 0; i < fx.candidates.size(); ++i) {
        double s = fx.candidates[i].incumbent_cost -
                   model.predict(candidate_example(fx.inst, fx.sol, fx.candidates[i]));
        if (best < 0 || s > best_score) {
            best = static_cast<int>(i);
            best_score = s;
        }
    }
    CHECK(with_cache.candidate_index == best);
    CHECK(warm.candidate_index == best);
}

TEST_CASE("select_learned argmax is invariant to common positive scaling") {
    Fixture fx(90, 31, 3);
    RegressionModel model = make_model(ModelKind::Linear, ArchConfig{}, 4);
    model.target = {1.0, 0.5};

    SelectionState s1(fx.inst.n());
    auto base = select_learned(fx.candidates, fx.inst, fx.sol, s1, model);

    // scale both the incumbent costs and the predictions by the same factor
    const double scale = 7.25;
    std::vector<SubproblemRef> scaled = fx.candidates;
    for (SubproblemRef& ref : scaled) ref.incumbent_cost *= scale;
    RegressionModel scaled_model = model;
    scaled_model.target.mean *= scale;
    scaled_model.target.stdev *= scale;
    SelectionState s2(fx.inst.n());
    auto after = select_learned(scaled, fx.inst, fx.sol, s2, scaled_model);
    CHECK(after.candidate_index == base.candidate_index);
}

TEST_CASE("select_oracle labels every unmasked candidate and picks argmax delta") {
    Fixture fx(60, 41, 3);
    SelectionState state(fx.inst.n());
    SubsolverConfig cfg;
    std::vector<OracleLabel> labels;
    auto pick = select_oracle(fx.candidates, fx.inst, fx.sol, state, cfg, steps(2000), 9, 1, &labels);
    REQUIRE_FALSE(pick.exhausted());
    CHECK(labels.size() == fx.candidates.size());

    double best_delta = -1e300;
    for (const OracleLabel& lab : labels) {
        double delta = fx.candidates[static_cast<size_t>(lab.candidate_index)].incumbent_cost -
                       lab.sub_cost;
        best_delta = std::max(best_delta, delta);
        CHECK_FALSE(lab.from_cache);  // first enumeration solves everything
    }
    const SubproblemRef& sel = fx.candidates[static_cast<size_t>(pick.candidate_index)];
    double sel_delta = sel.incumbent_cost - state.sub_cache.at(sel.signature).cost;
    CHECK(sel_delta == doctest::Approx(best_delta));
    CHECK(state.solver_calls == static_cast<long>(fx.candidates.size()));

    // unchanged candidates come from the cache on re-enumeration
    std::vector<OracleLabel> again;
    auto pick2 = select_oracle(fx.candidates, fx.inst, fx.sol, state, cfg, steps(2000), 9, 1, &again);
    CHECK(pick2.candidate_index == pick.candidate_index);
    for (const OracleLabel& lab : again) CHECK(lab.from_cache);
    CHECK(state.solver_calls == static_cast<long>(fx.candidates.size()));  // no new solves

    // cached labels equal a fresh no-cache enumeration
    SelectionState fresh(fx.inst.n());
    std::vector<OracleLabel> nocache;
    auto pick3 = select_oracle(fx.candidates, fx.inst, fx.sol, fresh, cfg, steps(2000), 9, 1, &nocache);
    CHECK(pick3.candidate_index == pick.candidate_index);
    REQUIRE(nocache.size() == again.size());
    for (size_t i = 0; i < nocache.size(); ++i) {
        CHECK(nocache[i].sub_cost == again[i].sub_cost);  // bit-equal re-solve
    }
}

TEST_CASE("all selectors emit the exhaustion signal identically") {
    Fixture fx(30, 51, 2);
    SelectionState state(fx.inst.n());
    for (const SubproblemRef& ref : fx.candidates) state.mask.insert(ref.signature);
    RngStream rng(1, 2);
    RegressionModel model = make_model(ModelKind::Linear, ArchConfig{}, 1);
    SubsolverConfig cfg;
    CHECK(select_random(fx.candidates, state, rng).exhausted());
    CHECK(select_count_based(fx.candidates, fx.sol, state).exhausted());
    CHECK(select_maxmin(fx.candidates, fx.centroids, state).exhausted());
    CHECK(select_learned(fx.candidates, fx.inst, fx.sol, state, model).exhausted());
    CHECK(select_oracle(fx.candidates, fx.inst, fx.sol, state, cfg, steps(10), 1, 1, nullptr)
              .exhausted());
}
