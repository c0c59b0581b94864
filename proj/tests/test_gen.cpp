#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "vrpd/core.hpp"
#include "vrpd/gen.hpp"
#include "vrpd/json_io.hpp"
#include "vrpd/rng.hpp"

using namespace vrpd;

TEST_CASE("gen_uniform basics and determinism") {
    Instance a = gen_uniform(200, 5);
    CHECK(a.capacity == 50);
    CHECK(a.n() == 200);
    for (const City& c : a.cities) {
        CHECK(c.x >= 0.0);
        CHECK(c.x <= 1.0);
        CHECK(c.y >= 0.0);
        CHECK(c.y <= 1.0);
        CHECK(c.demand >= 1);
        CHECK(c.demand <= 9);
        CHECK(c.pickup == 0);
    }
    Instance b = gen_uniform(200, 5);
    CHECK(instance_to_json(a) == instance_to_json(b));
    Instance c = gen_uniform(200, 6);
    CHECK(instance_to_json(a) != instance_to_json(c));
}

TEST_CASE("uniform demand mean over 1e5 draws") {
    double sum = 0.0;
    long n = 0;
    for (uint64_t s = 0; s < 100; ++s) {
        Instance inst = gen_uniform(1000, 1000 + s);
        for (const City& c : inst.cities) {
            sum += c.demand;
            ++n;
        }
    }
    CHECK(n == 100000);
    CHECK(std::fabs(sum / static_cast<double>(n) - 5.0) < 0.05);
}

TEST_CASE("clustered centroids, clipping, and noise spread") {
    double acc = 0.0;
    long n_acc = 0;
    for (uint64_t s = 0; s < 200; ++s) {
        ClusterInfo info;
        Instance inst = gen_clustered(500, 4, 2000 + s, &info);
        REQUIRE(info.centroids.size() == 4);
        for (auto& [cx, cy] : info.centroids) {
            CHECK(cx >= 0.2);
            CHECK(cx <= 0.8);
            CHECK(cy >= 0.2);
            CHECK(cy <= 0.8);
        }
        for (const City& c : inst.cities) {
            CHECK(c.x >= 0.0);
            CHECK(c.x <= 1.0);
            CHECK(c.y >= 0.0);
            CHECK(c.y <= 1.0);
        }
        // measure the noise std on centroids far enough from the box edge
        // that clipping is a > 4 sigma event
        for (size_t i = 0; i < inst.cities.size(); ++i) {
            int a = info.assignment[i];
            REQUIRE(a >= 0);
            auto [cx, cy] = info.centroids[static_cast<size_t>(a)];
            if (cx < 0.3 || cx > 0.7 || cy < 0.3 || cy > 0.7) continue;
            double dx = inst.cities[i].x - cx;
            double dy = inst.cities[i].y - cy;
            acc += dx * dx + dy * dy;
            n_acc += 2;
        }
    }
    REQUIRE(n_acc > 20000);
    double sigma = std::sqrt(acc / static_cast<double>(n_acc));
    CHECK(std::fabs(sigma - 0.07) < 0.005);
}

TEST_CASE("mixed split counts") {
    ClusterInfo info;
    Instance odd = gen_mixed(101, 3, 9, &info);
    CHECK(odd.n() == 101);
    int uniform_cnt = 0, clustered_cnt = 0;
    for (int a : info.assignment) (a < 0 ? uniform_cnt : clustered_cnt)++;
    CHECK(uniform_cnt == 51);   // ceil(101/2)
    CHECK(clustered_cnt == 50); // floor(101/2)
    CHECK(odd.capacity == 50);
}

TEST_CASE("cvrptw windows and solo feasibility") {
    int checked = 0;
    for (uint64_t s = 0; s < 10; ++s) {
        Instance inst = gen_cvrptw(1000, 37 + s);
        CHECK(inst.depot.tw_early == 0.0);
        CHECK(inst.depot.tw_late == 3.0);
        for (int i = 1; i <= inst.n(); ++i) {
            const City& c = inst.city(i);
            CHECK(c.service == 0.2);
            CHECK(c.tw_early >= inst.depot.tw_early);
            CHECK(c.tw_early <= c.tw_late);
            CHECK(c.tw_late <= inst.depot.tw_late);
            CHECK(validate_route(inst, Route{{i}}).ok);
            ++checked;
        }
    }
    CHECK(checked == 10000);
}

TEST_CASE("vrpmpd capacity, split, and load mean") {
    double load_sum = 0.0;
    long loads = 0;
    for (uint64_t s = 0; s < 100; ++s) {
        Instance inst = gen_vrpmpd(1000, 555 + s);
        CHECK(inst.capacity == 25);
        int pickups = 0;
        for (const City& c : inst.cities) {
            bool has_pickup = c.pickup > 0;
            bool has_delivery = c.demand > 0;
            CHECK(has_pickup != has_delivery);  // exactly one positive
            if (has_pickup) ++pickups;
            load_sum += c.pickup + c.demand;
            ++loads;
        }
        CHECK(pickups == 500);
    }
    CHECK(std::fabs(load_sum / static_cast<double>(loads) - 5.0) < 0.05);

    Instance odd = gen_vrpmpd(101, 3);
    int pickups = 0;
    for (const City& c : odd.cities) {
        if (c.pickup > 0) ++pickups;
    }
    CHECK(pickups == 50);  // floor(101/2)
}

TEST_CASE("subsample keeps cities unique and preserves depot") {
    Instance base = gen_clustered(300, 5, 77);
    Instance sub = subsample(base, 120, 4);
    CHECK(sub.n() == 120);
    CHECK(sub.capacity == 50);
    CHECK(sub.variant == Variant::CVRP);
    CHECK(sub.depot.x == base.depot.x);
    CHECK(sub.depot.y == base.depot.y);
    std::set<std::pair<double, double>> originals;
    for (const City& c : base.cities) originals.insert({c.x, c.y});
    std::set<std::pair<double, double>> seen;
    for (const City& c : sub.cities) {
        CHECK(originals.count({c.x, c.y}) == 1);
        CHECK(seen.insert({c.x, c.y}).second);  // no duplicates
        CHECK(c.demand >= 1);
        CHECK(c.demand <= 9);
    }

    Instance same_n = subsample(base, base.n(), 4);
    std::set<std::pair<double, double>> all;
    for (const City& c : same_n.cities) all.insert({c.x, c.y});
    CHECK(all == originals);

    CHECK_THROWS_AS(subsample(base, base.n() + 1, 4), std::invalid_argument);
}

TEST_CASE("subsample inclusion frequency is uniform") {
    Instance base = gen_uniform(40, 123);
    const int trials = 10000;
    const int target = 10;
    std::vector<int> included(41, 0);
    for (int t = 0; t < trials; ++t) {
        Instance sub = subsample(base, target, 9000 + static_cast<uint64_t>(t));
        for (const City& c : sub.cities) {
            for (int i = 1; i <= base.n(); ++i) {
                if (base.city(i).x == c.x && base.city(i).y == c.y) {
                    ++included[static_cast<size_t>(i)];
                    break;
                }
            }
        }
    }
    double p = static_cast<double>(target) / 40.0;
    double sigma = std::sqrt(p * (1 - p) * trials);
    for (int i = 1; i <= 40; ++i) {
        CHECK(std::fabs(included[static_cast<size_t>(i)] - p * trials) <= 3.0 * sigma);
    }
}

TEST_CASE("generated instances pass structural invariants") {
    for (uint64_t s = 0; s < 20; ++s) {
        for (Instance inst : {gen_uniform(50, s), gen_clustered(50, 3, s), gen_mixed(50, 3, s),
                              gen_cvrptw(50, s), gen_vrpmpd(50, s)}) {
            CHECK(inst.n() == 50);
            CHECK(inst.capacity > 0);
            std::string j = instance_to_json(inst);
            Instance back = instance_from_json(j);
            CHECK(instance_to_json(back) == j);
        }
    }
}
