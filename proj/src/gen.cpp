#include "vrpd/gen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vrpd/rng.hpp"

namespace vrpd {

namespace {

// One stream per entity so that adding a field never perturbs existing draws.
enum Stream : uint64_t {
    kDepot = 1,
    kCoords = 2,
    kDemand = 3,
    kCentroids = 4,
    kClusterPick = 5,
    kClusterNoise = 6,
    kWindowCenter = 7,
    kWindowWidth = 8,
    kPickupAssign = 9,
    kPickupLoad = 10,
    kSubsample = 11,
};

constexpr int kUniformCapacity = 50;
constexpr int kMpdCapacity = 25;

Depot draw_depot(uint64_t seed) {
    RngStream rng(seed, kDepot);
    double x = rng.next_double();
    double y = rng.next_double();
    return Depot{x, y, 0.0, 0.0};
}

void draw_demands(Instance& inst, uint64_t seed) {
    RngStream rng(seed, kDemand);
    for (City& c : inst.cities) c.demand = rng.next_int(1, 9);
}

}  // namespace

Instance gen_uniform(int n, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gen_uniform: n must be >= 1");
    Instance inst;
    inst.variant = Variant::CVRP;
    inst.capacity = kUniformCapacity;
    inst.depot = draw_depot(seed);
    RngStream coords(seed, kCoords);
    inst.cities.resize(static_cast<size_t>(n));
    for (City& c : inst.cities) {
        c.x = coords.next_double();
        c.y = coords.next_double();
    }
    draw_demands(inst, seed);
    return inst;
}

namespace {

// Shared by clustered and mixed: n_uniform cities from U([0,1]^2) followed by
// n_clustered cities around U([0.2,0.8]^2) centroids with isotropic normal
// noise sigma=0.07, clipped into the unit box.
Instance gen_cluster_family(int n_uniform, int n_clustered, int n_clusters, uint64_t seed,
                            ClusterInfo* info) {
    if (n_clusters < 1) throw std::invalid_argument("cluster count must be >= 1");
    Instance inst;
    inst.variant = Variant::CVRP;
    inst.capacity = kUniformCapacity;
    inst.depot = draw_depot(seed);

    std::vector<std::pair<double, double>> centroids;
    RngStream crng(seed, kCentroids);
    for (int i = 0; i < n_clusters; ++i) {
        double cx = 0.2 + 0.6 * crng.next_double();
        double cy = 0.2 + 0.6 * crng.next_double();
        centroids.emplace_back(cx, cy);
    }

    RngStream coords(seed, kCoords);
    RngStream pick(seed, kClusterPick);
    RngStream noise(seed, kClusterNoise);
    std::vector<int> assignment;
    for (int i = 0; i < n_uniform; ++i) {
        City c;
        c.x = coords.next_double();
        c.y = coords.next_double();
        inst.cities.push_back(c);
        assignment.push_back(-1);
    }
    for (int i = 0; i < n_clustered; ++i) {
        int a = static_cast<int>(pick.next_bounded(static_cast<uint64_t>(n_clusters)));
        City c;
        c.x = std::clamp(noise.next_normal(centroids[static_cast<size_t>(a)].first, 0.07), 0.0, 1.0);
        c.y = std::clamp(noise.next_normal(centroids[static_cast<size_t>(a)].second, 0.07), 0.0, 1.0);
        inst.cities.push_back(c);
        assignment.push_back(a);
    }
    draw_demands(inst, seed);
    if (info) {
        info->centroids = std::move(centroids);
        info->assignment = std::move(assignment);
    }
    return inst;
}

}  // namespace

Instance gen_clustered(int n, int n_clusters, uint64_t seed, ClusterInfo* info) {
    if (n < 1) throw std::invalid_argument("gen_clustered: n must be >= 1");
    return gen_cluster_family(0, n, n_clusters, seed, info);
}

Instance gen_mixed(int n, int n_clusters, uint64_t seed, ClusterInfo* info) {
    if (n < 1) throw std::invalid_argument("gen_mixed: n must be >= 1");
    int n_uniform = (n + 1) / 2;
    return gen_cluster_family(n_uniform, n - n_uniform, n_clusters, seed, info);
}

Instance gen_cvrptw(int n, uint64_t seed) {
    Instance inst = gen_uniform(n, seed);
    inst.variant = Variant::CVRPTW;
    inst.depot.tw_early = 0.0;
    inst.depot.tw_late = 3.0;
    const double service = 0.2;
    RngStream coords(seed, kCoords);
    // gen_uniform already consumed the coordinate draws; resampling below
    // continues the same stream so resampled locations stay deterministic.
    for (int i = 0; i < 2 * n; ++i) coords.next_u64();
    RngStream center(seed, kWindowCenter);
    RngStream width(seed, kWindowWidth);
    for (City& c : inst.cities) {
        c.service = service;
        while (true) {
            double t0 = std::sqrt((c.x - inst.depot.x) * (c.x - inst.depot.x) +
                                  (c.y - inst.depot.y) * (c.y - inst.depot.y));
            double lo = inst.depot.tw_early + t0;
            double hi = inst.depot.tw_late - t0 - service;
            if (lo <= hi) {
                double ci = lo + (hi - lo) * center.next_double();
                double hw = 0.1 + 0.9 * width.next_double();
                c.tw_early = std::max(inst.depot.tw_early, ci - hw);
                c.tw_late = std::min(inst.depot.tw_late, ci + hw);
                break;
            }
            // City too far for any window: resample its location.
            c.x = coords.next_double();
            c.y = coords.next_double();
        }
    }
    return inst;
}

Instance gen_vrpmpd(int n, uint64_t seed) {
    if (n < 2) throw std::invalid_argument("gen_vrpmpd: n must be >= 2");
    Instance inst = gen_uniform(n, seed);
    inst.variant = Variant::VRPMPD;
    inst.capacity = kMpdCapacity;
    // floor(n/2) cities get pickups, chosen by partial Fisher-Yates.
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    RngStream assign(seed, kPickupAssign);
    int n_pickup = n / 2;
    for (int i = 0; i < n_pickup; ++i) {
        int j = i + static_cast<int>(assign.next_bounded(static_cast<uint64_t>(n - i)));
        std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    RngStream load(seed, kPickupLoad);
    for (int i = 0; i < n_pickup; ++i) {
        City& c = inst.cities[static_cast<size_t>(order[static_cast<size_t>(i)])];
        c.pickup = load.next_int(1, 9);
        c.demand = 0;
    }
    return inst;
}

Instance subsample(const Instance& inst, int n_target, uint64_t seed) {
    if (n_target < 1 || n_target > inst.n()) {
        throw std::invalid_argument("subsample: n_target must be in [1, N]");
    }
    std::vector<int> order(static_cast<size_t>(inst.n()));
    for (int i = 0; i < inst.n(); ++i) order[static_cast<size_t>(i)] = i + 1;
    RngStream rng(seed, kSubsample);
    for (int i = 0; i < n_target; ++i) {
        int j = i + static_cast<int>(rng.next_bounded(static_cast<uint64_t>(inst.n() - i)));
        std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    std::vector<int> chosen(order.begin(), order.begin() + n_target);
    std::sort(chosen.begin(), chosen.end());

    Instance out;
    out.variant = Variant::CVRP;
    out.capacity = kUniformCapacity;
    out.depot = inst.depot;
    out.depot.tw_early = out.depot.tw_late = 0.0;
    RngStream demand(seed, kDemand);
    for (int idx : chosen) {
        City c;
        c.x = inst.city(idx).x;
        c.y = inst.city(idx).y;
        c.demand = demand.next_int(1, 9);
        out.cities.push_back(c);
    }
    return out;
}

}  // namespace vrpd
