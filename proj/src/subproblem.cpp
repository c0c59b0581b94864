#include "vrpd/subproblem.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "vrpd/rng.hpp"

namespace vrpd {

SubproblemView make_view(const Instance& parent, const std::vector<int>& city_indices) {
    if (city_indices.empty()) throw std::invalid_argument("make_view: empty city set");
    SubproblemView view;
    view.orig_index = city_indices;
    std::sort(view.orig_index.begin(), view.orig_index.end());
    for (size_t i = 1; i < view.orig_index.size(); ++i) {
        if (view.orig_index[i] == view.orig_index[i - 1]) {
            throw std::invalid_argument("make_view: duplicate city index");
        }
    }
    view.sub.variant = parent.variant;
    view.sub.depot = parent.depot;
    view.sub.capacity = parent.capacity;
    for (int idx : view.orig_index) view.sub.cities.push_back(parent.city(idx));
    return view;
}

Solution map_back(const SubproblemView& view, const Solution& sub_sol) {
    Solution out;
    for (const Route& r : sub_sol.routes) {
        Route mapped;
        for (int local : r.cities) {
            if (local < 1 || local > view.n()) {
                throw std::out_of_range("map_back: local city index out of range");
            }
            mapped.cities.push_back(view.orig_index[static_cast<size_t>(local - 1)]);
        }
        out.routes.push_back(std::move(mapped));
    }
    out.cost = sub_sol.cost;
    return out;
}

Centroid route_centroid(const Instance& inst, const Route& route) {
    if (route.empty()) throw std::invalid_argument("route_centroid: empty route");
    double sx = 0.0, sy = 0.0;
    for (int c : route.cities) {
        sx += inst.city(c).x;
        sy += inst.city(c).y;
    }
    double inv = 1.0 / static_cast<double>(route.cities.size());
    return Centroid{sx * inv, sy * inv};
}

std::vector<Centroid> route_centroids(const Instance& inst, const Solution& sol) {
    std::vector<Centroid> out;
    out.reserve(sol.routes.size());
    for (const Route& r : sol.routes) out.push_back(route_centroid(inst, r));
    return out;
}

uint64_t city_set_signature(const std::vector<int>& cities) {
    uint64_t sig = 0;
    for (int c : cities) sig += mix64(static_cast<uint64_t>(c) + 0x51ED2701ULL);
    return sig;
}

std::vector<int> member_cities(const Solution& sol, const SubproblemRef& ref) {
    std::vector<int> cities;
    for (int r : ref.member_routes) {
        const Route& route = sol.routes[static_cast<size_t>(r)];
        cities.insert(cities.end(), route.cities.begin(), route.cities.end());
    }
    std::sort(cities.begin(), cities.end());
    return cities;
}

std::vector<SubproblemRef> construct_subproblems(const Instance& inst, const Solution& sol, int k) {
    return construct_subproblems(inst, sol, k, route_centroids(inst, sol));
}

std::vector<SubproblemRef> construct_subproblems_raw(const Instance& inst, const Solution& sol,
                                                     int k, const std::vector<Centroid>& centroids) {
    if (k < 1) throw std::invalid_argument("construct_subproblems: k must be >= 1");
    int n_routes = static_cast<int>(sol.routes.size());
    if (centroids.size() != sol.routes.size()) {
        throw std::invalid_argument("construct_subproblems: centroid count mismatch");
    }
    std::vector<double> route_costs(sol.routes.size());
    for (size_t r = 0; r < sol.routes.size(); ++r) route_costs[r] = route_cost(inst, sol.routes[r]);

    std::vector<SubproblemRef> refs;
    refs.reserve(sol.routes.size());
    std::vector<std::pair<double, int>> dist(sol.routes.size());
    for (int center = 0; center < n_routes; ++center) {
        for (int r = 0; r < n_routes; ++r) {
            double dx = centroids[static_cast<size_t>(r)].x - centroids[static_cast<size_t>(center)].x;
            double dy = centroids[static_cast<size_t>(r)].y - centroids[static_cast<size_t>(center)].y;
            dist[static_cast<size_t>(r)] = {dx * dx + dy * dy, r};
        }
        int take = std::min(k, n_routes);
        std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
        SubproblemRef ref;
        ref.center_route = center;
        for (int i = 0; i < take; ++i) ref.member_routes.push_back(dist[static_cast<size_t>(i)].second);
        std::sort(ref.member_routes.begin(), ref.member_routes.end());
        for (int r : ref.member_routes) ref.incumbent_cost += route_costs[static_cast<size_t>(r)];
        ref.signature = city_set_signature(member_cities(sol, ref));
        refs.push_back(std::move(ref));
    }
    return refs;
}

std::vector<SubproblemRef> construct_subproblems(const Instance& inst, const Solution& sol, int k,
                                                 const std::vector<Centroid>& centroids) {
    std::vector<SubproblemRef> refs = construct_subproblems_raw(inst, sol, k, centroids);
    // Distinct centers can induce identical city sets; keep the lowest id.
    std::unordered_map<uint64_t, int> first_seen;
    std::vector<SubproblemRef> dedup;
    dedup.reserve(refs.size());
    for (SubproblemRef& ref : refs) {
        if (first_seen.emplace(ref.signature, ref.center_route).second) {
            dedup.push_back(std::move(ref));
        }
    }
    return dedup;
}

}  // namespace vrpd
