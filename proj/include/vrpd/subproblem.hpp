#pragma once

#include <cstdint>
#include <vector>

#include "vrpd/core.hpp"

namespace vrpd {

// A subproblem materialized as a standalone instance over a city subset.
// Local city index i (1-based) maps back to parent index orig_index[i-1].
struct SubproblemView {
    Instance sub;
    std::vector<int> orig_index;

    int n() const { return sub.n(); }
};

// Builds the view for a set of parent city indices; cities appear in
// ascending parent-index order so equal city sets yield identical views.
SubproblemView make_view(const Instance& parent, const std::vector<int>& city_indices);

// Maps a solution on the view back to parent city indices.
Solution map_back(const SubproblemView& view, const Solution& sub_sol);

struct Centroid {
    double x = 0.0;
    double y = 0.0;
};

// Arithmetic mean of member-city coordinates, depot excluded.
std::vector<Centroid> route_centroids(const Instance& inst, const Solution& sol);
Centroid route_centroid(const Instance& inst, const Route& route);

// One candidate per route: the k routes whose centroids are nearest to the
// center route's centroid (center included at distance 0).
struct SubproblemRef {
    int center_route = -1;
    std::vector<int> member_routes;  // sorted route ids
    uint64_t signature = 0;          // order-independent hash of the city set
    double incumbent_cost = 0.0;     // c(X_S): sum of member route costs
};

// Order-independent signature of a city set.
uint64_t city_set_signature(const std::vector<int>& cities);

// Sorted union of the member routes' cities.
std::vector<int> member_cities(const Solution& sol, const SubproblemRef& ref);

// Candidates before dedup number exactly R; duplicates (identical city-set
// signatures) keep the lowest center route id. Centroids may be passed in
// when the caller maintains them incrementally.
std::vector<SubproblemRef> construct_subproblems_raw(const Instance& inst, const Solution& sol,
                                                     int k, const std::vector<Centroid>& centroids);
std::vector<SubproblemRef> construct_subproblems(const Instance& inst, const Solution& sol, int k);
std::vector<SubproblemRef> construct_subproblems(const Instance& inst, const Solution& sol, int k,
                                                 const std::vector<Centroid>& centroids);

}  // namespace vrpd
