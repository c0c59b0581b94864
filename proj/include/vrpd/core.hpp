#pragma once

#include <string>
#include <utility>
#include <vector>

namespace vrpd {

enum class Variant { CVRP, CVRPTW, VRPMPD };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& s);

struct City {
    double x = 0.0;
    double y = 0.0;
    int demand = 0;   // delivery units
    int pickup = 0;   // pickup units (VRPMPD only)
    double tw_early = 0.0;
    double tw_late = 0.0;
    double service = 0.0;
};

struct Depot {
    double x = 0.0;
    double y = 0.0;
    double tw_early = 0.0;
    double tw_late = 0.0;
};

// Node 0 is the depot, cities are indexed 1..N.
struct Instance {
    Variant variant = Variant::CVRP;
    Depot depot;
    int capacity = 0;
    std::vector<City> cities;

    int n() const { return static_cast<int>(cities.size()); }
    const City& city(int idx) const { return cities[static_cast<size_t>(idx - 1)]; }
};

// Depot is implicit at both ends; indices are 1..N, never 0, never repeated.
struct Route {
    std::vector<int> cities;

    bool empty() const { return cities.empty(); }
    size_t size() const { return cities.size(); }
};

struct Solution {
    std::vector<Route> routes;
    double cost = 0.0;  // cached; all verdicts recompute from structure
};

enum class ViolationKind {
    None,
    Structure,       // empty route, bad index, repeated city
    Capacity,        // CVRP/CVRPTW demand sum exceeds C
    TimeWindow,      // arrival after tw_late
    DepotReturn,     // return to depot after l_0
    LoadBound,       // VRPMPD load leaves [0, C]
    CoverageMissing,
    CoverageDuplicate,
};

// Route positions in `position` are 1-based visit order; 0 marks the state
// before the first visit (VRPMPD initial load), -1 means not applicable.
struct Verdict {
    bool ok = true;
    ViolationKind kind = ViolationKind::None;
    int route_id = -1;
    int position = -1;
    std::string detail;

    static Verdict pass() { return Verdict{}; }
    static Verdict fail(ViolationKind k, int route, int pos, std::string d) {
        return Verdict{false, k, route, pos, std::move(d)};
    }
    explicit operator bool() const { return ok; }
};

double edge_cost(const Instance& inst, int i, int j);
double route_cost(const Instance& inst, const Route& route);
double solution_cost(const Instance& inst, const Solution& sol);

Verdict validate_route(const Instance& inst, const Route& route, int route_id = -1);
Verdict validate_solution(const Instance& inst, const Solution& sol);

// CVRPTW only: (arrival b_i, departure b_i + s_i) per visit. Times are
// reported even when a window is violated; validate_route judges feasibility.
std::vector<std::pair<double, double>> arrival_times(const Instance& inst, const Route& route);

// VRPMPD only: load before the first visit followed by the load after each
// visit; length is route.size() + 1.
std::vector<int> load_profile(const Instance& inst, const Route& route);

// Improvement classification tolerance for cost comparisons.
inline constexpr double kCostTolerance = 1e-9;

}  // namespace vrpd
