#include "vrpd/core.hpp"

#include <cmath>
#include <stdexcept>

namespace vrpd {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::CVRP: return "cvrp";
        case Variant::CVRPTW: return "cvrptw";
        case Variant::VRPMPD: return "vrpmpd";
    }
    throw std::logic_error("bad variant");
}

Variant variant_from_name(const std::string& s) {
    if (s == "cvrp") return Variant::CVRP;
    if (s == "cvrptw") return Variant::CVRPTW;
    if (s == "vrpmpd") return Variant::VRPMPD;
    throw std::invalid_argument("unknown variant: " + s);
}

namespace {

inline double node_x(const Instance& inst, int i) {
    return i == 0 ? inst.depot.x : inst.city(i).x;
}
inline double node_y(const Instance& inst, int i) {
    return i == 0 ? inst.depot.y : inst.city(i).y;
}

}  // namespace

double edge_cost(const Instance& inst, int i, int j) {
    if (i < 0 || i > inst.n() || j < 0 || j > inst.n()) {
        throw std::out_of_range("edge_cost: node index out of range");
    }
    double dx = node_x(inst, i) - node_x(inst, j);
    double dy = node_y(inst, i) - node_y(inst, j);
    return std::sqrt(dx * dx + dy * dy);
}

double route_cost(const Instance& inst, const Route& route) {
    if (route.empty()) return 0.0;
    double c = edge_cost(inst, 0, route.cities.front());
    for (size_t i = 0; i + 1 < route.cities.size(); ++i) {
        c += edge_cost(inst, route.cities[i], route.cities[i + 1]);
    }
    c += edge_cost(inst, route.cities.back(), 0);
    return c;
}

double solution_cost(const Instance& inst, const Solution& sol) {
    double c = 0.0;
    for (const Route& r : sol.routes) c += route_cost(inst, r);
    return c;
}

namespace {

Verdict check_structure(const Instance& inst, const Route& route, int route_id) {
    if (route.empty()) {
        return Verdict::fail(ViolationKind::Structure, route_id, -1, "empty route");
    }
    std::vector<char> seen(static_cast<size_t>(inst.n()) + 1, 0);
    for (size_t p = 0; p < route.cities.size(); ++p) {
        int c = route.cities[p];
        if (c < 1 || c > inst.n()) {
            return Verdict::fail(ViolationKind::Structure, route_id, static_cast<int>(p + 1),
                                 "city index " + std::to_string(c) + " out of range");
        }
        if (seen[static_cast<size_t>(c)]) {
            return Verdict::fail(ViolationKind::Structure, route_id, static_cast<int>(p + 1),
                                 "city " + std::to_string(c) + " repeated in route");
        }
        seen[static_cast<size_t>(c)] = 1;
    }
    return Verdict::pass();
}

Verdict check_capacity(const Instance& inst, const Route& route, int route_id) {
    long total = 0;
    for (size_t p = 0; p < route.cities.size(); ++p) {
        total += inst.city(route.cities[p]).demand;
        if (total > inst.capacity) {
            return Verdict::fail(ViolationKind::Capacity, route_id, static_cast<int>(p + 1),
                                 "demand sum " + std::to_string(total) + " exceeds capacity " +
                                     std::to_string(inst.capacity));
        }
    }
    return Verdict::pass();
}

Verdict check_time_windows(const Instance& inst, const Route& route, int route_id) {
    auto times = arrival_times(inst, route);
    for (size_t p = 0; p < route.cities.size(); ++p) {
        const City& c = inst.city(route.cities[p]);
        if (times[p].first > c.tw_late) {
            return Verdict::fail(ViolationKind::TimeWindow, route_id, static_cast<int>(p + 1),
                                 "arrival " + std::to_string(times[p].first) + " after window close " +
                                     std::to_string(c.tw_late));
        }
    }
    double back = times.back().second + edge_cost(inst, route.cities.back(), 0);
    if (back > inst.depot.tw_late) {
        return Verdict::fail(ViolationKind::DepotReturn, route_id,
                             static_cast<int>(route.cities.size()),
                             "depot return at " + std::to_string(back) + " after " +
                                 std::to_string(inst.depot.tw_late));
    }
    return Verdict::pass();
}

Verdict check_load(const Instance& inst, const Route& route, int route_id) {
    auto profile = load_profile(inst, route);
    for (size_t p = 0; p < profile.size(); ++p) {
        if (profile[p] < 0 || profile[p] > inst.capacity) {
            return Verdict::fail(ViolationKind::LoadBound, route_id, static_cast<int>(p),
                                 "load " + std::to_string(profile[p]) + " outside [0, " +
                                     std::to_string(inst.capacity) + "]");
        }
    }
    return Verdict::pass();
}

}  // namespace

Verdict validate_route(const Instance& inst, const Route& route, int route_id) {
    if (Verdict v = check_structure(inst, route, route_id); !v) return v;
    switch (inst.variant) {
        case Variant::CVRP:
            return check_capacity(inst, route, route_id);
        case Variant::CVRPTW:
            // Time windows come on top of the base capacity constraint.
            if (Verdict v = check_capacity(inst, route, route_id); !v) return v;
            return check_time_windows(inst, route, route_id);
        case Variant::VRPMPD:
            return check_load(inst, route, route_id);
    }
    throw std::logic_error("bad variant");
}

Verdict validate_solution(const Instance& inst, const Solution& sol) {
    std::vector<int> count(static_cast<size_t>(inst.n()) + 1, 0);
    for (size_t r = 0; r < sol.routes.size(); ++r) {
        for (int c : sol.routes[r].cities) {
            if (c < 1 || c > inst.n()) {
                return Verdict::fail(ViolationKind::Structure, static_cast<int>(r), -1,
                                     "city index " + std::to_string(c) + " out of range");
            }
            ++count[static_cast<size_t>(c)];
        }
    }
    for (int c = 1; c <= inst.n(); ++c) {
        if (count[static_cast<size_t>(c)] == 0) {
            return Verdict::fail(ViolationKind::CoverageMissing, -1, -1,
                                 "city " + std::to_string(c) + " not visited");
        }
        if (count[static_cast<size_t>(c)] > 1) {
            return Verdict::fail(ViolationKind::CoverageDuplicate, -1, -1,
                                 "city " + std::to_string(c) + " visited " +
                                     std::to_string(count[static_cast<size_t>(c)]) + " times");
        }
    }
    for (size_t r = 0; r < sol.routes.size(); ++r) {
        if (Verdict v = validate_route(inst, sol.routes[r], static_cast<int>(r)); !v) return v;
    }
    return Verdict::pass();
}

std::vector<std::pair<double, double>> arrival_times(const Instance& inst, const Route& route) {
    std::vector<std::pair<double, double>> out;
    out.reserve(route.cities.size());
    double depart = inst.depot.tw_early;
    int prev = 0;
    for (int c : route.cities) {
        const City& city = inst.city(c);
        double arrive = std::max(city.tw_early, depart + edge_cost(inst, prev, c));
        out.emplace_back(arrive, arrive + city.service);
        depart = arrive + city.service;
        prev = c;
    }
    return out;
}

std::vector<int> load_profile(const Instance& inst, const Route& route) {
    std::vector<int> out;
    out.reserve(route.cities.size() + 1);
    int load = 0;
    for (int c : route.cities) load += inst.city(c).demand;
    out.push_back(load);
    for (int c : route.cities) {
        const City& city = inst.city(c);
        load -= city.demand;
        load += city.pickup;
        out.push_back(load);
    }
    return out;
}

}  // namespace vrpd
