#include "vrpd/init.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vrpd/rng.hpp"
#include "vrpd/subproblem.hpp"

namespace vrpd {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr uint64_t kChainStream = 0xC4A1;
}  // namespace

std::vector<std::vector<int>> sweep_partition(const Instance& inst, int n_sectors) {
    if (n_sectors < 1) throw std::invalid_argument("sweep_partition: n_sectors must be >= 1");
    std::vector<std::vector<int>> sectors(static_cast<size_t>(n_sectors));
    for (int c = 1; c <= inst.n(); ++c) {
        double a = std::atan2(inst.city(c).y - inst.depot.y, inst.city(c).x - inst.depot.x);
        if (a < 0.0) a += kTwoPi;
        double t = a / kTwoPi;  // [0, 1)
        int s = std::min(static_cast<int>(t * n_sectors), n_sectors - 1);
        sectors[static_cast<size_t>(s)].push_back(c);
    }
    return sectors;
}

namespace {

Solution random_chain(const Instance& inst, uint64_t seed) {
    std::vector<int> order(static_cast<size_t>(inst.n()));
    for (int i = 0; i < inst.n(); ++i) order[static_cast<size_t>(i)] = i + 1;
    RngStream rng(seed, kChainStream);
    for (int i = inst.n() - 1; i > 0; --i) {
        int j = static_cast<int>(rng.next_bounded(static_cast<uint64_t>(i + 1)));
        std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    Solution sol;
    std::vector<int> cur;
    for (int c : order) {
        std::vector<int> ext = cur;
        ext.push_back(c);
        if (validate_route(inst, Route{ext})) {
            cur = std::move(ext);
            continue;
        }
        if (!cur.empty()) sol.routes.push_back(Route{std::move(cur)});
        cur = {c};
        if (!validate_route(inst, Route{cur})) {
            throw std::runtime_error("initialize: city " + std::to_string(c) +
                                     " infeasible even as a solo route");
        }
    }
    if (!cur.empty()) sol.routes.push_back(Route{std::move(cur)});
    sol.cost = solution_cost(inst, sol);
    return sol;
}

}  // namespace

Solution initialize(const Instance& inst, const SubsolverConfig& subsolver, long L,
                    int n_sectors, uint64_t seed) {
    if (L < 0) throw std::invalid_argument("initialize: L must be >= 0");
    if (L == 0) return random_chain(inst, seed);

    auto sectors = sweep_partition(inst, n_sectors);
    Solution sol;
    for (size_t s = 0; s < sectors.size(); ++s) {
        if (sectors[s].empty()) continue;
        SubproblemView view = make_view(inst, sectors[s]);
        SubsolverBudget budget;
        budget.max_steps = L;
        Solution sub = solve(subsolver, view, budget, seed + s);
        Solution mapped = map_back(view, sub);
        for (Route& r : mapped.routes) sol.routes.push_back(std::move(r));
    }
    sol.cost = solution_cost(inst, sol);
    if (Verdict v = validate_solution(inst, sol); !v) {
        throw std::runtime_error("initialize: constructed solution infeasible: " + v.detail);
    }
    return sol;
}

}  // namespace vrpd
