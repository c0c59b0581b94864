#pragma once

#include <cstdint>
#include <vector>

#include "vrpd/core.hpp"
#include "vrpd/subsolver.hpp"

namespace vrpd {

// Equal angular sectors around the depot. Sector 0 starts at the positive
// x-axis; a city coincident with the depot lands in sector 0.
std::vector<std::vector<int>> sweep_partition(const Instance& inst, int n_sectors);

// L >= 1: each nonempty sector is solved as an independent sub-instance with
// an L-step budget and the routes are merged in sector order. L == 0:
// uniformly random chaining of cities, cutting a route as soon as the next
// city breaks feasibility.
Solution initialize(const Instance& inst, const SubsolverConfig& subsolver, long L,
                    int n_sectors, uint64_t seed);

inline Solution initialize(const Instance& inst, long L, int n_sectors, uint64_t seed) {
    return initialize(inst, SubsolverConfig{}, L, n_sectors, seed);
}

}  // namespace vrpd
