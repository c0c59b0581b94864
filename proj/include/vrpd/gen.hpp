#pragma once

#include <cstdint>
#include <vector>

#include "vrpd/core.hpp"

namespace vrpd {

// Cluster metadata optionally exposed for statistical checks.
struct ClusterInfo {
    std::vector<std::pair<double, double>> centroids;
    std::vector<int> assignment;  // per city; -1 for cities drawn uniformly
};

Instance gen_uniform(int n, uint64_t seed);
Instance gen_clustered(int n, int n_clusters, uint64_t seed, ClusterInfo* info = nullptr);
Instance gen_mixed(int n, int n_clusters, uint64_t seed, ClusterInfo* info = nullptr);
Instance gen_cvrptw(int n, uint64_t seed);
Instance gen_vrpmpd(int n, uint64_t seed);

// Draws n_target cities without replacement, resamples demands from U{1..9},
// sets capacity to 50 and keeps the depot. Output variant is CVRP.
Instance subsample(const Instance& inst, int n_target, uint64_t seed);

}  // namespace vrpd
