#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vrpd/core.hpp"
#include "vrpd/rng.hpp"

namespace vrpd {

inline constexpr int kSummaryDim = 33;
inline constexpr int kCityFeatureDim = 3;

// One labeled subproblem: raw city records plus the subsolution cost they
// regress to. Coordinates are absolute; features are depot-relative.
struct TrainingExample {
    double depot_x = 0.0;
    double depot_y = 0.0;
    int capacity = 1;
    std::vector<std::array<double, 3>> cities;  // x, y, demand

    double target = 0.0;  // c(X'_S)

    std::string instance_id;
    int step = -1;
    int n = -1;
    int k = -1;
    double incumbent = 0.0;  // c(X_S) at labeling time
    int center_route = -1;
};

// Per-city rows: (x - x_depot, y - y_depot, demand / C). Row-major m x 3.
std::vector<double> city_features(const TrainingExample& ex);

// 33 permutation-invariant values:
//   [0]      city count / 1000
//   [1..4]   bounding box min x, min y, max x, max y (depot-relative)
//   [5..6]   coordinate standard deviations
//   [7..16]  deciles 10%..100% of radial distance from depot
//   [17..26] deciles 10%..100% of radial distance from the subproblem centroid
//   [27..32] demand sum, mean, std, min, max, median, all divided by C
std::array<double, kSummaryDim> summary_features(const TrainingExample& ex);

// Rotation by U[0, 2pi) and reflection with probability 1/2, applied to
// depot-relative coordinates. Targets are unchanged (Euclidean isometry).
void augment(TrainingExample& ex, RngStream& rng);
void augment_with(TrainingExample& ex, double angle, bool flip);

// JSON-lines dataset.
std::string example_to_json(const TrainingExample& ex);
TrainingExample example_from_json(const std::string& line);
void save_dataset(const std::string& path, const std::vector<TrainingExample>& data);
std::vector<TrainingExample> load_dataset(const std::string& path);

// Quantile with linear interpolation on a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace vrpd
