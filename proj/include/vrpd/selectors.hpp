#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "vrpd/core.hpp"
#include "vrpd/model.hpp"
#include "vrpd/rng.hpp"
#include "vrpd/subproblem.hpp"
#include "vrpd/subsolver.hpp"

namespace vrpd {

struct CachedSubsolution {
    std::vector<Route> routes;  // parent city indices
    double cost = 0.0;          // c(X'_S)
};

// Masking and caches are keyed by the city-set signature. Mask entries and
// cached subsolutions are evicted whenever a contained city changes route
// membership; predictions are evicted under the same rule.
struct SelectionState {
    std::unordered_set<uint64_t> mask;
    std::unordered_map<uint64_t, std::vector<int>> sig_cities;
    std::vector<long> city_counts;              // index 0 unused
    std::vector<Centroid> history;              // centroids of selected subproblems
    std::unordered_map<uint64_t, CachedSubsolution> sub_cache;
    std::unordered_map<uint64_t, double> pred_cache;

    long pred_hits = 0;
    long pred_misses = 0;
    long sub_hits = 0;
    long solver_calls = 0;

    explicit SelectionState(int n_cities = 0)
        : city_counts(static_cast<size_t>(n_cities) + 1, 0) {}

    bool masked(uint64_t sig) const { return mask.count(sig) != 0; }
    void remember_cities(uint64_t sig, const std::vector<int>& cities) {
        sig_cities.emplace(sig, cities);
    }
    // Drops mask and cache entries whose city set intersects `changed`
    // (indicator vector over city indices).
    void invalidate(const std::vector<char>& changed);
    // Registers the selection: per-city counts and centroid history.
    void record_selection(const Solution& sol, const SubproblemRef& ref, Centroid center_centroid);
};

// -1 = every candidate is masked (exhaustion).
struct SelectionResult {
    int candidate_index = -1;
    bool exhausted() const { return candidate_index < 0; }
};

SelectionResult select_random(const std::vector<SubproblemRef>& candidates,
                              const SelectionState& state, RngStream& rng);

// Minimum cumulative selection count over the center route's cities;
// ties by lowest center route id.
SelectionResult select_count_based(const std::vector<SubproblemRef>& candidates,
                                   const Solution& sol, const SelectionState& state);

// Maximum distance from the candidate's center-route centroid to the nearest
// previously selected centroid; empty history and ties fall back to the
// lowest center route id.
SelectionResult select_maxmin(const std::vector<SubproblemRef>& candidates,
                              const std::vector<Centroid>& centroids, const SelectionState& state);

// argmax of c(X_S) - f(S); predictions are served from the cache when the
// signature is known. Ties by lowest center route id.
SelectionResult select_learned(const std::vector<SubproblemRef>& candidates, const Instance& inst,
                               const Solution& sol, SelectionState& state,
                               const RegressionModel& model);

struct OracleLabel {
    int candidate_index = -1;
    double sub_cost = 0.0;  // c(X'_S)
    bool from_cache = false;
};

// Solves every unmasked candidate (cache first), labels each with its
// subsolution cost, and returns the argmax of delta = c(X_S) - c(X'_S).
// Per-candidate solver errors are skipped, not fatal. threads > 1 runs the
// enumeration on the OpenMP kernel; results are identical to the serial path.
SelectionResult select_oracle(const std::vector<SubproblemRef>& candidates, const Instance& inst,
                              const Solution& sol, SelectionState& state,
                              const SubsolverConfig& subsolver, const SubsolverBudget& budget,
                              uint64_t seed, int threads, std::vector<OracleLabel>* labels);

// Deterministic per-candidate solver seed so cached subsolutions always
// equal a fresh re-solve.
uint64_t candidate_solve_seed(uint64_t run_seed, uint64_t signature);

// Solve one candidate through the cache. Returns the subsolution with routes
// mapped to parent indices.
CachedSubsolution solve_candidate(const Instance& inst, const Solution& sol,
                                  const SubproblemRef& ref, SelectionState& state,
                                  const SubsolverConfig& subsolver, const SubsolverBudget& budget,
                                  uint64_t run_seed, bool* was_cached);

// Serial reference and OpenMP enumeration kernels: solve candidates[i] for
// every i with todo[i] set, writing results into slots.
void enumerate_candidates_serial(const Instance& inst, const Solution& sol,
                                 const std::vector<SubproblemRef>& candidates,
                                 const std::vector<char>& todo, const SubsolverConfig& subsolver,
                                 const SubsolverBudget& budget, uint64_t run_seed,
                                 std::vector<std::optional<CachedSubsolution>>& slots,
                                 std::vector<std::string>& errors);
void enumerate_candidates_parallel(const Instance& inst, const Solution& sol,
                                   const std::vector<SubproblemRef>& candidates,
                                   const std::vector<char>& todo, const SubsolverConfig& subsolver,
                                   const SubsolverBudget& budget, uint64_t run_seed,
                                   std::vector<std::optional<CachedSubsolution>>& slots,
                                   std::vector<std::string>& errors, int threads);

// Builds the TrainingExample-shaped record for a candidate (no target).
TrainingExample candidate_example(const Instance& inst, const Solution& sol,
                                  const SubproblemRef& ref);

}  // namespace vrpd
