#include "vrpd/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vrpd {

void SelectionState::invalidate(const std::vector<char>& changed) {
    std::vector<uint64_t> dead;
    for (const auto& [sig, cities] : sig_cities) {
        for (int c : cities) {
            if (changed[static_cast<size_t>(c)]) {
                dead.push_back(sig);
                break;
            }
        }
    }
    for (uint64_t sig : dead) {
        mask.erase(sig);
        sub_cache.erase(sig);
        pred_cache.erase(sig);
        sig_cities.erase(sig);
    }
}

void SelectionState::record_selection(const Solution& sol, const SubproblemRef& ref,
                                      Centroid center_centroid) {
    for (int r : ref.member_routes) {
        for (int c : sol.routes[static_cast<size_t>(r)].cities) {
            ++city_counts[static_cast<size_t>(c)];
        }
    }
    history.push_back(center_centroid);
}

SelectionResult select_random(const std::vector<SubproblemRef>& candidates,
                              const SelectionState& state, RngStream& rng) {
    std::vector<int> open;
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (!state.masked(candidates[i].signature)) open.push_back(static_cast<int>(i));
    }
    if (open.empty()) return SelectionResult{};
    size_t pick = static_cast<size_t>(rng.next_bounded(open.size()));
    return SelectionResult{open[pick]};
}

SelectionResult select_count_based(const std::vector<SubproblemRef>& candidates,
                                   const Solution& sol, const SelectionState& state) {
    int best = -1;
    long best_count = 0;
    for (size_t i = 0; i < candidates.size(); ++i) {
        const SubproblemRef& ref = candidates[i];
        if (state.masked(ref.signature)) continue;
        long count = 0;
        for (int c : sol.routes[static_cast<size_t>(ref.center_route)].cities) {
            count += state.city_counts[static_cast<size_t>(c)];
        }
        if (best < 0 || count < best_count ||
            (count == best_count && ref.center_route < candidates[static_cast<size_t>(best)].center_route)) {
            best = static_cast<int>(i);
            best_count = count;
        }
    }
    return SelectionResult{best};
}

SelectionResult select_maxmin(const std::vector<SubproblemRef>& candidates,
                              const std::vector<Centroid>& centroids, const SelectionState& state) {
    int best = -1;
    double best_dist = -1.0;
    for (size_t i = 0; i < candidates.size(); ++i) {
        const SubproblemRef& ref = candidates[i];
        if (state.masked(ref.signature)) continue;
        if (state.history.empty()) {
            if (best < 0 || ref.center_route < candidates[static_cast<size_t>(best)].center_route) {
                best = static_cast<int>(i);
            }
            continue;
        }
        const Centroid& c = centroids[static_cast<size_t>(ref.center_route)];
        double min_d = 1e300;
        for (const Centroid& h : state.history) {
            double dx = c.x - h.x, dy = c.y - h.y;
            min_d = std::min(min_d, std::sqrt(dx * dx + dy * dy));
        }
        if (best < 0 || min_d > best_dist ||
            (min_d == best_dist && ref.center_route < candidates[static_cast<size_t>(best)].center_route)) {
            best = static_cast<int>(i);
            best_dist = min_d;
        }
    }
    return SelectionResult{best};
}

TrainingExample candidate_example(const Instance& inst, const Solution& sol,
                                  const SubproblemRef& ref) {
    TrainingExample ex;
    ex.depot_x = inst.depot.x;
    ex.depot_y = inst.depot.y;
    ex.capacity = inst.capacity;
    for (int c : member_cities(sol, ref)) {
        const City& city = inst.city(c);
        ex.cities.push_back({city.x, city.y, static_cast<double>(city.demand)});
    }
    ex.n = inst.n();
    ex.incumbent = ref.incumbent_cost;
    ex.center_route = ref.center_route;
    return ex;
}

SelectionResult select_learned(const std::vector<SubproblemRef>& candidates, const Instance& inst,
                               const Solution& sol, SelectionState& state,
                               const RegressionModel& model) {
    int best = -1;
    double best_score = 0.0;
    for (size_t i = 0; i < candidates.size(); ++i) {
        const SubproblemRef& ref = candidates[i];
        if (state.masked(ref.signature)) continue;
        double predicted;
        auto it = state.pred_cache.find(ref.signature);
        if (it != state.pred_cache.end()) {
            predicted = it->second;
            ++state.pred_hits;
        } else {
            predicted = model.predict(candidate_example(inst, sol, ref));
            state.pred_cache.emplace(ref.signature, predicted);
            state.remember_cities(ref.signature, member_cities(sol, ref));
            ++state.pred_misses;
        }
        double score = ref.incumbent_cost - predicted;
        if (best < 0 || score > best_score ||
            (score == best_score && ref.center_route < candidates[static_cast<size_t>(best)].center_route)) {
            best = static_cast<int>(i);
            best_score = score;
        }
    }
    return SelectionResult{best};
}

uint64_t candidate_solve_seed(uint64_t run_seed, uint64_t signature) {
    return mix64(run_seed ^ signature);
}

namespace {

CachedSubsolution solve_fresh(const Instance& inst, const Solution& sol, const SubproblemRef& ref,
                              const SubsolverConfig& subsolver, const SubsolverBudget& budget,
                              uint64_t run_seed) {
    SubproblemView view = make_view(inst, member_cities(sol, ref));
    Solution sub = solve(subsolver, view, budget, candidate_solve_seed(run_seed, ref.signature));
    if (Verdict v = validate_solution(view.sub, sub); !v) {
        throw std::runtime_error("subsolver returned infeasible subsolution: " + v.detail);
    }
    Solution mapped = map_back(view, sub);
    CachedSubsolution out;
    out.routes = std::move(mapped.routes);
    out.cost = sub.cost;
    return out;
}

}  // namespace

CachedSubsolution solve_candidate(const Instance& inst, const Solution& sol,
                                  const SubproblemRef& ref, SelectionState& state,
                                  const SubsolverConfig& subsolver, const SubsolverBudget& budget,
                                  uint64_t run_seed, bool* was_cached) {
    auto it = state.sub_cache.find(ref.signature);
    if (it != state.sub_cache.end()) {
        ++state.sub_hits;
        if (was_cached) *was_cached = true;
        return it->second;
    }
    CachedSubsolution fresh = solve_fresh(inst, sol, ref, subsolver, budget, run_seed);
    ++state.solver_calls;
    state.sub_cache.emplace(ref.signature, fresh);
    state.remember_cities(ref.signature, member_cities(sol, ref));
    if (was_cached) *was_cached = false;
    return fresh;
}

void enumerate_candidates_serial(const Instance& inst, const Solution& sol,
                                 const std::vector<SubproblemRef>& candidates,
                                 const std::vector<char>& todo, const SubsolverConfig& subsolver,
                                 const SubsolverBudget& budget, uint64_t run_seed,
                                 std::vector<std::optional<CachedSubsolution>>& slots,
                                 std::vector<std::string>& errors) {
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (!todo[i]) continue;
        try {
            slots[i] = solve_fresh(inst, sol, candidates[i], subsolver, budget, run_seed);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
}

void enumerate_candidates_parallel(const Instance& inst, const Solution& sol,
                                   const std::vector<SubproblemRef>& candidates,
                                   const std::vector<char>& todo, const SubsolverConfig& subsolver,
                                   const SubsolverBudget& budget, uint64_t run_seed,
                                   std::vector<std::optional<CachedSubsolution>>& slots,
                                   std::vector<std::string>& errors, int threads) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (!todo[i]) continue;
        try {
            slots[i] = solve_fresh(inst, sol, candidates[i], subsolver, budget, run_seed);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
#else
    (void)threads;
    enumerate_candidates_serial(inst, sol, candidates, todo, subsolver, budget, run_seed, slots,
                                errors);
#endif
}

SelectionResult select_oracle(const std::vector<SubproblemRef>& candidates, const Instance& inst,
                              const Solution& sol, SelectionState& state,
                              const SubsolverConfig& subsolver, const SubsolverBudget& budget,
                              uint64_t seed, int threads, std::vector<OracleLabel>* labels) {
    std::vector<char> todo(candidates.size(), 0);
    std::vector<std::optional<CachedSubsolution>> slots(candidates.size());
    std::vector<std::string> errors(candidates.size());
    bool any_open = false;
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (state.masked(candidates[i].signature)) continue;
        any_open = true;
        auto it = state.sub_cache.find(candidates[i].signature);
        if (it != state.sub_cache.end()) {
            slots[i] = it->second;
            ++state.sub_hits;
        } else {
            todo[i] = 1;
        }
    }
    if (!any_open) return SelectionResult{};

    if (threads > 1) {
        enumerate_candidates_parallel(inst, sol, candidates, todo, subsolver, budget, seed, slots,
                                      errors, threads);
    } else {
        enumerate_candidates_serial(inst, sol, candidates, todo, subsolver, budget, seed, slots,
                                    errors);
    }

    int best = -1;
    double best_delta = 0.0;
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (state.masked(candidates[i].signature)) continue;
        if (!slots[i].has_value()) continue;  // solver error, skip candidate
        if (todo[i]) {
            ++state.solver_calls;
            state.sub_cache.emplace(candidates[i].signature, *slots[i]);
            state.remember_cities(candidates[i].signature, member_cities(sol, candidates[i]));
        }
        if (labels) {
            labels->push_back(OracleLabel{static_cast<int>(i), slots[i]->cost, todo[i] == 0});
        }
        double delta = candidates[i].incumbent_cost - slots[i]->cost;
        if (best < 0 || delta > best_delta ||
            (delta == best_delta &&
             candidates[i].center_route < candidates[static_cast<size_t>(best)].center_route)) {
            best = static_cast<int>(i);
            best_delta = delta;
        }
    }
    return SelectionResult{best};
}

}  // namespace vrpd
