#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vrpd/core.hpp"
#include "vrpd/selectors.hpp"
#include "vrpd/subproblem.hpp"
#include "vrpd/subsolver.hpp"

namespace vrpd {

enum class SelectorKind { Random, Count, MaxMin, Learned, Oracle };

std::string selector_name(SelectorKind k);

struct Selector {
    SelectorKind kind = SelectorKind::Random;
    const RegressionModel* model = nullptr;  // Learned
    int oracle_threads = 1;                  // Oracle enumeration
};

struct StepRecord {
    int step = 0;
    SubproblemRef selected;
    double delta = 0.0;
    bool accepted = false;
    bool exhausted = false;      // no unmasked candidate remained
    bool solver_error = false;
    std::string error;
    double wall = 0.0;           // seconds since run start
    double cost_after = 0.0;
    long solver_calls_after = 0;
};

struct TraceEvent {
    double t = 0.0;
    double cost = 0.0;
    int step = 0;
    bool accepted = false;
    std::string action;
};

struct RunTrace {
    std::string instance_id;
    std::string method_id;
    uint64_t seed = 0;
    std::vector<TraceEvent> events;  // events[0] is the initialization event

    double init_cost() const { return events.empty() ? 0.0 : events.front().cost; }
    double final_cost() const { return events.empty() ? 0.0 : events.back().cost; }
};

struct StopCriteria {
    long max_steps = -1;    // -1 = unbounded
    double max_wall = -1.0; // seconds, <= 0 = unbounded
};

struct RunHooks {
    // Called after every step with the updated solution.
    std::function<void(const Solution&, const StepRecord&)> after_step;
    // Oracle labels harvested per step (datagen); solution is pre-splice.
    std::function<void(int step, const Solution&, const std::vector<SubproblemRef>&,
                       const std::vector<OracleLabel>&)>
        on_labels;
};

// One iteration: select an unmasked candidate, solve it without the
// incumbent subsolution, splice when delta > tolerance, mask otherwise.
// Returns the (possibly updated) solution. The centroid list is maintained
// incrementally: only routes touched by a splice are recomputed.
Solution delegate_step(const Instance& inst, const Solution& sol, SelectionState& state,
                       const Selector& selector, const SubsolverConfig& subsolver, int k,
                       const SubsolverBudget& sub_budget, uint64_t run_seed, int step_index,
                       std::vector<Centroid>& centroids, RngStream& select_rng, StepRecord& rec,
                       const RunHooks* hooks);

struct RunResult {
    Solution solution;
    RunTrace trace;
    long solver_calls = 0;
    long accepted_steps = 0;
};

RunResult run(const Instance& inst, const Solution& initial, const Selector& selector,
              const SubsolverConfig& subsolver, int k, const SubsolverBudget& sub_budget,
              const StopCriteria& stop, uint64_t seed, const RunHooks* hooks = nullptr);

// Trace JSON-lines: a meta line followed by one event per line.
std::string trace_to_jsonl(const RunTrace& trace);
RunTrace trace_from_jsonl(const std::string& text);
void save_trace(const std::string& path, const RunTrace& trace);
RunTrace load_trace(const std::string& path);

}  // namespace vrpd
