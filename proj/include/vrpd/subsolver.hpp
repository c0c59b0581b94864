#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "vrpd/core.hpp"
#include "vrpd/subproblem.hpp"

namespace vrpd {

// Step budget counts move evaluations (accepted or rejected); the budget is
// checked between scan blocks, so a block always runs to completion. At
// least one bound must be finite.
struct SubsolverBudget {
    long max_steps = -1;       // -1 = unbounded
    double max_wall = -1.0;    // seconds, <= 0 = unbounded

    bool bounded() const { return max_steps >= 0 || max_wall > 0.0; }
};

enum class SubsolverKind { Builtin, External };

struct SubsolverConfig {
    SubsolverKind kind = SubsolverKind::Builtin;
    std::string command_template;  // must contain {in} and {out}
    std::string work_dir = ".";
    double timeout_seconds = 120.0;
    int max_processes = 0;  // concurrent external processes; 0 = hardware default
};

// Built-in solver: seeded sweep + nearest-neighbor construction, then
// first-improvement local search over relocate(1), swap(1,1), intra-route
// 2-opt and inter-route 2-opt*. Moves are accepted only when variant
// feasibility holds and the cost strictly decreases by more than 1e-9.
// Deterministic given (view, budget, seed). The returned solution is in the
// view's local city indices with cost recomputed from structure.
Solution solve_builtin(const SubproblemView& view, const SubsolverBudget& budget, uint64_t seed);

// Dispatch on config kind. External runs are CVRP-only.
Solution solve(const SubsolverConfig& cfg, const SubproblemView& view, const SubsolverBudget& budget,
               uint64_t seed);

// TSPLIB-style problem file: coordinates scaled by 1e6 and rounded.
void write_problem_file(const SubproblemView& view, const std::string& path);

// One route per line of local city indices; "Route #n:" prefixes and lines
// starting with "Cost" or '#' are tolerated. Malformed input reports the
// offending line number.
Solution parse_solution_file(const SubproblemView& view, const std::string& path);

struct ExternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace vrpd
