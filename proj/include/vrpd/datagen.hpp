#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrpd/delegation.hpp"
#include "vrpd/features.hpp"

namespace vrpd {

// Full label list for one oracle-enumerated step: every unmasked candidate
// as a TrainingExample with target = c(X'_S) and incumbent = c(X_S).
struct LabeledStep {
    int step = 0;
    std::vector<TrainingExample> candidates;
};

struct LabelGenResult {
    std::vector<TrainingExample> examples;  // unique signatures only
    std::vector<LabeledStep> steps;         // per-step full lists
    RunTrace trace;
    Solution final_solution;
    long solver_calls = 0;
};

// Runs the delegation loop with oracle selection for d_train steps,
// harvesting (candidate, subsolution cost) labels. Candidates whose
// signature was already emitted during this run are not re-emitted into
// `examples`; `steps` keeps the complete per-step lists.
LabelGenResult generate_labels(const Instance& inst, const Solution& init,
                               const std::string& instance_id, int k,
                               const SubsolverConfig& subsolver, const SubsolverBudget& budget,
                               int d_train, uint64_t seed, int threads);

}  // namespace vrpd
