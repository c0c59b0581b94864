#include "vrpd/datagen.hpp"

#include <unordered_set>

namespace vrpd {

LabelGenResult generate_labels(const Instance& inst, const Solution& init,
                               const std::string& instance_id, int k,
                               const SubsolverConfig& subsolver, const SubsolverBudget& budget,
                               int d_train, uint64_t seed, int threads) {
    LabelGenResult res;
    std::unordered_set<uint64_t> emitted;

    RunHooks hooks;
    hooks.on_labels = [&](int step, const Solution& sol, const std::vector<SubproblemRef>& candidates,
                          const std::vector<OracleLabel>& labels) {
        LabeledStep ls;
        ls.step = step;
        for (const OracleLabel& lab : labels) {
            const SubproblemRef& ref = candidates[static_cast<size_t>(lab.candidate_index)];
            TrainingExample ex = candidate_example(inst, sol, ref);
            ex.target = lab.sub_cost;
            ex.instance_id = instance_id;
            ex.step = step;
            ex.k = k;
            ls.candidates.push_back(ex);
            if (emitted.insert(ref.signature).second) res.examples.push_back(std::move(ex));
        }
        res.steps.push_back(std::move(ls));
    };

    Selector selector;
    selector.kind = SelectorKind::Oracle;
    selector.oracle_threads = threads;
    StopCriteria stop;
    stop.max_steps = d_train;

    RunResult rr = run(inst, init, selector, subsolver, k, budget, stop, seed, &hooks);
    res.trace = std::move(rr.trace);
    res.trace.instance_id = instance_id;
    res.final_solution = std::move(rr.solution);
    res.solver_calls = rr.solver_calls;
    return res;
}

}  // namespace vrpd
