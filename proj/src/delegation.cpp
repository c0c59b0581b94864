#include "vrpd/delegation.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "vrpd/json_io.hpp"

namespace vrpd {

std::string selector_name(SelectorKind k) {
    switch (k) {
        case SelectorKind::Random: return "random";
        case SelectorKind::Count: return "count";
        case SelectorKind::MaxMin: return "maxmin";
        case SelectorKind::Learned: return "learned";
        case SelectorKind::Oracle: return "oracle";
    }
    throw std::logic_error("bad selector kind");
}

namespace {

constexpr uint64_t kSelectStream = 0x5E1EC7;

uint64_t route_set_hash(const Route& r) {
    std::vector<int> cities = r.cities;
    std::sort(cities.begin(), cities.end());
    return city_set_signature(cities);
}

// Splices accepted subsolution routes into the solution: member routes are
// dropped (order of survivors preserved), new routes appended. Centroids
// follow the same layout so only appended routes are recomputed. Cities are
// "changed" when their old route's city set does not survive the splice.
Solution splice(const Instance& inst, const Solution& sol, const SubproblemRef& ref,
                const std::vector<Route>& new_routes, std::vector<Centroid>& centroids,
                std::vector<char>& changed) {
    std::vector<char> is_member(sol.routes.size(), 0);
    for (int r : ref.member_routes) is_member[static_cast<size_t>(r)] = 1;

    std::unordered_multiset<uint64_t> new_hashes;
    for (const Route& r : new_routes) new_hashes.insert(route_set_hash(r));

    changed.assign(static_cast<size_t>(inst.n()) + 1, 0);
    for (int rid : ref.member_routes) {
        const Route& old_route = sol.routes[static_cast<size_t>(rid)];
        uint64_t h = route_set_hash(old_route);
        auto it = new_hashes.find(h);
        if (it != new_hashes.end()) {
            new_hashes.erase(it);  // identical city set survives; membership unchanged
            continue;
        }
        for (int c : old_route.cities) changed[static_cast<size_t>(c)] = 1;
    }

    Solution out;
    std::vector<Centroid> new_centroids;
    out.routes.reserve(sol.routes.size());
    new_centroids.reserve(sol.routes.size());
    for (size_t r = 0; r < sol.routes.size(); ++r) {
        if (is_member[r]) continue;
        out.routes.push_back(sol.routes[r]);
        new_centroids.push_back(centroids[r]);
    }
    for (const Route& r : new_routes) {
        out.routes.push_back(r);
        new_centroids.push_back(route_centroid(inst, r));
    }
    out.cost = solution_cost(inst, out);
    centroids = std::move(new_centroids);
    return out;
}

}  // namespace

Solution delegate_step(const Instance& inst, const Solution& sol, SelectionState& state,
                       const Selector& selector, const SubsolverConfig& subsolver, int k,
                       const SubsolverBudget& sub_budget, uint64_t run_seed, int step_index,
                       std::vector<Centroid>& centroids, RngStream& select_rng, StepRecord& rec,
                       const RunHooks* hooks) {
    rec = StepRecord{};
    rec.step = step_index;

    std::vector<SubproblemRef> candidates = construct_subproblems(inst, sol, k, centroids);

    SelectionResult pick;
    std::vector<OracleLabel> labels;
    switch (selector.kind) {
        case SelectorKind::Random:
            pick = select_random(candidates, state, select_rng);
            break;
        case SelectorKind::Count:
            pick = select_count_based(candidates, sol, state);
            break;
        case SelectorKind::MaxMin:
            pick = select_maxmin(candidates, centroids, state);
            break;
        case SelectorKind::Learned:
            if (!selector.model) throw std::invalid_argument("learned selector needs a model");
            pick = select_learned(candidates, inst, sol, state, *selector.model);
            break;
        case SelectorKind::Oracle:
            pick = select_oracle(candidates, inst, sol, state, subsolver, sub_budget, run_seed,
                                 selector.oracle_threads, &labels);
            if (hooks && hooks->on_labels) hooks->on_labels(step_index, sol, candidates, labels);
            break;
    }
    if (pick.exhausted()) {
        rec.exhausted = true;
        rec.cost_after = sol.cost;
        rec.solver_calls_after = state.solver_calls;
        return sol;
    }

    const SubproblemRef& ref = candidates[static_cast<size_t>(pick.candidate_index)];
    rec.selected = ref;
    state.record_selection(sol, ref, centroids[static_cast<size_t>(ref.center_route)]);

    CachedSubsolution sub;
    try {
        sub = solve_candidate(inst, sol, ref, state, subsolver, sub_budget, run_seed, nullptr);
    } catch (const std::exception& e) {
        rec.solver_error = true;
        rec.error = e.what();
        state.mask.insert(ref.signature);
        state.remember_cities(ref.signature, member_cities(sol, ref));
        rec.cost_after = sol.cost;
        rec.solver_calls_after = state.solver_calls;
        return sol;
    }

    rec.delta = ref.incumbent_cost - sub.cost;
    if (rec.delta > kCostTolerance) {
        rec.accepted = true;
        std::vector<char> changed;
        Solution next = splice(inst, sol, ref, sub.routes, centroids, changed);
        state.invalidate(changed);
        rec.cost_after = next.cost;
        rec.solver_calls_after = state.solver_calls;
        return next;
    }

    state.mask.insert(ref.signature);
    state.remember_cities(ref.signature, member_cities(sol, ref));
    rec.cost_after = sol.cost;
    rec.solver_calls_after = state.solver_calls;
    return sol;
}

RunResult run(const Instance& inst, const Solution& initial, const Selector& selector,
              const SubsolverConfig& subsolver, int k, const SubsolverBudget& sub_budget,
              const StopCriteria& stop, uint64_t seed, const RunHooks* hooks) {
    if (Verdict v = validate_solution(inst, initial); !v) {
        throw std::invalid_argument("run: initial solution infeasible: " + v.detail);
    }
    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    RunResult res;
    res.solution = initial;
    res.solution.cost = solution_cost(inst, initial);
    res.trace.seed = seed;
    res.trace.method_id = selector_name(selector.kind);
    res.trace.events.push_back(TraceEvent{0.0, res.solution.cost, 0, false, "init"});

    SelectionState state(inst.n());
    std::vector<Centroid> centroids = route_centroids(inst, res.solution);
    RngStream select_rng(seed, kSelectStream);

    for (int step = 1; stop.max_steps < 0 || step <= stop.max_steps; ++step) {
        if (stop.max_wall > 0.0 && elapsed() >= stop.max_wall) break;
        StepRecord rec;
        res.solution = delegate_step(inst, res.solution, state, selector, subsolver, k, sub_budget,
                                     seed, step, centroids, select_rng, rec, hooks);
        if (rec.exhausted) break;
        rec.wall = elapsed();
        res.trace.events.push_back(
            TraceEvent{rec.wall, rec.cost_after, step, rec.accepted, selector_name(selector.kind)});
        if (rec.accepted) ++res.accepted_steps;
        if (hooks && hooks->after_step) hooks->after_step(res.solution, rec);
    }
    res.solver_calls = state.solver_calls;
    return res;
}

std::string trace_to_jsonl(const RunTrace& trace) {
    std::string out = "{\"meta\":{\"instance\":\"" + trace.instance_id + "\",\"method\":\"" +
                      trace.method_id + "\",\"seed\":" + std::to_string(trace.seed) + "}}\n";
    for (const TraceEvent& e : trace.events) {
        out += "{\"t\":" + fmt_g17(e.t) + ",\"cost\":" + fmt_g17(e.cost) +
               ",\"step\":" + std::to_string(e.step) + ",\"accepted\":" +
               (e.accepted ? "true" : "false") + ",\"action\":\"" + e.action + "\"}\n";
    }
    return out;
}

RunTrace trace_from_jsonl(const std::string& text) {
    RunTrace trace;
    std::istringstream ss(text);
    std::string line;
    bool first = true;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        if (first && j.contains("meta")) {
            trace.instance_id = j["meta"].value("instance", "");
            trace.method_id = j["meta"].value("method", "");
            trace.seed = j["meta"].value("seed", 0ULL);
            first = false;
            continue;
        }
        first = false;
        TraceEvent e;
        e.t = j.at("t").get<double>();
        e.cost = j.at("cost").get<double>();
        e.step = j.at("step").get<int>();
        e.accepted = j.at("accepted").get<bool>();
        e.action = j.value("action", "");
        trace.events.push_back(e);
    }
    return trace;
}

void save_trace(const std::string& path, const RunTrace& trace) {
    write_file(path, trace_to_jsonl(trace));
}

RunTrace load_trace(const std::string& path) { return trace_from_jsonl(read_file(path)); }

}  // namespace vrpd
