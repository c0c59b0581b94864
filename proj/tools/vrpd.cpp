#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "vrpd/datagen.hpp"
#include "vrpd/delegation.hpp"
#include "vrpd/gen.hpp"
#include "vrpd/init.hpp"
#include "vrpd/json_io.hpp"
#include "vrpd/metrics.hpp"
#include "vrpd/train.hpp"

namespace fs = std::filesystem;
using namespace vrpd;

namespace {

Instance generate(const std::string& variant, const std::string& dist, int n, int nc,
                  uint64_t seed) {
    if (variant == "cvrptw") {
        if (dist != "uniform") throw CLI::ValidationError("cvrptw supports only --dist uniform");
        return gen_cvrptw(n, seed);
    }
    if (variant == "vrpmpd") {
        if (dist != "uniform") throw CLI::ValidationError("vrpmpd supports only --dist uniform");
        return gen_vrpmpd(n, seed);
    }
    if (variant != "cvrp") throw CLI::ValidationError("unknown variant " + variant);
    if (dist == "uniform") return gen_uniform(n, seed);
    if (dist == "clustered") return gen_clustered(n, nc, seed);
    if (dist == "mixed") return gen_mixed(n, nc, seed);
    throw CLI::ValidationError("unknown distribution " + dist);
}

std::string instance_name(const std::string& variant, const std::string& dist, int n, int nc,
                          uint64_t seed) {
    std::string name = variant + "_" + dist + "_n" + std::to_string(n);
    if (dist == "clustered" || dist == "mixed") name += "_nc" + std::to_string(nc);
    return name + "_s" + std::to_string(seed) + ".json";
}

// "sweep:L" or a solution file path.
Solution resolve_init(const Instance& inst, const std::string& spec, int sectors, uint64_t seed) {
    if (spec.rfind("sweep:", 0) == 0) {
        long L = std::stol(spec.substr(6));
        return initialize(inst, L, sectors, seed);
    }
    Solution sol = load_solution(spec);
    sol.cost = solution_cost(inst, sol);
    if (Verdict v = validate_solution(inst, sol); !v) {
        throw std::runtime_error("initial solution infeasible: " + v.detail);
    }
    return sol;
}

struct SelectorSpec {
    Selector selector;
    RegressionModel model;  // owns storage for learned
};

SelectorSpec resolve_selector(const std::string& spec, int threads) {
    SelectorSpec out;
    out.selector.oracle_threads = threads;
    if (spec == "random") {
        out.selector.kind = SelectorKind::Random;
    } else if (spec == "count") {
        out.selector.kind = SelectorKind::Count;
    } else if (spec == "maxmin") {
        out.selector.kind = SelectorKind::MaxMin;
    } else if (spec == "oracle") {
        out.selector.kind = SelectorKind::Oracle;
    } else if (spec.rfind("learned:", 0) == 0) {
        out.selector.kind = SelectorKind::Learned;
        out.model = load_model(spec.substr(8));
    } else {
        throw CLI::ValidationError("unknown selector " + spec);
    }
    return out;
}

SubsolverConfig resolve_subsolver(const std::string& spec, double timeout) {
    SubsolverConfig cfg;
    cfg.timeout_seconds = timeout;
    if (spec == "builtin") {
        cfg.kind = SubsolverKind::Builtin;
    } else if (spec.rfind("external:", 0) == 0) {
        cfg.kind = SubsolverKind::External;
        cfg.command_template = spec.substr(9);
        cfg.work_dir = fs::temp_directory_path().string();
    } else {
        throw CLI::ValidationError("unknown subsolver " + spec);
    }
    return cfg;
}

std::vector<std::string> list_instances(const std::string& spec) {
    std::vector<std::string> files;
    if (fs::is_directory(spec)) {
        for (const auto& e : fs::directory_iterator(spec)) {
            if (e.path().extension() == ".json") files.push_back(e.path().string());
        }
        std::sort(files.begin(), files.end());
    } else {
        std::stringstream ss(spec);
        std::string part;
        while (std::getline(ss, part, ',')) {
            if (!part.empty()) files.push_back(part);
        }
    }
    if (files.empty()) throw std::runtime_error("no instances found at " + spec);
    return files;
}

std::map<std::string, std::string> parse_kv_config(const std::string& path) {
    std::map<std::string, std::string> out;
    std::istringstream ss(read_file(path));
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        size_t h = line.find('#');
        if (h != std::string::npos) line = line.substr(0, h);
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

int cmd_gen(const std::string& variant, const std::string& dist, int n, int nc, uint64_t seed,
            int count, const std::string& out_dir) {
    fs::create_directories(out_dir);
    for (int i = 0; i < count; ++i) {
        uint64_t s = seed + static_cast<uint64_t>(i);
        Instance inst = generate(variant, dist, n, nc, s);
        std::string path = out_dir + "/" + instance_name(variant, dist, n, nc, s);
        save_instance(path, inst);
        std::cout << path << "\n";
    }
    return 0;
}

int cmd_init(const std::string& instance_path, long L, int sectors, uint64_t seed,
             const std::string& out) {
    Instance inst = load_instance(instance_path);
    Solution sol = initialize(inst, L, sectors, seed);
    save_solution(out, sol);
    std::cout << "cost " << fmt_g17(sol.cost) << " routes " << sol.routes.size() << "\n";
    return 0;
}

int cmd_solve(const std::string& instance_path, const std::string& init_spec,
              const std::string& selector_spec, int k, const std::string& subsolver_spec,
              long budget_steps, double budget_wall, long sub_steps, double sub_wall,
              double sub_timeout, uint64_t seed, int sectors, int threads,
              const std::string& trace_out, const std::string& out) {
    Instance inst = load_instance(instance_path);
    Solution init = resolve_init(inst, init_spec, sectors, seed);
    SelectorSpec sel = resolve_selector(selector_spec, threads);
    if (sel.selector.kind == SelectorKind::Learned) sel.selector.model = &sel.model;
    SubsolverConfig subsolver = resolve_subsolver(subsolver_spec, sub_timeout);
    SubsolverBudget budget;
    budget.max_steps = sub_steps;
    budget.max_wall = sub_wall;
    StopCriteria stop;
    stop.max_steps = budget_steps;
    stop.max_wall = budget_wall;

    RunResult res = run(inst, init, sel.selector, subsolver, k, budget, stop, seed);
    res.trace.instance_id = fs::path(instance_path).stem().string();
    if (!trace_out.empty()) save_trace(trace_out, res.trace);
    if (!out.empty()) save_solution(out, res.solution);
    std::cout << "init " << fmt_g17(init.cost) << " final " << fmt_g17(res.solution.cost)
              << " steps " << (res.trace.events.size() - 1) << " accepted " << res.accepted_steps
              << " solver_calls " << res.solver_calls << "\n";
    return 0;
}

int cmd_datagen(const std::string& instances, int k, int d_train, long sub_steps, long init_L,
                int sectors, uint64_t seed, int threads, const std::string& out) {
    std::vector<std::string> files = list_instances(instances);
    std::vector<TrainingExample> dataset;
    SubsolverBudget budget;
    budget.max_steps = sub_steps;
    for (size_t fi = 0; fi < files.size(); ++fi) {
        Instance inst = load_instance(files[fi]);
        uint64_t inst_seed = seed + fi;
        Solution init = initialize(inst, init_L, sectors, inst_seed);
        std::string id = fs::path(files[fi]).stem().string();
        LabelGenResult res = generate_labels(inst, init, id, k, SubsolverConfig{}, budget, d_train,
                                             inst_seed, threads);
        for (TrainingExample& ex : res.examples) dataset.push_back(std::move(ex));
        std::cerr << id << ": " << res.steps.size() << " steps, " << dataset.size()
                  << " examples so far\n";
    }
    save_dataset(out, dataset);
    std::cout << out << " " << dataset.size() << " examples\n";
    return 0;
}

int cmd_train(const std::string& dataset_path, const std::string& kind, double lr, int batch,
              int steps, uint64_t seed, bool no_augment, int threads, const ArchConfig& arch,
              const std::string& out) {
    std::vector<TrainingExample> data = load_dataset(dataset_path);
    TrainConfig cfg;
    cfg.kind = model_kind_from_name(kind);
    cfg.arch = arch;
    cfg.lr = lr;
    cfg.batch = batch;
    cfg.steps = steps;
    cfg.seed = seed;
    cfg.augment = !no_augment;
    cfg.threads = threads;
    TrainResult res = train(data, cfg);
    save_model(out, res.model);
    std::cout << "examples " << data.size() << " initial_loss " << fmt_g17(res.initial_loss)
              << " final_loss " << fmt_g17(res.final_loss) << "\n";
    return 0;
}

int cmd_eval(const std::string& config_path, std::string out_dir) {
    auto cfg = parse_kv_config(config_path);
    auto get = [&](const std::string& key, const std::string& fallback) {
        auto it = cfg.find(key);
        return it == cfg.end() ? fallback : it->second;
    };
    std::vector<std::string> files = list_instances(cfg.at("instances"));
    std::vector<std::string> methods;
    {
        std::stringstream ss(cfg.at("methods"));
        std::string m;
        while (std::getline(ss, m, ',')) {
            if (!m.empty()) methods.push_back(m);
        }
    }
    int k = std::stoi(get("k", "10"));
    long sub_steps = std::stol(get("sub_steps", "20000"));
    long budget_steps = std::stol(get("budget_steps", "-1"));
    double budget_wall = std::stod(get("budget_wall", "0"));
    int seeds = std::stoi(get("seeds", "5"));
    uint64_t seed0 = std::stoull(get("seed0", "1"));
    long init_L = std::stol(get("init_L", "100"));
    int sectors = std::stoi(get("sectors", "10"));
    if (out_dir.empty()) out_dir = get("out_dir", "runs");
    fs::create_directories(out_dir);

    SubsolverBudget budget;
    budget.max_steps = sub_steps;
    StopCriteria stop;
    stop.max_steps = budget_steps;
    stop.max_wall = budget_wall;

    // evaluation runs stay single-threaded to keep wall times honest
    for (const std::string& file : files) {
        Instance inst = load_instance(file);
        std::string id = fs::path(file).stem().string();
        for (int si = 0; si < seeds; ++si) {
            uint64_t seed = seed0 + static_cast<uint64_t>(si);
            Solution init = initialize(inst, init_L, sectors, seed);
            for (const std::string& method : methods) {
                SelectorSpec sel = resolve_selector(method, 1);
                if (sel.selector.kind == SelectorKind::Learned) sel.selector.model = &sel.model;
                RunResult res = run(inst, init, sel.selector, SubsolverConfig{}, k, budget, stop, seed);
                res.trace.instance_id = id;
                std::string label = method;
                size_t colon = label.find(':');
                if (colon != std::string::npos) label = label.substr(0, colon);
                res.trace.method_id = label;
                std::string trace_path =
                    out_dir + "/" + id + "__" + label + "__s" + std::to_string(seed) + ".trace.jsonl";
                save_trace(trace_path, res.trace);
                std::cerr << trace_path << " final " << fmt_g17(res.solution.cost) << "\n";
            }
        }
    }
    std::cout << out_dir << "\n";
    return 0;
}

int cmd_report(const std::string& traces_dir, const std::string& reference, double q,
               const std::string& out_dir) {
    std::vector<RunTrace> traces;
    for (const auto& e : fs::directory_iterator(traces_dir)) {
        if (e.path().string().ends_with(".trace.jsonl")) traces.push_back(load_trace(e.path().string()));
    }
    if (traces.empty()) throw std::runtime_error("no .trace.jsonl files in " + traces_dir);
    ReportConfig cfg;
    cfg.reference_method = reference;
    cfg.speedup_q = q;
    write_report(traces, cfg, out_dir);
    std::cout << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vrpd: delegation-based vehicle routing solver"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate problem instances");
    std::string g_variant = "cvrp", g_dist = "uniform", g_out = ".";
    int g_n = 500, g_nc = 3, g_count = 1;
    uint64_t g_seed = 1;
    gen->add_option("--variant", g_variant, "cvrp | cvrptw | vrpmpd");
    gen->add_option("--dist", g_dist, "uniform | clustered | mixed");
    gen->add_option("--n", g_n, "city count")->required();
    gen->add_option("--nc", g_nc, "cluster count");
    gen->add_option("--seed", g_seed, "base seed");
    gen->add_option("--count", g_count, "instances to emit (seed increments)");
    gen->add_option("--out-dir", g_out, "output directory");

    // init
    auto* init = app.add_subcommand("init", "build an initial solution");
    std::string i_instance, i_out = "init.sol.json";
    long i_L = 100;
    int i_sectors = 10;
    uint64_t i_seed = 1;
    init->add_option("--instance", i_instance)->required();
    init->add_option("--L", i_L, "per-sector subsolver step budget; 0 = random chaining");
    init->add_option("--sectors", i_sectors);
    init->add_option("--seed", i_seed);
    init->add_option("--out", i_out);

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "run the delegation loop");
    std::string s_instance, s_init = "sweep:100", s_selector = "random", s_subsolver = "builtin";
    std::string s_trace, s_out;
    int s_k = 10, s_sectors = 10, s_threads = 1;
    long s_budget_steps = -1, s_sub_steps = 20000;
    double s_budget_wall = 0, s_sub_wall = 0, s_sub_timeout = 120;
    uint64_t s_seed = 1;
    solve_cmd->add_option("--instance", s_instance)->required();
    solve_cmd->add_option("--init", s_init, "solution JSON path or sweep:L");
    solve_cmd->add_option("--selector", s_selector,
                          "random | count | maxmin | oracle | learned:model.json");
    solve_cmd->add_option("--k", s_k, "routes per subproblem");
    solve_cmd->add_option("--subsolver", s_subsolver, "builtin | external:CMD with {in} {out}");
    solve_cmd->add_option("--budget-steps", s_budget_steps, "delegation steps; -1 = unbounded");
    solve_cmd->add_option("--budget-wall", s_budget_wall, "delegation wall budget seconds");
    solve_cmd->add_option("--sub-steps", s_sub_steps, "subsolver step budget per call");
    solve_cmd->add_option("--sub-wall", s_sub_wall, "subsolver wall budget per call");
    solve_cmd->add_option("--sub-timeout", s_sub_timeout, "external solver timeout seconds");
    solve_cmd->add_option("--seed", s_seed);
    solve_cmd->add_option("--sectors", s_sectors, "sectors for sweep: init");
    solve_cmd->add_option("--threads", s_threads, "oracle enumeration threads");
    solve_cmd->add_option("--trace-out", s_trace, "JSON-lines trace output");
    solve_cmd->add_option("--out", s_out, "final solution JSON");

    // datagen
    auto* dg = app.add_subcommand("datagen", "oracle-label training data");
    std::string d_instances, d_out = "dataset.jsonl";
    int d_k = 10, d_dtrain = 30, d_sectors = 10, d_threads = 1;
    long d_sub_steps = 20000, d_init_L = 100;
    uint64_t d_seed = 1;
    dg->add_option("--instances", d_instances, "directory or comma-separated files")->required();
    dg->add_option("--k", d_k);
    dg->add_option("--dtrain", d_dtrain, "oracle steps per instance");
    dg->add_option("--sub-steps", d_sub_steps);
    dg->add_option("--init-L", d_init_L);
    dg->add_option("--sectors", d_sectors);
    dg->add_option("--seed", d_seed);
    dg->add_option("--threads", d_threads, "parallel candidate solves");
    dg->add_option("--out", d_out);

    // train
    auto* tr = app.add_subcommand("train", "fit a cost regressor");
    std::string t_dataset, t_kind = "mlp", t_out = "model.json";
    double t_lr = 0.001;
    int t_batch = 512, t_steps = 2000, t_threads = 1;
    uint64_t t_seed = 1;
    bool t_no_augment = false;
    ArchConfig t_arch;
    tr->add_option("--dataset", t_dataset)->required();
    tr->add_option("--kind", t_kind, "linear | mlp | set-attention");
    tr->add_option("--lr", t_lr);
    tr->add_option("--batch", t_batch);
    tr->add_option("--steps", t_steps);
    tr->add_option("--seed", t_seed);
    tr->add_flag("--no-augment", t_no_augment, "disable rotation/flip augmentation");
    tr->add_option("--threads", t_threads);
    tr->add_option("--d-model", t_arch.d_model);
    tr->add_option("--heads", t_arch.n_heads);
    tr->add_option("--layers", t_arch.n_layers);
    tr->add_option("--dff", t_arch.d_ff);
    tr->add_option("--hidden", t_arch.hidden);
    tr->add_option("--out", t_out);

    // eval
    auto* ev = app.add_subcommand("eval", "run a method matrix from a key=value config");
    std::string e_config, e_out;
    ev->add_option("--config", e_config)->required();
    ev->add_option("--out-dir", e_out, "overrides out_dir from the config");

    // report
    auto* rp = app.add_subcommand("report", "CSV tables and SVG curves from traces");
    std::string r_traces, r_reference, r_out = "report";
    double r_q = 0.95;
    rp->add_option("--traces", r_traces)->required();
    rp->add_option("--reference", r_reference, "reference method for curves");
    rp->add_option("--q", r_q, "speedup quality fraction");
    rp->add_option("--out-dir", r_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(g_variant, g_dist, g_n, g_nc, g_seed, g_count, g_out);
        if (init->parsed()) return cmd_init(i_instance, i_L, i_sectors, i_seed, i_out);
        if (solve_cmd->parsed()) {
            return cmd_solve(s_instance, s_init, s_selector, s_k, s_subsolver, s_budget_steps,
                             s_budget_wall, s_sub_steps, s_sub_wall, s_sub_timeout, s_seed,
                             s_sectors, s_threads, s_trace, s_out);
        }
        if (dg->parsed()) {
            return cmd_datagen(d_instances, d_k, d_dtrain, d_sub_steps, d_init_L, d_sectors, d_seed,
                               d_threads, d_out);
        }
        if (tr->parsed()) {
            return cmd_train(t_dataset, t_kind, t_lr, t_batch, t_steps, t_seed, t_no_augment,
                             t_threads, t_arch, t_out);
        }
        if (ev->parsed()) return cmd_eval(e_config, e_out);
        if (rp->parsed()) return cmd_report(r_traces, r_reference, r_q, r_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
