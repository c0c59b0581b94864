#include "vrpd/subsolver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <csignal>
#include <sys/wait.h>
#include <unistd.h>

#include "vrpd/json_io.hpp"
#include "vrpd/rng.hpp"

namespace vrpd {

namespace {

constexpr uint64_t kSolverStream = 0xB17B5;
constexpr double kPi = 3.1415926535897932384626433832795;

struct LocalSearch {
    const Instance& inst;
    std::vector<std::vector<int>> routes;
    std::vector<double> costs;   // per-route cached cost
    std::vector<long> demands;   // per-route demand sum (CVRP fast path)
    long steps = 0;

    explicit LocalSearch(const Instance& instance) : inst(instance) {}

    double node_dist(int i, int j) const { return edge_cost(inst, i, j); }

    double recompute_cost(const std::vector<int>& r) const {
        Route tmp{r};
        return route_cost(inst, tmp);
    }

    long demand_sum(const std::vector<int>& r) const {
        long s = 0;
        for (int c : r) s += inst.city(c).demand;
        return s;
    }

    bool route_feasible(const std::vector<int>& r) const {
        Route tmp{r};
        return static_cast<bool>(validate_route(inst, tmp));
    }

    void refresh(size_t idx) {
        costs[idx] = recompute_cost(routes[idx]);
        demands[idx] = demand_sum(routes[idx]);
    }

    void drop_empty() {
        for (size_t i = routes.size(); i-- > 0;) {
            if (routes[i].empty()) {
                routes.erase(routes.begin() + static_cast<long>(i));
                costs.erase(costs.begin() + static_cast<long>(i));
                demands.erase(demands.begin() + static_cast<long>(i));
            }
        }
    }

    double total_cost() const {
        double t = 0.0;
        for (double c : costs) t += c;
        return t;
    }

    int at(const std::vector<int>& r, int pos) const {  // pos -1 or len => depot
        if (pos < 0 || pos >= static_cast<int>(r.size())) return 0;
        return r[static_cast<size_t>(pos)];
    }

    // Feasibility of a candidate route; CVRP uses the precomputed demand sum.
    bool candidate_feasible(const std::vector<int>& r, long demand) const {
        if (r.empty()) return true;
        if (inst.variant == Variant::CVRP) return demand <= inst.capacity;
        return route_feasible(r);
    }

    // One first-improvement scan block; returns true if a move was applied.
    bool scan_block() {
        if (relocate_scan()) return true;
        if (swap_scan()) return true;
        if (two_opt_scan()) return true;
        if (two_opt_star_scan()) return true;
        return false;
    }

    bool relocate_scan() {
        int n_routes = static_cast<int>(routes.size());
        for (int a = 0; a < n_routes; ++a) {
            int la = static_cast<int>(routes[a].size());
            for (int i = 0; i < la; ++i) {
                int c = routes[a][static_cast<size_t>(i)];
                double remove_delta = node_dist(at(routes[a], i - 1), at(routes[a], i + 1)) -
                                      node_dist(at(routes[a], i - 1), c) -
                                      node_dist(c, at(routes[a], i + 1));
                for (int b = 0; b <= n_routes; ++b) {
                    if (b == n_routes) {
                        // relocate into a fresh route
                        ++steps;
                        if (la <= 1) continue;
                        double delta = remove_delta + 2.0 * node_dist(0, c);
                        if (delta >= -kCostTolerance) continue;
                        std::vector<int> na = routes[a];
                        na.erase(na.begin() + i);
                        std::vector<int> nb{c};
                        if (!candidate_feasible(na, demands[a] - inst.city(c).demand)) continue;
                        if (!candidate_feasible(nb, inst.city(c).demand)) continue;
                        apply_two(a, std::move(na), -1, std::move(nb));
                        return true;
                    }
                    int lb = static_cast<int>(routes[b].size());
                    for (int j = 0; j <= lb; ++j) {
                        if (b == a && (j == i || j == i + 1)) continue;  // no-op
                        ++steps;
                        double delta;
                        if (b == a) {
                            // same-route shift; insertion index after removal
                            int jj = j > i ? j - 1 : j;
                            std::vector<int> na = routes[a];
                            na.erase(na.begin() + i);
                            na.insert(na.begin() + jj, c);
                            double nc = recompute_cost(na);
                            delta = nc - costs[a];
                            if (delta >= -kCostTolerance) continue;
                            if (!candidate_feasible(na, demands[a])) continue;
                            routes[a] = std::move(na);
                            refresh(static_cast<size_t>(a));
                            return true;
                        }
                        delta = remove_delta + node_dist(at(routes[b], j - 1), c) +
                                node_dist(c, at(routes[b], j)) -
                                node_dist(at(routes[b], j - 1), at(routes[b], j));
                        if (delta >= -kCostTolerance) continue;
                        long db = demands[b] + inst.city(c).demand;
                        std::vector<int> nb = routes[b];
                        nb.insert(nb.begin() + j, c);
                        if (!candidate_feasible(nb, db)) continue;
                        std::vector<int> na = routes[a];
                        na.erase(na.begin() + i);
                        if (!candidate_feasible(na, demands[a] - inst.city(c).demand)) continue;
                        apply_two(a, std::move(na), b, std::move(nb));
                        return true;
                    }
                }
            }
        }
        return false;
    }

    bool swap_scan() {
        int n_routes = static_cast<int>(routes.size());
        for (int a = 0; a < n_routes; ++a) {
            int la = static_cast<int>(routes[a].size());
            for (int i = 0; i < la; ++i) {
                for (int b = a; b < n_routes; ++b) {
                    int lb = static_cast<int>(routes[b].size());
                    for (int j = (b == a ? i + 1 : 0); j < lb; ++j) {
                        ++steps;
                        int c1 = routes[a][static_cast<size_t>(i)];
                        int c2 = routes[b][static_cast<size_t>(j)];
                        if (b == a) {
                            std::vector<int> na = routes[a];
                            std::swap(na[static_cast<size_t>(i)], na[static_cast<size_t>(j)]);
                            double delta = recompute_cost(na) - costs[a];
                            if (delta >= -kCostTolerance) continue;
                            if (!candidate_feasible(na, demands[a])) continue;
                            routes[a] = std::move(na);
                            refresh(static_cast<size_t>(a));
                            return true;
                        }
                        double delta = -node_dist(at(routes[a], i - 1), c1) -
                                       node_dist(c1, at(routes[a], i + 1)) -
                                       node_dist(at(routes[b], j - 1), c2) -
                                       node_dist(c2, at(routes[b], j + 1)) +
                                       node_dist(at(routes[a], i - 1), c2) +
                                       node_dist(c2, at(routes[a], i + 1)) +
                                       node_dist(at(routes[b], j - 1), c1) +
                                       node_dist(c1, at(routes[b], j + 1));
                        if (delta >= -kCostTolerance) continue;
                        long da = demands[a] - inst.city(c1).demand + inst.city(c2).demand;
                        long db = demands[b] - inst.city(c2).demand + inst.city(c1).demand;
                        std::vector<int> na = routes[a];
                        std::vector<int> nb = routes[b];
                        na[static_cast<size_t>(i)] = c2;
                        nb[static_cast<size_t>(j)] = c1;
                        if (!candidate_feasible(na, da) || !candidate_feasible(nb, db)) continue;
                        apply_two(a, std::move(na), b, std::move(nb));
                        return true;
                    }
                }
            }
        }
        return false;
    }

    bool two_opt_scan() {
        int n_routes = static_cast<int>(routes.size());
        for (int a = 0; a < n_routes; ++a) {
            int la = static_cast<int>(routes[a].size());
            for (int i = 0; i < la - 1; ++i) {
                for (int j = i + 1; j < la; ++j) {
                    ++steps;
                    int ci = routes[a][static_cast<size_t>(i)];
                    int cj = routes[a][static_cast<size_t>(j)];
                    double delta = -node_dist(at(routes[a], i - 1), ci) -
                                   node_dist(cj, at(routes[a], j + 1)) +
                                   node_dist(at(routes[a], i - 1), cj) +
                                   node_dist(ci, at(routes[a], j + 1));
                    if (delta >= -kCostTolerance) continue;
                    std::vector<int> na = routes[a];
                    std::reverse(na.begin() + i, na.begin() + j + 1);
                    // reversal keeps the demand sum; only ordered variants recheck
                    if (inst.variant != Variant::CVRP && !route_feasible(na)) continue;
                    routes[a] = std::move(na);
                    refresh(static_cast<size_t>(a));
                    return true;
                }
            }
        }
        return false;
    }

    bool two_opt_star_scan() {
        int n_routes = static_cast<int>(routes.size());
        for (int a = 0; a < n_routes; ++a) {
            int la = static_cast<int>(routes[a].size());
            for (int b = a + 1; b < n_routes; ++b) {
                int lb = static_cast<int>(routes[b].size());
                for (int i = 0; i <= la; ++i) {
                    for (int j = 0; j <= lb; ++j) {
                        if (i == 0 && j == 0) continue;      // relabels routes
                        if (i == la && j == lb) continue;    // no-op
                        ++steps;
                        double delta = -node_dist(at(routes[a], i - 1), at(routes[a], i)) -
                                       node_dist(at(routes[b], j - 1), at(routes[b], j)) +
                                       node_dist(at(routes[a], i - 1), at(routes[b], j)) +
                                       node_dist(at(routes[b], j - 1), at(routes[a], i));
                        if (delta >= -kCostTolerance) continue;
                        std::vector<int> na(routes[a].begin(), routes[a].begin() + i);
                        na.insert(na.end(), routes[b].begin() + j, routes[b].end());
                        std::vector<int> nb(routes[b].begin(), routes[b].begin() + j);
                        nb.insert(nb.end(), routes[a].begin() + i, routes[a].end());
                        if (!candidate_feasible(na, demand_sum(na))) continue;
                        if (!candidate_feasible(nb, demand_sum(nb))) continue;
                        apply_two(a, std::move(na), b, std::move(nb));
                        return true;
                    }
                }
            }
        }
        return false;
    }

    void apply_two(int a, std::vector<int> na, int b, std::vector<int> nb) {
        routes[static_cast<size_t>(a)] = std::move(na);
        refresh(static_cast<size_t>(a));
        if (b < 0) {
            routes.push_back(std::move(nb));
            costs.push_back(0.0);
            demands.push_back(0);
            refresh(routes.size() - 1);
        } else {
            routes[static_cast<size_t>(b)] = std::move(nb);
            refresh(static_cast<size_t>(b));
        }
        drop_empty();
    }
};

// Sweep order around the depot with a seeded angular offset, greedy chaining
// into feasible routes, then a nearest-neighbor reorder of each route when
// that keeps feasibility and does not worsen cost.
std::vector<std::vector<int>> construct(const Instance& inst, uint64_t seed) {
    RngStream rng(seed, kSolverStream);
    double theta0 = rng.next_double() * 2.0 * kPi;

    std::vector<std::pair<double, int>> order;
    order.reserve(static_cast<size_t>(inst.n()));
    for (int c = 1; c <= inst.n(); ++c) {
        double a = std::atan2(inst.city(c).y - inst.depot.y, inst.city(c).x - inst.depot.x);
        a -= theta0;
        while (a < 0.0) a += 2.0 * kPi;
        while (a >= 2.0 * kPi) a -= 2.0 * kPi;
        order.emplace_back(a, c);
    }
    std::sort(order.begin(), order.end());

    std::vector<std::vector<int>> routes;
    std::vector<int> cur;
    auto feasible = [&](const std::vector<int>& r) {
        Route tmp{r};
        return static_cast<bool>(validate_route(inst, tmp));
    };
    for (auto& [angle, c] : order) {
        std::vector<int> ext = cur;
        ext.push_back(c);
        if (feasible(ext)) {
            cur = std::move(ext);
            continue;
        }
        if (!cur.empty()) routes.push_back(std::move(cur));
        cur = {c};
        if (!feasible(cur)) {
            throw std::runtime_error("solve: city " + std::to_string(c) +
                                     " infeasible even as a solo route");
        }
    }
    if (!cur.empty()) routes.push_back(std::move(cur));

    for (std::vector<int>& r : routes) {
        if (r.size() < 3) continue;
        std::vector<int> nn;
        std::vector<char> used(r.size(), 0);
        int prev = 0;
        for (size_t step = 0; step < r.size(); ++step) {
            int best = -1;
            double best_d = 0.0;
            for (size_t t = 0; t < r.size(); ++t) {
                if (used[t]) continue;
                double d = edge_cost(inst, prev, r[t]);
                if (best < 0 || d < best_d) {
                    best = static_cast<int>(t);
                    best_d = d;
                }
            }
            used[static_cast<size_t>(best)] = 1;
            nn.push_back(r[static_cast<size_t>(best)]);
            prev = r[static_cast<size_t>(best)];
        }
        Route old_r{r}, nn_r{nn};
        if (validate_route(inst, nn_r) && route_cost(inst, nn_r) <= route_cost(inst, old_r)) {
            r = std::move(nn);
        }
    }
    return routes;
}

}  // namespace

Solution solve_builtin(const SubproblemView& view, const SubsolverBudget& budget, uint64_t seed) {
    if (!budget.bounded()) throw std::invalid_argument("solve: budget must bound steps or wall time");
    auto t_start = std::chrono::steady_clock::now();

    LocalSearch ls(view.sub);
    ls.routes = construct(view.sub, seed);
    ls.costs.resize(ls.routes.size());
    ls.demands.resize(ls.routes.size());
    for (size_t i = 0; i < ls.routes.size(); ++i) ls.refresh(i);

    while (true) {
        if (budget.max_steps >= 0 && ls.steps >= budget.max_steps) break;
        if (budget.max_wall > 0.0) {
            double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
            if (elapsed >= budget.max_wall) break;
        }
        if (!ls.scan_block()) break;  // local optimum
    }

    Solution out;
    for (std::vector<int>& r : ls.routes) out.routes.push_back(Route{std::move(r)});
    out.cost = solution_cost(view.sub, out);
    return out;
}

void write_problem_file(const SubproblemView& view, const std::string& path) {
    std::ostringstream os;
    os << "NAME : vrpd_sub\n";
    os << "TYPE : CVRP\n";
    os << "DIMENSION : " << (view.n() + 1) << "\n";
    os << "EDGE_WEIGHT_TYPE : EUC_2D\n";
    os << "CAPACITY : " << view.sub.capacity << "\n";
    os << "NODE_COORD_SECTION\n";
    auto scaled = [](double v) { return static_cast<long long>(std::llround(v * 1e6)); };
    os << "1 " << scaled(view.sub.depot.x) << " " << scaled(view.sub.depot.y) << "\n";
    for (int i = 1; i <= view.n(); ++i) {
        os << (i + 1) << " " << scaled(view.sub.city(i).x) << " " << scaled(view.sub.city(i).y) << "\n";
    }
    os << "DEMAND_SECTION\n";
    os << "1 0\n";
    for (int i = 1; i <= view.n(); ++i) {
        os << (i + 1) << " " << view.sub.city(i).demand << "\n";
    }
    os << "DEPOT_SECTION\n1\n-1\nEOF\n";
    write_file(path, os.str());
}

Solution parse_solution_file(const SubproblemView& view, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ExternalError("cannot open solution file: " + path);
    Solution sol;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        std::string body = line;
        size_t colon = body.find(':');
        if (body.rfind("Route", 0) == 0 && colon != std::string::npos) {
            body = body.substr(colon + 1);
        }
        std::istringstream ss(body);
        std::string tok;
        Route r;
        bool skip = false;
        while (ss >> tok) {
            if (tok[0] == '#' || tok == "Cost" || tok == "cost") {
                skip = r.cities.empty();
                break;
            }
            try {
                size_t pos = 0;
                int idx = std::stoi(tok, &pos);
                if (pos != tok.size()) throw std::invalid_argument(tok);
                if (idx < 1 || idx > view.n()) {
                    throw ExternalError("solution file line " + std::to_string(line_no) +
                                        ": city index " + tok + " out of range 1.." +
                                        std::to_string(view.n()));
                }
                r.cities.push_back(idx);
            } catch (const std::invalid_argument&) {
                throw ExternalError("solution file line " + std::to_string(line_no) +
                                    ": not a city index: '" + tok + "'");
            }
        }
        if (!skip && !r.cities.empty()) sol.routes.push_back(std::move(r));
    }
    if (sol.routes.empty()) throw ExternalError("solution file has no routes: " + path);
    sol.cost = solution_cost(view.sub, sol);
    return sol;
}

namespace {

class ProcessGate {
public:
    explicit ProcessGate(int limit) : limit_(limit > 0 ? limit : static_cast<int>(std::thread::hardware_concurrency())) {
        if (limit_ < 1) limit_ = 1;
    }
    void acquire() {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return active_ < limit_; });
        ++active_;
    }
    void release() {
        std::lock_guard lk(mu_);
        --active_;
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int limit_;
    int active_ = 0;
};

int run_command(const std::string& cmd, double timeout_seconds) {
    pid_t pid = fork();
    if (pid < 0) throw ExternalError("fork failed");
    if (pid == 0) {
        execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
    while (true) {
        int status = 0;
        pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            if (WIFEXITED(status)) return WEXITSTATUS(status);
            return -1;
        }
        if (r < 0) throw ExternalError("waitpid failed");
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            throw ExternalError("external solver timed out after " +
                                std::to_string(timeout_seconds) + "s");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

std::string substitute(const std::string& tmpl, const std::string& in_path,
                       const std::string& out_path) {
    std::string cmd = tmpl;
    auto replace_all = [&](const std::string& what, const std::string& with) {
        size_t pos = 0;
        bool found = false;
        while ((pos = cmd.find(what, pos)) != std::string::npos) {
            cmd.replace(pos, what.size(), with);
            pos += with.size();
            found = true;
        }
        return found;
    };
    bool has_in = replace_all("{in}", in_path);
    bool has_out = replace_all("{out}", out_path);
    if (!has_in || !has_out) {
        throw std::invalid_argument("external command template must contain {in} and {out}");
    }
    return cmd;
}

Solution solve_external(const SubsolverConfig& cfg, const SubproblemView& view, uint64_t seed) {
    if (view.sub.variant != Variant::CVRP) {
        throw ExternalError("external subsolver supports CVRP only");
    }
    static ProcessGate gate(cfg.max_processes);
    std::string tag = std::to_string(mix64(seed ^ city_set_signature(view.orig_index)));
    std::string in_path = cfg.work_dir + "/vrpd_" + tag + ".vrp";
    std::string out_path = cfg.work_dir + "/vrpd_" + tag + ".sol";
    write_problem_file(view, in_path);
    std::string cmd = substitute(cfg.command_template, in_path, out_path);

    gate.acquire();
    int rc;
    try {
        rc = run_command(cmd, cfg.timeout_seconds);
    } catch (...) {
        gate.release();
        std::remove(in_path.c_str());
        throw;
    }
    gate.release();
    if (rc != 0) {
        std::remove(in_path.c_str());
        throw ExternalError("external solver exited with status " + std::to_string(rc));
    }
    Solution sol = parse_solution_file(view, out_path);
    if (Verdict v = validate_solution(view.sub, sol); !v) {
        throw ExternalError("external solution infeasible: " + v.detail);
    }
    std::remove(in_path.c_str());
    std::remove(out_path.c_str());
    return sol;
}

}  // namespace

Solution solve(const SubsolverConfig& cfg, const SubproblemView& view, const SubsolverBudget& budget,
               uint64_t seed) {
    if (cfg.kind == SubsolverKind::Builtin) return solve_builtin(view, budget, seed);
    return solve_external(cfg, view, seed);
}

}  // namespace vrpd
