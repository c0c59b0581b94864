#include "vrpd/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace vrpd {

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string instance_to_json(const Instance& inst) {
    std::string out;
    out.reserve(64 + inst.cities.size() * 160);
    out += "{\"variant\":\"" + variant_name(inst.variant) + "\",";
    out += "\"capacity\":" + std::to_string(inst.capacity) + ",";
    out += "\"depot\":{\"x\":" + fmt_g17(inst.depot.x) + ",\"y\":" + fmt_g17(inst.depot.y) +
           ",\"e\":" + fmt_g17(inst.depot.tw_early) + ",\"l\":" + fmt_g17(inst.depot.tw_late) + "},";
    out += "\"cities\":[";
    for (size_t i = 0; i < inst.cities.size(); ++i) {
        const City& c = inst.cities[i];
        if (i) out += ",";
        out += "{\"x\":" + fmt_g17(c.x) + ",\"y\":" + fmt_g17(c.y) +
               ",\"demand\":" + std::to_string(c.demand) + ",\"pickup\":" + std::to_string(c.pickup) +
               ",\"e\":" + fmt_g17(c.tw_early) + ",\"l\":" + fmt_g17(c.tw_late) +
               ",\"service\":" + fmt_g17(c.service) + "}";
    }
    out += "]}";
    return out;
}

Instance instance_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Instance inst;
    inst.variant = variant_from_name(j.at("variant").get<std::string>());
    inst.capacity = j.at("capacity").get<int>();
    const auto& d = j.at("depot");
    inst.depot = Depot{d.at("x").get<double>(), d.at("y").get<double>(), d.at("e").get<double>(),
                       d.at("l").get<double>()};
    for (const auto& jc : j.at("cities")) {
        City c;
        c.x = jc.at("x").get<double>();
        c.y = jc.at("y").get<double>();
        c.demand = jc.at("demand").get<int>();
        c.pickup = jc.at("pickup").get<int>();
        c.tw_early = jc.at("e").get<double>();
        c.tw_late = jc.at("l").get<double>();
        c.service = jc.at("service").get<double>();
        inst.cities.push_back(c);
    }
    if (inst.n() < 1) throw std::invalid_argument("instance has no cities");
    if (inst.capacity <= 0) throw std::invalid_argument("instance capacity must be positive");
    return inst;
}

std::string solution_to_json(const Solution& sol) {
    std::string out = "{\"routes\":[";
    for (size_t r = 0; r < sol.routes.size(); ++r) {
        if (r) out += ",";
        out += "[";
        for (size_t i = 0; i < sol.routes[r].cities.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(sol.routes[r].cities[i]);
        }
        out += "]";
    }
    out += "]}";
    return out;
}

Solution solution_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Solution sol;
    for (const auto& jr : j.at("routes")) {
        Route r;
        for (const auto& c : jr) r.cities.push_back(c.get<int>());
        sol.routes.push_back(std::move(r));
    }
    return sol;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Instance load_instance(const std::string& path) { return instance_from_json(read_file(path)); }
void save_instance(const std::string& path, const Instance& inst) {
    write_file(path, instance_to_json(inst) + "\n");
}
Solution load_solution(const std::string& path) { return solution_from_json(read_file(path)); }
void save_solution(const std::string& path, const Solution& sol) {
    write_file(path, solution_to_json(sol) + "\n");
}

}  // namespace vrpd
