#pragma once

#include <string>

#include "vrpd/core.hpp"

namespace vrpd {

// Fixed-order schema, numbers with 17 significant digits:
//   instance = {variant, capacity, depot:{x,y,e,l}, cities:[{x,y,demand,pickup,e,l,service}]}
//   solution = {routes:[[city indices]]}
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);

std::string solution_to_json(const Solution& sol);
Solution solution_from_json(const std::string& text);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

Instance load_instance(const std::string& path);
void save_instance(const std::string& path, const Instance& inst);
Solution load_solution(const std::string& path);
void save_solution(const std::string& path, const Solution& sol);

// printf %.17g; shared by every serializer that emits doubles.
std::string fmt_g17(double v);

}  // namespace vrpd
