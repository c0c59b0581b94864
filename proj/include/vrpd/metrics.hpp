#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vrpd/delegation.hpp"

namespace vrpd {

// Piecewise-constant cost reconstruction: the last event at or before t.
double cost_at(const RunTrace& trace, double t);

// cost_at(X, t) - cost_at(Y, t); traces must share instance and init cost.
double improvement_over(const RunTrace& y, const RunTrace& x, double t);

// init - q * (init - final); empty when the trace never improves.
std::optional<double> quality_at_fraction(const RunTrace& trace, double q);

// First-crossing time of X at its own q-threshold divided by Y's; empty when
// Y never reaches the threshold.
std::optional<double> speedup_at(const RunTrace& y, const RunTrace& x, double q);

struct ReportConfig {
    std::string reference_method;  // X in the curves; defaults to first method
    int time_grid = 50;
    std::vector<double> quality_grid;  // default 0.50..1.00
    double speedup_q = 0.95;
};

// CSV tables and SVG curves; byte-identical for identical inputs.
void write_report(const std::vector<RunTrace>& traces, const ReportConfig& cfg,
                  const std::string& out_dir);

}  // namespace vrpd
