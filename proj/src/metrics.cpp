#include "vrpd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>

#include "vrpd/json_io.hpp"

namespace vrpd {

double cost_at(const RunTrace& trace, double t) {
    if (t < 0.0) throw std::invalid_argument("cost_at: t must be >= 0");
    if (trace.events.empty()) throw std::invalid_argument("cost_at: empty trace");
    double cost = trace.events.front().cost;  // initialization cost
    for (const TraceEvent& e : trace.events) {
        if (e.t <= t) cost = e.cost;
        else break;
    }
    return cost;
}

double improvement_over(const RunTrace& y, const RunTrace& x, double t) {
    if (y.instance_id != x.instance_id) {
        throw std::invalid_argument("improvement_over: traces from different instances");
    }
    if (std::fabs(y.init_cost() - x.init_cost()) > 1e-9 * std::max(1.0, std::fabs(x.init_cost()))) {
        throw std::invalid_argument("improvement_over: initialization costs differ");
    }
    return cost_at(x, t) - cost_at(y, t);
}

std::optional<double> quality_at_fraction(const RunTrace& trace, double q) {
    if (q <= 0.0 || q > 1.0) throw std::invalid_argument("quality_at_fraction: q in (0, 1]");
    double init = trace.init_cost();
    double final_cost = trace.final_cost();
    if (!(init - final_cost > kCostTolerance)) return std::nullopt;  // no improving event
    return init - q * (init - final_cost);
}

namespace {

// First event time at which the cost reaches the threshold.
std::optional<double> first_crossing(const RunTrace& trace, double threshold) {
    for (const TraceEvent& e : trace.events) {
        if (e.cost <= threshold + kCostTolerance) return e.t;
    }
    return std::nullopt;
}

}  // namespace

std::optional<double> speedup_at(const RunTrace& y, const RunTrace& x, double q) {
    auto threshold = quality_at_fraction(x, q);
    if (!threshold) return std::nullopt;
    auto tx = first_crossing(x, *threshold);
    auto ty = first_crossing(y, *threshold);
    if (!tx || !ty) return std::nullopt;
    if (*ty <= 0.0) return std::nullopt;  // degenerate crossing at initialization
    return *tx / *ty;
}

namespace {

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct CurvePoint {
    double x;
    double mean;
    double stderr_;
    int n;
};

struct Curve {
    std::string label;
    std::vector<CurvePoint> pts;
};

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string svg_plot(const std::vector<Curve>& curves, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel) {
    const double W = 720, H = 440, ml = 70, mr = 160, mt = 40, mb = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const Curve& c : curves) {
        for (const CurvePoint& p : c.pts) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.mean - p.stderr_);
            ymax = std::max(ymax, p.mean + p.stderr_);
        }
    }
    if (xmin > xmax) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
    if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
    if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt6(W) + "\" height=\"" +
                    fmt6(H) + "\" viewBox=\"0 0 " + fmt6(W) + " " + fmt6(H) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + fmt6(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + title +
         "</text>\n";
    // axes
    s += "<line x1=\"" + fmt6(ml) + "\" y1=\"" + fmt6(H - mb) + "\" x2=\"" + fmt6(W - mr) +
         "\" y2=\"" + fmt6(H - mb) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + fmt6(ml) + "\" y1=\"" + fmt6(mt) + "\" x2=\"" + fmt6(ml) + "\" y2=\"" +
         fmt6(H - mb) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        double fx = xmin + (xmax - xmin) * i / 4.0;
        double fy = ymin + (ymax - ymin) * i / 4.0;
        s += "<text x=\"" + fmt6(px(fx)) + "\" y=\"" + fmt6(H - mb + 18) +
             "\" text-anchor=\"middle\" font-size=\"11\">" + fmt6(fx) + "</text>\n";
        s += "<text x=\"" + fmt6(ml - 8) + "\" y=\"" + fmt6(py(fy) + 4) +
             "\" text-anchor=\"end\" font-size=\"11\">" + fmt6(fy) + "</text>\n";
        s += "<line x1=\"" + fmt6(ml) + "\" y1=\"" + fmt6(py(fy)) + "\" x2=\"" + fmt6(W - mr) +
             "\" y2=\"" + fmt6(py(fy)) + "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    }
    s += "<text x=\"" + fmt6((ml + W - mr) / 2) + "\" y=\"" + fmt6(H - 12) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + xlabel + "</text>\n";
    s += "<text x=\"16\" y=\"" + fmt6((mt + H - mb) / 2) +
         "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
         fmt6((mt + H - mb) / 2) + ")\">" + ylabel + "</text>\n";

    for (size_t ci = 0; ci < curves.size(); ++ci) {
        const Curve& c = curves[ci];
        const char* color = kPalette[ci % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::string pts;
        for (const CurvePoint& p : c.pts) pts += fmt6(px(p.x)) + "," + fmt6(py(p.mean)) + " ";
        s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.8\" points=\"" +
             pts + "\"/>\n";
        // error band as thin vertical ticks
        for (const CurvePoint& p : c.pts) {
            if (p.stderr_ <= 0) continue;
            s += "<line x1=\"" + fmt6(px(p.x)) + "\" y1=\"" + fmt6(py(p.mean - p.stderr_)) +
                 "\" x2=\"" + fmt6(px(p.x)) + "\" y2=\"" + fmt6(py(p.mean + p.stderr_)) +
                 "\" stroke=\"" + color + "\" stroke-width=\"0.6\" opacity=\"0.6\"/>\n";
        }
        double ly = mt + 16 + 18 * static_cast<double>(ci);
        s += "<line x1=\"" + fmt6(W - mr + 10) + "\" y1=\"" + fmt6(ly - 4) + "\" x2=\"" +
             fmt6(W - mr + 34) + "\" y2=\"" + fmt6(ly - 4) + "\" stroke=\"" + color +
             "\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + fmt6(W - mr + 40) + "\" y=\"" + fmt6(ly) + "\" font-size=\"12\">" +
             c.label + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace

void write_report(const std::vector<RunTrace>& traces, const ReportConfig& cfg,
                  const std::string& out_dir) {
    if (traces.empty()) throw std::invalid_argument("write_report: no traces");
    std::filesystem::create_directories(out_dir);

    // method -> (instance, seed) -> trace
    std::map<std::string, std::map<std::pair<std::string, uint64_t>, const RunTrace*>> by_method;
    for (const RunTrace& t : traces) {
        by_method[t.method_id][{t.instance_id, t.seed}] = &t;
    }
    std::string ref = cfg.reference_method.empty() ? by_method.begin()->first : cfg.reference_method;
    if (!by_method.count(ref)) throw std::invalid_argument("write_report: no traces for reference " + ref);
    const auto& ref_runs = by_method[ref];

    double t_max = 0.0;
    for (const auto& [key, tr] : ref_runs) t_max = std::max(t_max, tr->events.back().t);
    if (t_max <= 0.0) t_max = 1.0;

    std::vector<double> qgrid = cfg.quality_grid;
    if (qgrid.empty()) {
        for (int i = 0; i <= 20; ++i) qgrid.push_back(0.50 + 0.025 * i);
    }

    // improvement-vs-time CSV
    std::string imp_csv = "method,t,mean_improvement,stderr,n\n";
    std::vector<Curve> imp_curves;
    for (const auto& [method, runs] : by_method) {
        if (method == ref) continue;
        Curve curve;
        curve.label = method;
        for (int g = 0; g <= cfg.time_grid; ++g) {
            double t = t_max * static_cast<double>(g) / static_cast<double>(cfg.time_grid);
            std::vector<double> vals;
            for (const auto& [key, tr] : runs) {
                auto it = ref_runs.find(key);
                if (it == ref_runs.end()) continue;
                vals.push_back(improvement_over(*tr, *it->second, t));
            }
            if (vals.empty()) continue;
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            double se = vals.size() > 1
                            ? std::sqrt(var / static_cast<double>(vals.size() - 1)) /
                                  std::sqrt(static_cast<double>(vals.size()))
                            : 0.0;
            imp_csv += method + "," + fmt_g17(t) + "," + fmt_g17(mean) + "," + fmt_g17(se) + "," +
                       std::to_string(vals.size()) + "\n";
            curve.pts.push_back(CurvePoint{t, mean, se, static_cast<int>(vals.size())});
        }
        imp_curves.push_back(std::move(curve));
    }
    write_file(out_dir + "/improvement.csv", imp_csv);
    write_file(out_dir + "/improvement.svg",
               svg_plot(imp_curves, "improvement over " + ref, "wall time (s)", "cost improvement"));

    // speedup-vs-quality CSV (geometric aggregation)
    std::string sp_csv = "method,q,geomean_speedup,se_log,n\n";
    std::vector<Curve> sp_curves;
    for (const auto& [method, runs] : by_method) {
        Curve curve;
        curve.label = method;
        for (double q : qgrid) {
            std::vector<double> logs;
            for (const auto& [key, tr] : runs) {
                auto it = ref_runs.find(key);
                if (it == ref_runs.end()) continue;
                auto s = speedup_at(*tr, *it->second, q);
                if (s && *s > 0.0) logs.push_back(std::log(*s));
            }
            if (logs.empty()) continue;
            double mean = 0.0;
            for (double v : logs) mean += v;
            mean /= static_cast<double>(logs.size());
            double var = 0.0;
            for (double v : logs) var += (v - mean) * (v - mean);
            double se = logs.size() > 1
                            ? std::sqrt(var / static_cast<double>(logs.size() - 1)) /
                                  std::sqrt(static_cast<double>(logs.size()))
                            : 0.0;
            double geo = std::exp(mean);
            sp_csv += method + "," + fmt_g17(q) + "," + fmt_g17(geo) + "," + fmt_g17(se) + "," +
                      std::to_string(logs.size()) + "\n";
            // error band shown as geo * exp(+-se)
            curve.pts.push_back(CurvePoint{q, geo, geo * (std::exp(se) - 1.0), static_cast<int>(logs.size())});
        }
        sp_curves.push_back(std::move(curve));
    }
    write_file(out_dir + "/speedup.csv", sp_csv);
    write_file(out_dir + "/speedup.svg",
               svg_plot(sp_curves, "speedup over " + ref, "solution quality fraction q", "speedup"));

    // headline: speedup at the default q
    std::string sum_csv = "method,q,geomean_speedup,n\n";
    for (const auto& [method, runs] : by_method) {
        std::vector<double> logs;
        for (const auto& [key, tr] : runs) {
            auto it = ref_runs.find(key);
            if (it == ref_runs.end()) continue;
            auto s = speedup_at(*tr, *it->second, cfg.speedup_q);
            if (s && *s > 0.0) logs.push_back(std::log(*s));
        }
        if (logs.empty()) continue;
        double mean = 0.0;
        for (double v : logs) mean += v;
        mean /= static_cast<double>(logs.size());
        sum_csv += method + "," + fmt_g17(cfg.speedup_q) + "," + fmt_g17(std::exp(mean)) + "," +
                   std::to_string(logs.size()) + "\n";
    }
    write_file(out_dir + "/summary.csv", sum_csv);
}

}  // namespace vrpd
