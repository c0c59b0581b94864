#include "vrpd/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "vrpd/json_io.hpp"

namespace vrpd {

std::vector<double> city_features(const TrainingExample& ex) {
    std::vector<double> out;
    out.reserve(ex.cities.size() * kCityFeatureDim);
    double inv_c = 1.0 / static_cast<double>(ex.capacity);
    for (const auto& c : ex.cities) {
        out.push_back(c[0] - ex.depot_x);
        out.push_back(c[1] - ex.depot_y);
        out.push_back(c[2] * inv_c);
    }
    return out;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    if (sorted.size() == 1) return sorted[0];
    double h = q * static_cast<double>(sorted.size() - 1);
    size_t lo = static_cast<size_t>(h);
    if (lo >= sorted.size() - 1) return sorted.back();
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

double pop_std(const std::vector<double>& v, double mean) {
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

std::array<double, kSummaryDim> summary_features(const TrainingExample& ex) {
    size_t m = ex.cities.size();
    if (m == 0) throw std::invalid_argument("summary_features: empty subproblem");
    std::array<double, kSummaryDim> f{};

    std::vector<double> rx(m), ry(m), dem(m);
    for (size_t i = 0; i < m; ++i) {
        rx[i] = ex.cities[i][0] - ex.depot_x;
        ry[i] = ex.cities[i][1] - ex.depot_y;
        dem[i] = ex.cities[i][2];
    }

    f[0] = static_cast<double>(m) / 1000.0;
    f[1] = *std::min_element(rx.begin(), rx.end());
    f[2] = *std::min_element(ry.begin(), ry.end());
    f[3] = *std::max_element(rx.begin(), rx.end());
    f[4] = *std::max_element(ry.begin(), ry.end());

    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < m; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    f[5] = pop_std(rx, mx);
    f[6] = pop_std(ry, my);

    std::vector<double> r_depot(m), r_centroid(m);
    for (size_t i = 0; i < m; ++i) {
        r_depot[i] = std::sqrt(rx[i] * rx[i] + ry[i] * ry[i]);
        double cx = rx[i] - mx, cy = ry[i] - my;
        r_centroid[i] = std::sqrt(cx * cx + cy * cy);
    }
    std::sort(r_depot.begin(), r_depot.end());
    std::sort(r_centroid.begin(), r_centroid.end());
    for (int d = 0; d < 10; ++d) {
        double q = 0.1 * static_cast<double>(d + 1);
        f[7 + d] = quantile_sorted(r_depot, q);
        f[17 + d] = quantile_sorted(r_centroid, q);
    }

    double inv_c = 1.0 / static_cast<double>(ex.capacity);
    double dsum = 0.0;
    for (double d : dem) dsum += d;
    double dmean = dsum / static_cast<double>(m);
    std::vector<double> dsorted = dem;
    std::sort(dsorted.begin(), dsorted.end());
    f[27] = dsum * inv_c;
    f[28] = dmean * inv_c;
    f[29] = pop_std(dem, dmean) * inv_c;
    f[30] = dsorted.front() * inv_c;
    f[31] = dsorted.back() * inv_c;
    f[32] = quantile_sorted(dsorted, 0.5) * inv_c;
    return f;
}

void augment_with(TrainingExample& ex, double angle, bool flip) {
    double ca = std::cos(angle), sa = std::sin(angle);
    for (auto& c : ex.cities) {
        double x = c[0] - ex.depot_x;
        double y = c[1] - ex.depot_y;
        if (flip) y = -y;
        double nx = ca * x - sa * y;
        double ny = sa * x + ca * y;
        c[0] = ex.depot_x + nx;
        c[1] = ex.depot_y + ny;
    }
}

void augment(TrainingExample& ex, RngStream& rng) {
    double angle = rng.next_double() * 6.283185307179586476925286766559;
    bool flip = rng.next_double() < 0.5;
    augment_with(ex, angle, flip);
}

std::string example_to_json(const TrainingExample& ex) {
    std::string out = "{\"depot\":{\"x\":" + fmt_g17(ex.depot_x) + ",\"y\":" + fmt_g17(ex.depot_y) +
                      "},\"capacity\":" + std::to_string(ex.capacity) + ",\"cities\":[";
    for (size_t i = 0; i < ex.cities.size(); ++i) {
        if (i) out += ",";
        out += "[" + fmt_g17(ex.cities[i][0]) + "," + fmt_g17(ex.cities[i][1]) + "," +
               fmt_g17(ex.cities[i][2]) + "]";
    }
    out += "],\"target\":" + fmt_g17(ex.target) + ",\"meta\":{\"instance\":\"" + ex.instance_id +
           "\",\"step\":" + std::to_string(ex.step) + ",\"n\":" + std::to_string(ex.n) +
           ",\"k\":" + std::to_string(ex.k) + ",\"incumbent\":" + fmt_g17(ex.incumbent) +
           ",\"center\":" + std::to_string(ex.center_route) + "}}";
    return out;
}

TrainingExample example_from_json(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    TrainingExample ex;
    ex.depot_x = j.at("depot").at("x").get<double>();
    ex.depot_y = j.at("depot").at("y").get<double>();
    ex.capacity = j.at("capacity").get<int>();
    for (const auto& jc : j.at("cities")) {
        ex.cities.push_back({jc.at(0).get<double>(), jc.at(1).get<double>(), jc.at(2).get<double>()});
    }
    ex.target = j.at("target").get<double>();
    const auto& meta = j.at("meta");
    ex.instance_id = meta.at("instance").get<std::string>();
    ex.step = meta.at("step").get<int>();
    ex.n = meta.at("n").get<int>();
    ex.k = meta.at("k").get<int>();
    ex.incumbent = meta.at("incumbent").get<double>();
    ex.center_route = meta.at("center").get<int>();
    return ex;
}

void save_dataset(const std::string& path, const std::vector<TrainingExample>& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    for (const TrainingExample& ex : data) f << example_to_json(ex) << "\n";
}

std::vector<TrainingExample> load_dataset(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::vector<TrainingExample> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        out.push_back(example_from_json(line));
    }
    return out;
}

}  // namespace vrpd
