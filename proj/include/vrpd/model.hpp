#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vrpd/features.hpp"

namespace vrpd {

enum class ModelKind { Linear, Mlp, SetAttention };

std::string model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& s);

struct ParamTensor {
    std::string name;
    std::vector<size_t> shape;
    std::vector<double> v;

    size_t size() const { return v.size(); }
};

struct ArchConfig {
    // set-attention
    int d_model = 32;
    int n_heads = 2;
    int n_layers = 2;
    int d_ff = 128;
    // mlp
    int hidden = 64;
};

struct Normalizer {
    double mean = 0.0;
    double stdev = 1.0;
};

// f_theta: predicts the subsolution cost of a subproblem. predict() returns
// the denormalized cost; training operates on the standardized target.
struct RegressionModel {
    ModelKind kind = ModelKind::Mlp;
    ArchConfig arch;
    std::vector<ParamTensor> params;
    Normalizer target;
    std::vector<double> feat_mean;  // summary kinds; size 33
    std::vector<double> feat_std;

    size_t param_count() const;
    double predict(const TrainingExample& ex) const;
    double forward_normalized(const TrainingExample& ex) const;
};

RegressionModel make_model(ModelKind kind, const ArchConfig& arch, uint64_t seed);

// Gradient accumulator aligned with model.params.
struct GradBuffer {
    std::vector<std::vector<double>> g;

    explicit GradBuffer(const RegressionModel& m);
    void zero();
    void add(const GradBuffer& other);
    void scale(double s);
};

// Runs forward, returns the normalized prediction, and accumulates
// upstream * d(pred_norm)/d(theta) into grads. The upstream factor is
// computed from the prediction by the callback so the pass stays single.
double forward_backward(const RegressionModel& m, const TrainingExample& ex,
                        const std::function<double(double)>& upstream_of_pred, GradBuffer& grads);

// Versioned JSON container; parameters are base64 little-endian doubles, so
// a save/load round trip is bit-exact.
std::string model_to_json(const RegressionModel& m);
RegressionModel model_from_json(const std::string& text);
void save_model(const std::string& path, const RegressionModel& m);
RegressionModel load_model(const std::string& path);

}  // namespace vrpd
