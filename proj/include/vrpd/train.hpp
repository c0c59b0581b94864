#pragma once

#include <cstdint>
#include <vector>

#include "vrpd/model.hpp"

namespace vrpd {

// Huber on e = prediction - normalized target: e^2/2 inside |e| <= 1,
// |e| - 1/2 outside.
double huber_loss(double e);
double huber_grad(double e);

struct TrainConfig {
    ModelKind kind = ModelKind::Mlp;
    ArchConfig arch;
    double lr = 0.001;
    int batch = 512;
    int steps = 2000;
    uint64_t seed = 1;
    bool augment = true;
    int threads = 1;  // > 1 enables the OpenMP batch kernel
};

struct TrainResult {
    RegressionModel model;
    double initial_loss = 0.0;  // mean dataset loss before the first update
    double final_loss = 0.0;    // mean dataset loss after training
};

// Adam (beta1=0.9, beta2=0.999, eps=1e-8) with cosine decay of the learning
// rate to zero. Targets are standardized by the training-set mean/std and
// summary features by per-feature mean/std; both normalizers are stored in
// the model. Deterministic for a fixed (dataset, config, seed) and thread
// count. Aborts on non-finite loss.
TrainResult train(const std::vector<TrainingExample>& dataset, const TrainConfig& cfg);

// Mean Huber loss of the model over a dataset (no augmentation).
double dataset_loss(const RegressionModel& model, const std::vector<TrainingExample>& dataset);

// One gradient accumulation pass over a batch; exposed for the serial /
// parallel equivalence tests and the benchmark. Returns mean batch loss,
// writes the mean gradient into out.
double batch_gradient_serial(const RegressionModel& model,
                             const std::vector<TrainingExample>& batch, GradBuffer& out);
double batch_gradient_parallel(const RegressionModel& model,
                               const std::vector<TrainingExample>& batch, GradBuffer& out,
                               int threads);

double cosine_lr(double lr0, int step, int total_steps);

}  // namespace vrpd
