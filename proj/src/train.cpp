#include "vrpd/train.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vrpd/rng.hpp"

namespace vrpd {

double huber_loss(double e) {
    double a = std::fabs(e);
    return a <= 1.0 ? 0.5 * e * e : a - 0.5;
}

double huber_grad(double e) {
    if (e > 1.0) return 1.0;
    if (e < -1.0) return -1.0;
    return e;
}

double cosine_lr(double lr0, int step, int total_steps) {
    if (total_steps <= 0) return lr0;
    double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr0 * 0.5 * (1.0 + std::cos(3.1415926535897932384626433832795 * frac));
}

namespace {

constexpr uint64_t kBatchStream = 0xBA7C4;
constexpr uint64_t kAugmentStream = 0xA06;

double normalized_target(const RegressionModel& m, const TrainingExample& ex) {
    return (ex.target - m.target.mean) / m.target.stdev;
}

// Fills normalizers from the dataset: target mean/std always, per-feature
// mean/std for summary-feature kinds.
void fit_normalizers(RegressionModel& m, const std::vector<TrainingExample>& data) {
    double tm = 0.0;
    for (const auto& ex : data) tm += ex.target;
    tm /= static_cast<double>(data.size());
    double tv = 0.0;
    for (const auto& ex : data) tv += (ex.target - tm) * (ex.target - tm);
    tv /= static_cast<double>(data.size());
    m.target.mean = tm;
    m.target.stdev = std::sqrt(tv) > 1e-12 ? std::sqrt(tv) : 1.0;

    if (m.kind == ModelKind::SetAttention) return;
    std::vector<double> mean(kSummaryDim, 0.0), var(kSummaryDim, 0.0);
    for (const auto& ex : data) {
        auto phi = summary_features(ex);
        for (int i = 0; i < kSummaryDim; ++i) mean[static_cast<size_t>(i)] += phi[static_cast<size_t>(i)];
    }
    for (double& v : mean) v /= static_cast<double>(data.size());
    for (const auto& ex : data) {
        auto phi = summary_features(ex);
        for (int i = 0; i < kSummaryDim; ++i) {
            double dlt = phi[static_cast<size_t>(i)] - mean[static_cast<size_t>(i)];
            var[static_cast<size_t>(i)] += dlt * dlt;
        }
    }
    for (int i = 0; i < kSummaryDim; ++i) {
        double s = std::sqrt(var[static_cast<size_t>(i)] / static_cast<double>(data.size()));
        m.feat_mean[static_cast<size_t>(i)] = mean[static_cast<size_t>(i)];
        m.feat_std[static_cast<size_t>(i)] = s > 1e-12 ? s : 1.0;
    }
}

double example_gradient(const RegressionModel& model, const TrainingExample& ex, double inv_batch,
                        GradBuffer& out) {
    double t = normalized_target(model, ex);
    double pred = forward_backward(
        model, ex, [&](double p) { return huber_grad(p - t) * inv_batch; }, out);
    return huber_loss(pred - t);
}

}  // namespace

double batch_gradient_serial(const RegressionModel& model,
                             const std::vector<TrainingExample>& batch, GradBuffer& out) {
    out.zero();
    double inv = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const TrainingExample& ex : batch) loss += example_gradient(model, ex, inv, out);
    return loss * inv;
}

double batch_gradient_parallel(const RegressionModel& model,
                               const std::vector<TrainingExample>& batch, GradBuffer& out,
                               int threads) {
    if (threads <= 1) return batch_gradient_serial(model, batch, out);
    out.zero();
    double inv = 1.0 / static_cast<double>(batch.size());
    std::vector<GradBuffer> partial(static_cast<size_t>(threads), GradBuffer(model));
    std::vector<double> losses(static_cast<size_t>(threads), 0.0);
#ifdef _OPENMP
#pragma omp parallel num_threads(threads)
    {
        int tid = omp_get_thread_num();
#pragma omp for schedule(static)
        for (size_t i = 0; i < batch.size(); ++i) {
            losses[static_cast<size_t>(tid)] +=
                example_gradient(model, batch[i], inv, partial[static_cast<size_t>(tid)]);
        }
    }
#else
    for (size_t i = 0; i < batch.size(); ++i) {
        losses[0] += example_gradient(model, batch[i], inv, partial[0]);
    }
#endif
    // fixed reduction order: partial buffers summed by thread id
    double loss = 0.0;
    for (int t = 0; t < threads; ++t) {
        loss += losses[static_cast<size_t>(t)];
        out.add(partial[static_cast<size_t>(t)]);
    }
    return loss * inv;
}

double dataset_loss(const RegressionModel& model, const std::vector<TrainingExample>& dataset) {
    double loss = 0.0;
    for (const TrainingExample& ex : dataset) {
        double e = model.forward_normalized(ex) - normalized_target(model, ex);
        loss += huber_loss(e);
    }
    return loss / static_cast<double>(dataset.size());
}

TrainResult train(const std::vector<TrainingExample>& dataset, const TrainConfig& cfg) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    TrainResult res;
    res.model = make_model(cfg.kind, cfg.arch, cfg.seed);
    RegressionModel& model = res.model;
    fit_normalizers(model, dataset);
    res.initial_loss = dataset_loss(model, dataset);

    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<std::vector<double>> adam_m, adam_v;
    for (const ParamTensor& t : model.params) {
        adam_m.emplace_back(t.size(), 0.0);
        adam_v.emplace_back(t.size(), 0.0);
    }

    RngStream batch_rng(cfg.seed, kBatchStream);
    RngStream aug_rng(cfg.seed, kAugmentStream);
    GradBuffer grads(model);
    std::vector<TrainingExample> batch;
    double b1t = 1.0, b2t = 1.0;
    for (int step = 0; step < cfg.steps; ++step) {
        batch.clear();
        for (int b = 0; b < cfg.batch; ++b) {
            size_t idx = static_cast<size_t>(batch_rng.next_bounded(dataset.size()));
            batch.push_back(dataset[idx]);
            if (cfg.augment) augment(batch.back(), aug_rng);
        }
        double loss = batch_gradient_parallel(model, batch, grads, cfg.threads);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("train: non-finite loss at step " + std::to_string(step));
        }
        double lr = cosine_lr(cfg.lr, step, cfg.steps);
        b1t *= beta1;
        b2t *= beta2;
        for (size_t i = 0; i < model.params.size(); ++i) {
            auto& p = model.params[i].v;
            auto& gm = adam_m[i];
            auto& gv = adam_v[i];
            const auto& g = grads.g[i];
            for (size_t j = 0; j < p.size(); ++j) {
                gm[j] = beta1 * gm[j] + (1.0 - beta1) * g[j];
                gv[j] = beta2 * gv[j] + (1.0 - beta2) * g[j] * g[j];
                double mhat = gm[j] / (1.0 - b1t);
                double vhat = gv[j] / (1.0 - b2t);
                p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }
    res.final_loss = dataset_loss(model, dataset);
    return res;
}

}  // namespace vrpd
