#include "vrpd/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include <json.hpp>

#include "vrpd/json_io.hpp"
#include "vrpd/rng.hpp"

namespace vrpd {

std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Linear: return "linear";
        case ModelKind::Mlp: return "mlp";
        case ModelKind::SetAttention: return "set-attention";
    }
    throw std::logic_error("bad model kind");
}

ModelKind model_kind_from_name(const std::string& s) {
    if (s == "linear") return ModelKind::Linear;
    if (s == "mlp") return ModelKind::Mlp;
    if (s == "set-attention") return ModelKind::SetAttention;
    throw std::invalid_argument("unknown model kind: " + s);
}

size_t RegressionModel::param_count() const {
    size_t n = 0;
    for (const ParamTensor& t : params) n += t.size();
    return n;
}

namespace {

constexpr double kLnEps = 1e-5;

size_t numel(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t s : shape) n *= s;
    return n;
}

ParamTensor init_tensor(const std::string& name, std::vector<size_t> shape, uint64_t seed,
                        uint64_t stream, double init_kind) {
    // init_kind: 0 = zeros, 1 = ones, 2 = xavier uniform
    ParamTensor t;
    t.name = name;
    t.shape = std::move(shape);
    t.v.assign(numel(t.shape), 0.0);
    if (init_kind == 1.0) {
        for (double& x : t.v) x = 1.0;
    } else if (init_kind == 2.0) {
        size_t fan_out = t.shape[0];
        size_t fan_in = t.shape.size() > 1 ? t.shape[1] : t.shape[0];
        if (t.shape.size() == 1) fan_out = 1;  // row vector acting as [1, d]
        double lim = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        RngStream rng(seed, stream);
        for (double& x : t.v) x = (2.0 * rng.next_double() - 1.0) * lim;
    }
    return t;
}

}  // namespace

RegressionModel make_model(ModelKind kind, const ArchConfig& arch, uint64_t seed) {
    RegressionModel m;
    m.kind = kind;
    m.arch = arch;
    uint64_t s = 0x9000;
    auto add = [&](const std::string& name, std::vector<size_t> shape, double init_kind) {
        m.params.push_back(init_tensor(name, std::move(shape), seed, s++, init_kind));
    };
    size_t d = static_cast<size_t>(arch.d_model);
    size_t dff = static_cast<size_t>(arch.d_ff);
    size_t h = static_cast<size_t>(arch.hidden);
    switch (kind) {
        case ModelKind::Linear:
            add("w", {static_cast<size_t>(kSummaryDim)}, 2.0);
            add("b", {1}, 0.0);
            m.feat_mean.assign(kSummaryDim, 0.0);
            m.feat_std.assign(kSummaryDim, 1.0);
            break;
        case ModelKind::Mlp:
            add("fc1.w", {h, static_cast<size_t>(kSummaryDim)}, 2.0);
            add("fc1.b", {h}, 0.0);
            add("fc2.w", {h, h}, 2.0);
            add("fc2.b", {h}, 0.0);
            add("fc3.w", {1, h}, 2.0);
            add("fc3.b", {1}, 0.0);
            m.feat_mean.assign(kSummaryDim, 0.0);
            m.feat_std.assign(kSummaryDim, 1.0);
            break;
        case ModelKind::SetAttention:
            if (arch.d_model % arch.n_heads != 0) {
                throw std::invalid_argument("d_model must be divisible by n_heads");
            }
            add("embed.w", {d, static_cast<size_t>(kCityFeatureDim)}, 2.0);
            add("embed.b", {d}, 0.0);
            for (int l = 0; l < arch.n_layers; ++l) {
                std::string p = "l" + std::to_string(l) + ".";
                add(p + "wq", {d, d}, 2.0);
                add(p + "bq", {d}, 0.0);
                add(p + "wk", {d, d}, 2.0);
                add(p + "bk", {d}, 0.0);
                add(p + "wv", {d, d}, 2.0);
                add(p + "bv", {d}, 0.0);
                add(p + "wo", {d, d}, 2.0);
                add(p + "bo", {d}, 0.0);
                add(p + "ln1.g", {d}, 1.0);
                add(p + "ln1.b", {d}, 0.0);
                add(p + "ff1.w", {dff, d}, 2.0);
                add(p + "ff1.b", {dff}, 0.0);
                add(p + "ff2.w", {d, dff}, 2.0);
                add(p + "ff2.b", {d}, 0.0);
                add(p + "ln2.g", {d}, 1.0);
                add(p + "ln2.b", {d}, 0.0);
            }
            add("head.w", {d}, 2.0);
            add("head.b", {1}, 0.0);
            break;
    }
    return m;
}

GradBuffer::GradBuffer(const RegressionModel& m) {
    g.reserve(m.params.size());
    for (const ParamTensor& t : m.params) g.emplace_back(t.size(), 0.0);
}

void GradBuffer::zero() {
    for (auto& t : g) std::fill(t.begin(), t.end(), 0.0);
}

void GradBuffer::add(const GradBuffer& other) {
    for (size_t i = 0; i < g.size(); ++i) {
        for (size_t j = 0; j < g[i].size(); ++j) g[i][j] += other.g[i][j];
    }
}

void GradBuffer::scale(double s) {
    for (auto& t : g) {
        for (double& x : t) x *= s;
    }
}

namespace {

// y = W x + b with W given row-major [out, in].
void affine(const std::vector<double>& w, const std::vector<double>& b, const double* x,
            size_t in, size_t out, double* y) {
    for (size_t o = 0; o < out; ++o) {
        double acc = b.empty() ? 0.0 : b[o];
        const double* row = w.data() + o * in;
        for (size_t i = 0; i < in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

// Accumulates dW += dy x^T, db += dy, dx += W^T dy.
void affine_backward(const std::vector<double>& w, const double* x, const double* dy, size_t in,
                     size_t out, double* dw, double* db, double* dx) {
    for (size_t o = 0; o < out; ++o) {
        double g = dy[o];
        if (db) db[o] += g;
        double* dwrow = dw + o * in;
        const double* wrow = w.data() + o * in;
        for (size_t i = 0; i < in; ++i) {
            dwrow[i] += g * x[i];
            if (dx) dx[i] += wrow[i] * g;
        }
    }
}

struct SummaryWork {
    std::array<double, kSummaryDim> phi_norm;
    // mlp activations
    std::vector<double> h1, h2, p1, p2;
};

double summary_forward(const RegressionModel& m, const TrainingExample& ex, SummaryWork* work) {
    auto phi = summary_features(ex);
    SummaryWork local;
    SummaryWork& w = work ? *work : local;
    for (int i = 0; i < kSummaryDim; ++i) {
        double s = m.feat_std[static_cast<size_t>(i)];
        w.phi_norm[static_cast<size_t>(i)] =
            (phi[static_cast<size_t>(i)] - m.feat_mean[static_cast<size_t>(i)]) / (s > 0 ? s : 1.0);
    }
    if (m.kind == ModelKind::Linear) {
        double acc = m.params[1].v[0];
        for (int i = 0; i < kSummaryDim; ++i) {
            acc += m.params[0].v[static_cast<size_t>(i)] * w.phi_norm[static_cast<size_t>(i)];
        }
        return acc;
    }
    size_t h = static_cast<size_t>(m.arch.hidden);
    w.p1.assign(h, 0.0);
    w.h1.assign(h, 0.0);
    w.p2.assign(h, 0.0);
    w.h2.assign(h, 0.0);
    affine(m.params[0].v, m.params[1].v, w.phi_norm.data(), kSummaryDim, h, w.p1.data());
    for (size_t i = 0; i < h; ++i) w.h1[i] = w.p1[i] > 0 ? w.p1[i] : 0.0;
    affine(m.params[2].v, m.params[3].v, w.h1.data(), h, h, w.p2.data());
    for (size_t i = 0; i < h; ++i) w.h2[i] = w.p2[i] > 0 ? w.p2[i] : 0.0;
    double out = 0.0;
    affine(m.params[4].v, m.params[5].v, w.h2.data(), h, 1, &out);
    return out;
}

struct AttnLayerWork {
    std::vector<double> x_in;    // m x d
    std::vector<double> q, k, v; // m x d
    std::vector<double> attn;    // heads x m x m
    std::vector<double> ah;      // m x d (concatenated head outputs)
    std::vector<double> o;       // m x d
    std::vector<double> r1;      // m x d residual sum
    std::vector<double> x_mid;   // m x d after ln1
    std::vector<double> mu1, rstd1;  // m
    std::vector<double> ffp;     // m x dff pre-activation
    std::vector<double> ffh;     // m x dff post-relu
    std::vector<double> f;       // m x d
    std::vector<double> r2;      // m x d
    std::vector<double> mu2, rstd2;  // m
    std::vector<double> x_out;   // m x d
};

struct AttnWork {
    std::vector<double> feats;   // m x 3
    std::vector<double> x0;      // m x d
    std::vector<AttnLayerWork> layers;
    std::vector<double> y;       // m
};

void layer_norm_row(const double* r, size_t d, const std::vector<double>& gamma,
                    const std::vector<double>& beta, double* out, double* mu, double* rstd) {
    double m1 = 0.0;
    for (size_t j = 0; j < d; ++j) m1 += r[j];
    m1 /= static_cast<double>(d);
    double var = 0.0;
    for (size_t j = 0; j < d; ++j) var += (r[j] - m1) * (r[j] - m1);
    var /= static_cast<double>(d);
    double rs = 1.0 / std::sqrt(var + kLnEps);
    for (size_t j = 0; j < d; ++j) out[j] = gamma[j] * ((r[j] - m1) * rs) + beta[j];
    *mu = m1;
    *rstd = rs;
}

void layer_norm_backward_row(const double* r, size_t d, double mu, double rstd,
                             const std::vector<double>& gamma, const double* dout, double* dgamma,
                             double* dbeta, double* dr) {
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (size_t j = 0; j < d; ++j) {
        double xhat = (r[j] - mu) * rstd;
        double dxhat = dout[j] * gamma[j];
        dgamma[j] += dout[j] * xhat;
        dbeta[j] += dout[j];
        mean_dxhat += dxhat;
        mean_dxhat_xhat += dxhat * xhat;
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    for (size_t j = 0; j < d; ++j) {
        double xhat = (r[j] - mu) * rstd;
        double dxhat = dout[j] * gamma[j];
        dr[j] += rstd * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
    }
}

// Parameter tensor indices within a set-attention layer block.
enum LayerParam { WQ = 0, BQ, WK, BK, WV, BV, WO, BO, LN1G, LN1B, FF1W, FF1B, FF2W, FF2B, LN2G, LN2B, kLayerParams };

double attention_forward(const RegressionModel& m, const TrainingExample& ex, AttnWork* work) {
    size_t mm = ex.cities.size();
    size_t d = static_cast<size_t>(m.arch.d_model);
    size_t dff = static_cast<size_t>(m.arch.d_ff);
    size_t nh = static_cast<size_t>(m.arch.n_heads);
    size_t dh = d / nh;
    double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    AttnWork local;
    AttnWork& w = work ? *work : local;
    w.feats = city_features(ex);
    w.x0.assign(mm * d, 0.0);
    for (size_t i = 0; i < mm; ++i) {
        affine(m.params[0].v, m.params[1].v, w.feats.data() + i * kCityFeatureDim, kCityFeatureDim, d,
               w.x0.data() + i * d);
    }

    w.layers.assign(static_cast<size_t>(m.arch.n_layers), AttnLayerWork{});
    const std::vector<double>* x = &w.x0;
    for (int l = 0; l < m.arch.n_layers; ++l) {
        AttnLayerWork& lw = w.layers[static_cast<size_t>(l)];
        size_t base = 2 + static_cast<size_t>(l) * kLayerParams;
        lw.x_in = *x;
        lw.q.assign(mm * d, 0.0);
        lw.k.assign(mm * d, 0.0);
        lw.v.assign(mm * d, 0.0);
        for (size_t i = 0; i < mm; ++i) {
            affine(m.params[base + WQ].v, m.params[base + BQ].v, lw.x_in.data() + i * d, d, d,
                   lw.q.data() + i * d);
            affine(m.params[base + WK].v, m.params[base + BK].v, lw.x_in.data() + i * d, d, d,
                   lw.k.data() + i * d);
            affine(m.params[base + WV].v, m.params[base + BV].v, lw.x_in.data() + i * d, d, d,
                   lw.v.data() + i * d);
        }
        lw.attn.assign(nh * mm * mm, 0.0);
        lw.ah.assign(mm * d, 0.0);
        std::vector<double> scores(mm);
        for (size_t h = 0; h < nh; ++h) {
            size_t off = h * dh;
            for (size_t i = 0; i < mm; ++i) {
                double mx = -1e300;
                for (size_t j = 0; j < mm; ++j) {
                    double s = 0.0;
                    const double* qi = lw.q.data() + i * d + off;
                    const double* kj = lw.k.data() + j * d + off;
                    for (size_t t = 0; t < dh; ++t) s += qi[t] * kj[t];
                    s *= scale;
                    scores[j] = s;
                    if (s > mx) mx = s;
                }
                double z = 0.0;
                double* arow = lw.attn.data() + (h * mm + i) * mm;
                for (size_t j = 0; j < mm; ++j) {
                    arow[j] = std::exp(scores[j] - mx);
                    z += arow[j];
                }
                double inv_z = 1.0 / z;
                for (size_t j = 0; j < mm; ++j) arow[j] *= inv_z;
                double* out = lw.ah.data() + i * d + off;
                for (size_t j = 0; j < mm; ++j) {
                    const double* vj = lw.v.data() + j * d + off;
                    double a = arow[j];
                    for (size_t t = 0; t < dh; ++t) out[t] += a * vj[t];
                }
            }
        }
        lw.o.assign(mm * d, 0.0);
        lw.r1.assign(mm * d, 0.0);
        lw.x_mid.assign(mm * d, 0.0);
        lw.mu1.assign(mm, 0.0);
        lw.rstd1.assign(mm, 0.0);
        for (size_t i = 0; i < mm; ++i) {
            affine(m.params[base + WO].v, m.params[base + BO].v, lw.ah.data() + i * d, d, d,
                   lw.o.data() + i * d);
            for (size_t j = 0; j < d; ++j) lw.r1[i * d + j] = lw.x_in[i * d + j] + lw.o[i * d + j];
            layer_norm_row(lw.r1.data() + i * d, d, m.params[base + LN1G].v, m.params[base + LN1B].v,
                           lw.x_mid.data() + i * d, &lw.mu1[i], &lw.rstd1[i]);
        }
        lw.ffp.assign(mm * dff, 0.0);
        lw.ffh.assign(mm * dff, 0.0);
        lw.f.assign(mm * d, 0.0);
        lw.r2.assign(mm * d, 0.0);
        lw.x_out.assign(mm * d, 0.0);
        lw.mu2.assign(mm, 0.0);
        lw.rstd2.assign(mm, 0.0);
        for (size_t i = 0; i < mm; ++i) {
            affine(m.params[base + FF1W].v, m.params[base + FF1B].v, lw.x_mid.data() + i * d, d, dff,
                   lw.ffp.data() + i * dff);
            for (size_t j = 0; j < dff; ++j) {
                lw.ffh[i * dff + j] = lw.ffp[i * dff + j] > 0 ? lw.ffp[i * dff + j] : 0.0;
            }
            affine(m.params[base + FF2W].v, m.params[base + FF2B].v, lw.ffh.data() + i * dff, dff, d,
                   lw.f.data() + i * d);
            for (size_t j = 0; j < d; ++j) lw.r2[i * d + j] = lw.x_mid[i * d + j] + lw.f[i * d + j];
            layer_norm_row(lw.r2.data() + i * d, d, m.params[base + LN2G].v, m.params[base + LN2B].v,
                           lw.x_out.data() + i * d, &lw.mu2[i], &lw.rstd2[i]);
        }
        x = &lw.x_out;
    }

    size_t head_w = m.params.size() - 2;
    w.y.assign(mm, 0.0);
    double pred = 0.0;
    for (size_t i = 0; i < mm; ++i) {
        double acc = m.params[head_w + 1].v[0];
        for (size_t j = 0; j < d; ++j) acc += m.params[head_w].v[j] * (*x)[i * d + j];
        w.y[i] = acc;
        pred += acc;
    }
    return pred / static_cast<double>(mm);
}

void attention_backward(const RegressionModel& m, const TrainingExample& ex, const AttnWork& w,
                        double upstream, GradBuffer& grads) {
    size_t mm = ex.cities.size();
    size_t d = static_cast<size_t>(m.arch.d_model);
    size_t dff = static_cast<size_t>(m.arch.d_ff);
    size_t nh = static_cast<size_t>(m.arch.n_heads);
    size_t dh = d / nh;
    double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    size_t head_w = m.params.size() - 2;
    const std::vector<double>& x_last =
        m.arch.n_layers > 0 ? w.layers.back().x_out : w.x0;

    std::vector<double> dx(mm * d, 0.0);
    double dy = upstream / static_cast<double>(mm);
    for (size_t i = 0; i < mm; ++i) {
        grads.g[head_w + 1][0] += dy;
        for (size_t j = 0; j < d; ++j) {
            grads.g[head_w][j] += dy * x_last[i * d + j];
            dx[i * d + j] += dy * m.params[head_w].v[j];
        }
    }

    std::vector<double> dr(mm * d), dmid(mm * d), dff_h(mm * dff), dff_p(mm * dff), dout_buf(mm * d);
    std::vector<double> dq(mm * d), dk(mm * d), dv(mm * d), dah(mm * d);
    for (int l = m.arch.n_layers - 1; l >= 0; --l) {
        const AttnLayerWork& lw = w.layers[static_cast<size_t>(l)];
        size_t base = 2 + static_cast<size_t>(l) * kLayerParams;

        // LN2
        std::fill(dr.begin(), dr.end(), 0.0);
        for (size_t i = 0; i < mm; ++i) {
            layer_norm_backward_row(lw.r2.data() + i * d, d, lw.mu2[i], lw.rstd2[i],
                                    m.params[base + LN2G].v, dx.data() + i * d,
                                    grads.g[base + LN2G].data(), grads.g[base + LN2B].data(),
                                    dr.data() + i * d);
        }
        // residual: dr feeds both x_mid and FF output
        std::fill(dmid.begin(), dmid.end(), 0.0);
        std::fill(dff_h.begin(), dff_h.end(), 0.0);
        std::fill(dff_p.begin(), dff_p.end(), 0.0);
        for (size_t i = 0; i < mm; ++i) {
            for (size_t j = 0; j < d; ++j) dmid[i * d + j] += dr[i * d + j];
            affine_backward(m.params[base + FF2W].v, lw.ffh.data() + i * dff, dr.data() + i * d, dff,
                            d, grads.g[base + FF2W].data(), grads.g[base + FF2B].data(),
                            dff_h.data() + i * dff);
            for (size_t j = 0; j < dff; ++j) {
                dff_p[i * dff + j] = lw.ffp[i * dff + j] > 0 ? dff_h[i * dff + j] : 0.0;
            }
            affine_backward(m.params[base + FF1W].v, lw.x_mid.data() + i * d,
                            dff_p.data() + i * dff, d, dff, grads.g[base + FF1W].data(),
                            grads.g[base + FF1B].data(), dmid.data() + i * d);
        }
        // LN1
        std::fill(dr.begin(), dr.end(), 0.0);
        for (size_t i = 0; i < mm; ++i) {
            layer_norm_backward_row(lw.r1.data() + i * d, d, lw.mu1[i], lw.rstd1[i],
                                    m.params[base + LN1G].v, dmid.data() + i * d,
                                    grads.g[base + LN1G].data(), grads.g[base + LN1B].data(),
                                    dr.data() + i * d);
        }
        // residual: dr feeds x_in and attention output O
        std::fill(dx.begin(), dx.end(), 0.0);
        std::fill(dah.begin(), dah.end(), 0.0);
        for (size_t i = 0; i < mm; ++i) {
            for (size_t j = 0; j < d; ++j) dx[i * d + j] += dr[i * d + j];
            affine_backward(m.params[base + WO].v, lw.ah.data() + i * d, dr.data() + i * d, d, d,
                            grads.g[base + WO].data(), grads.g[base + BO].data(),
                            dah.data() + i * d);
        }
        // attention heads
        std::fill(dq.begin(), dq.end(), 0.0);
        std::fill(dk.begin(), dk.end(), 0.0);
        std::fill(dv.begin(), dv.end(), 0.0);
        std::vector<double> da(mm), ds(mm);
        for (size_t h = 0; h < nh; ++h) {
            size_t off = h * dh;
            for (size_t i = 0; i < mm; ++i) {
                const double* arow = lw.attn.data() + (h * mm + i) * mm;
                const double* dahi = dah.data() + i * d + off;
                double dot_sum = 0.0;
                for (size_t j = 0; j < mm; ++j) {
                    const double* vj = lw.v.data() + j * d + off;
                    double acc = 0.0;
                    for (size_t t = 0; t < dh; ++t) acc += dahi[t] * vj[t];
                    da[j] = acc;
                    double* dvj = dv.data() + j * d + off;
                    for (size_t t = 0; t < dh; ++t) dvj[t] += arow[j] * dahi[t];
                    dot_sum += acc * arow[j];
                }
                for (size_t j = 0; j < mm; ++j) ds[j] = arow[j] * (da[j] - dot_sum);
                double* dqi = dq.data() + i * d + off;
                const double* qi = lw.q.data() + i * d + off;
                for (size_t j = 0; j < mm; ++j) {
                    double g = ds[j] * scale;
                    const double* kj = lw.k.data() + j * d + off;
                    double* dkj = dk.data() + j * d + off;
                    for (size_t t = 0; t < dh; ++t) {
                        dqi[t] += g * kj[t];
                        dkj[t] += g * qi[t];
                    }
                }
            }
        }
        for (size_t i = 0; i < mm; ++i) {
            affine_backward(m.params[base + WQ].v, lw.x_in.data() + i * d, dq.data() + i * d, d, d,
                            grads.g[base + WQ].data(), grads.g[base + BQ].data(), dx.data() + i * d);
            affine_backward(m.params[base + WK].v, lw.x_in.data() + i * d, dk.data() + i * d, d, d,
                            grads.g[base + WK].data(), grads.g[base + BK].data(), dx.data() + i * d);
            affine_backward(m.params[base + WV].v, lw.x_in.data() + i * d, dv.data() + i * d, d, d,
                            grads.g[base + WV].data(), grads.g[base + BV].data(), dx.data() + i * d);
        }
    }

    for (size_t i = 0; i < mm; ++i) {
        affine_backward(m.params[0].v, w.feats.data() + i * kCityFeatureDim, dx.data() + i * d,
                        kCityFeatureDim, d, grads.g[0].data(), grads.g[1].data(), nullptr);
    }
}

}  // namespace

double RegressionModel::forward_normalized(const TrainingExample& ex) const {
    if (kind == ModelKind::SetAttention) return attention_forward(*this, ex, nullptr);
    return summary_forward(*this, ex, nullptr);
}

double RegressionModel::predict(const TrainingExample& ex) const {
    return forward_normalized(ex) * target.stdev + target.mean;
}

double forward_backward(const RegressionModel& m, const TrainingExample& ex,
                        const std::function<double(double)>& upstream_of_pred, GradBuffer& grads) {
    if (m.kind == ModelKind::SetAttention) {
        AttnWork w;
        double pred = attention_forward(m, ex, &w);
        attention_backward(m, ex, w, upstream_of_pred(pred), grads);
        return pred;
    }
    SummaryWork w;
    double pred = summary_forward(m, ex, &w);
    double upstream = upstream_of_pred(pred);
    if (m.kind == ModelKind::Linear) {
        for (int i = 0; i < kSummaryDim; ++i) {
            grads.g[0][static_cast<size_t>(i)] += upstream * w.phi_norm[static_cast<size_t>(i)];
        }
        grads.g[1][0] += upstream;
        return pred;
    }
    size_t h = static_cast<size_t>(m.arch.hidden);
    std::vector<double> dh2(h, 0.0), dp2(h, 0.0), dh1(h, 0.0), dp1(h, 0.0);
    affine_backward(m.params[4].v, w.h2.data(), &upstream, h, 1, grads.g[4].data(),
                    grads.g[5].data(), dh2.data());
    for (size_t i = 0; i < h; ++i) dp2[i] = w.p2[i] > 0 ? dh2[i] : 0.0;
    affine_backward(m.params[2].v, w.h1.data(), dp2.data(), h, h, grads.g[2].data(),
                    grads.g[3].data(), dh1.data());
    for (size_t i = 0; i < h; ++i) dp1[i] = w.p1[i] > 0 ? dh1[i] : 0.0;
    affine_backward(m.params[0].v, w.phi_norm.data(), dp1.data(), kSummaryDim, h,
                    grads.g[0].data(), grads.g[1].data(), nullptr);
    return pred;
}

namespace {

const char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const std::vector<double>& vals) {
    std::vector<unsigned char> bytes;
    bytes.reserve(vals.size() * 8);
    for (double d : vals) {
        uint64_t u;
        std::memcpy(&u, &d, 8);
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>((u >> (8 * i)) & 0xFF));
    }
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    for (size_t i = 0; i < bytes.size(); i += 3) {
        uint32_t v = static_cast<uint32_t>(bytes[i]) << 16;
        int rem = static_cast<int>(bytes.size() - i);
        if (rem > 1) v |= static_cast<uint32_t>(bytes[i + 1]) << 8;
        if (rem > 2) v |= static_cast<uint32_t>(bytes[i + 2]);
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out.push_back(rem > 1 ? kB64[(v >> 6) & 63] : '=');
        out.push_back(rem > 2 ? kB64[v & 63] : '=');
    }
    return out;
}

std::vector<double> b64_decode(const std::string& s, size_t expect) {
    std::vector<unsigned char> bytes;
    bytes.reserve(s.size() / 4 * 3);
    int table[256];
    std::fill(std::begin(table), std::end(table), -1);
    for (int i = 0; i < 64; ++i) table[static_cast<unsigned char>(kB64[i])] = i;
    uint32_t acc = 0;
    int bits = 0;
    for (char c : s) {
        if (c == '=' || c == '\n') continue;
        int v = table[static_cast<unsigned char>(c)];
        if (v < 0) throw std::invalid_argument("bad base64 character in model file");
        acc = (acc << 6) | static_cast<uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            bytes.push_back(static_cast<unsigned char>((acc >> bits) & 0xFF));
        }
    }
    if (bytes.size() != expect * 8) throw std::invalid_argument("model parameter size mismatch");
    std::vector<double> out(expect);
    for (size_t i = 0; i < expect; ++i) {
        uint64_t u = 0;
        for (int b = 0; b < 8; ++b) u |= static_cast<uint64_t>(bytes[i * 8 + static_cast<size_t>(b)]) << (8 * b);
        std::memcpy(&out[i], &u, 8);
    }
    return out;
}

}  // namespace

std::string model_to_json(const RegressionModel& m) {
    std::string out = "{\"format\":\"vrpd-model\",\"version\":1,";
    out += "\"kind\":\"" + model_kind_name(m.kind) + "\",";
    out += "\"arch\":{\"d_model\":" + std::to_string(m.arch.d_model) +
           ",\"n_heads\":" + std::to_string(m.arch.n_heads) +
           ",\"n_layers\":" + std::to_string(m.arch.n_layers) +
           ",\"d_ff\":" + std::to_string(m.arch.d_ff) +
           ",\"hidden\":" + std::to_string(m.arch.hidden) + "},";
    out += "\"target\":{\"mean\":" + fmt_g17(m.target.mean) + ",\"std\":" + fmt_g17(m.target.stdev) + "},";
    out += "\"feat_mean\":\"" + b64_encode(m.feat_mean) + "\",";
    out += "\"feat_std\":\"" + b64_encode(m.feat_std) + "\",";
    out += "\"params\":[";
    for (size_t i = 0; i < m.params.size(); ++i) {
        const ParamTensor& t = m.params[i];
        if (i) out += ",";
        out += "{\"name\":\"" + t.name + "\",\"shape\":[";
        for (size_t s = 0; s < t.shape.size(); ++s) {
            if (s) out += ",";
            out += std::to_string(t.shape[s]);
        }
        out += "],\"data\":\"" + b64_encode(t.v) + "\"}";
    }
    out += "]}";
    return out;
}

RegressionModel model_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "vrpd-model") {
        throw std::invalid_argument("not a vrpd model file");
    }
    if (j.at("version").get<int>() != 1) {
        throw std::invalid_argument("unsupported model version");
    }
    RegressionModel m;
    m.kind = model_kind_from_name(j.at("kind").get<std::string>());
    const auto& a = j.at("arch");
    m.arch.d_model = a.at("d_model").get<int>();
    m.arch.n_heads = a.at("n_heads").get<int>();
    m.arch.n_layers = a.at("n_layers").get<int>();
    m.arch.d_ff = a.at("d_ff").get<int>();
    m.arch.hidden = a.at("hidden").get<int>();
    m.target.mean = j.at("target").at("mean").get<double>();
    m.target.stdev = j.at("target").at("std").get<double>();
    size_t feat_n = (m.kind == ModelKind::SetAttention) ? 0 : static_cast<size_t>(kSummaryDim);
    m.feat_mean = b64_decode(j.at("feat_mean").get<std::string>(), feat_n);
    m.feat_std = b64_decode(j.at("feat_std").get<std::string>(), feat_n);
    for (const auto& jp : j.at("params")) {
        ParamTensor t;
        t.name = jp.at("name").get<std::string>();
        for (const auto& s : jp.at("shape")) t.shape.push_back(s.get<size_t>());
        t.v = b64_decode(jp.at("data").get<std::string>(), numel(t.shape));
        m.params.push_back(std::move(t));
    }
    return m;
}

void save_model(const std::string& path, const RegressionModel& m) {
    write_file(path, model_to_json(m) + "\n");
}

RegressionModel load_model(const std::string& path) { return model_from_json(read_file(path)); }

}  // namespace vrpd
