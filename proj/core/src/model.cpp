#include "nvicore/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "nvicore/errors.hpp"
#include "nvicore/stats.hpp"

namespace nvi {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kSqrt2 = 1.41421356237309514547;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / kSqrt2)); }

double gelu_grad(double x) {
    return 0.5 * (1.0 + std::erf(x / kSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

// Four-way dot product; the explicit partial sums give the compiler a
// reassociation-free path to SIMD.
inline double dot4(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

// y (rows x out) = x (rows x in) * W^T + b, W stored row-major (out x in).
void linear_forward(const double* x, const double* w, const double* b, double* y,
                    std::size_t rows, std::size_t in, std::size_t out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * in;
        double* yr = y + r * out;
        for (std::size_t o = 0; o < out; ++o) {
            yr[o] = (b ? b[o] : 0.0) + dot4(w + o * in, xr, in);
        }
    }
}

// Accumulates dW, db and (when dx != nullptr) dx for the layer above.
void linear_backward(const double* x, const double* w, const double* dy, double* dw,
                     double* db, double* dx, std::size_t rows, std::size_t in,
                     std::size_t out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * in;
        const double* dyr = dy + r * out;
        for (std::size_t o = 0; o < out; ++o) {
            const double g = dyr[o];
            if (g == 0.0) continue;
            double* dwo = dw + o * in;
            for (std::size_t i = 0; i < in; ++i) dwo[i] += g * xr[i];
            db[o] += g;
        }
        if (dx) {
            double* dxr = dx + r * in;
            for (std::size_t o = 0; o < out; ++o) {
                const double g = dyr[o];
                if (g == 0.0) continue;
                const double* wo = w + o * in;
                for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wo[i];
            }
        }
    }
}

// Row-wise LayerNorm; caches xhat and rstd for the backward pass.
void layernorm_forward(const double* x, const double* gamma, const double* beta, double* y,
                       double* xhat, double* rstd, std::size_t rows, std::size_t dim) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * dim;
        double mu = 0.0;
        for (std::size_t i = 0; i < dim; ++i) mu += xr[i];
        mu /= static_cast<double>(dim);
        double var = 0.0;
        for (std::size_t i = 0; i < dim; ++i) var += (xr[i] - mu) * (xr[i] - mu);
        var /= static_cast<double>(dim);
        const double rs = 1.0 / std::sqrt(var + kLnEps);
        rstd[r] = rs;
        double* xh = xhat + r * dim;
        double* yr = y + r * dim;
        for (std::size_t i = 0; i < dim; ++i) {
            xh[i] = (xr[i] - mu) * rs;
            yr[i] = gamma[i] * xh[i] + beta[i];
        }
    }
}

void layernorm_backward(const double* xhat, const double* rstd, const double* gamma,
                        const double* dy, double* dgamma, double* dbeta, double* dx,
                        std::size_t rows, std::size_t dim) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xh = xhat + r * dim;
        const double* dyr = dy + r * dim;
        double* dxr = dx + r * dim;
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double dxhat = dyr[i] * gamma[i];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xh[i];
            dgamma[i] += dyr[i] * xh[i];
            dbeta[i] += dyr[i];
        }
        const double inv_dim = 1.0 / static_cast<double>(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            const double dxhat = dyr[i] * gamma[i];
            dxr[i] += rstd[r] * (dxhat - inv_dim * sum_dxhat - xh[i] * inv_dim * sum_dxhat_xhat);
        }
    }
}

// Inverted dropout mask holding 0 or 1/(1-p); identity when rng is null.
void fill_dropout_mask(std::vector<double>& mask, double p, Rng* rng) {
    if (p <= 0.0 || rng == nullptr) {
        std::fill(mask.begin(), mask.end(), 1.0);
        return;
    }
    const double keep = 1.0 - p;
    for (double& m : mask) m = (rng->uniform() < keep) ? 1.0 / keep : 0.0;
}

nlohmann::json model_cfg_to_json(const ModelConfig& c) {
    return nlohmann::json{{"in_channels", c.in_channels}, {"d_model", c.d_model},
                          {"heads", c.heads},             {"layers", c.layers},
                          {"ffn_dim", c.ffn_dim},         {"dropout", c.dropout},
                          {"seq_len", c.seq_len},         {"patch", c.patch},
                          {"head_hidden", c.head_hidden}};
}

ModelConfig model_cfg_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.in_channels = j.at("in_channels").get<std::size_t>();
    c.d_model = j.at("d_model").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.seq_len = j.at("seq_len").get<std::size_t>();
    c.patch = j.at("patch").get<std::size_t>();
    c.head_hidden = j.at("head_hidden").get<std::size_t>();
    return c;
}

nlohmann::json train_cfg_to_json(const TrainConfig& c) {
    return nlohmann::json{{"lr", c.lr},
                          {"weight_decay", c.weight_decay},
                          {"t_max", c.t_max},
                          {"eta_min", c.eta_min},
                          {"patience", c.patience},
                          {"pos_weight", c.pos_weight},
                          {"mse_weight", c.mse_weight},
                          {"bce_weight", c.bce_weight},
                          {"batch_size", c.batch_size},
                          {"max_epochs", c.max_epochs},
                          {"seed", c.seed}};
}

TrainConfig train_cfg_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.lr = j.at("lr").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.t_max = j.at("t_max").get<std::size_t>();
    c.eta_min = j.at("eta_min").get<double>();
    c.patience = j.at("patience").get<std::size_t>();
    c.pos_weight = j.at("pos_weight").get<double>();
    c.mse_weight = j.at("mse_weight").get<double>();
    c.bce_weight = j.at("bce_weight").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

} // namespace

void ModelConfig::validate() const {
    if (d_model == 0 || heads == 0 || d_model % heads != 0) {
        throw ParamError("ModelConfig: d_model must be a positive multiple of heads");
    }
    if (dropout < 0.0 || dropout >= 1.0) {
        throw ParamError("ModelConfig: dropout must be in [0, 1)");
    }
    if (in_channels == 0 || seq_len == 0 || patch == 0 || head_hidden == 0) {
        throw ParamError("ModelConfig: in_channels, seq_len, patch, head_hidden must be > 0");
    }
}

std::size_t param_count(const ModelConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.d_model, c = cfg.in_channels, f = cfg.ffn_dim;
    const std::size_t embed = d * c + d + 2 * d;
    const std::size_t pos = cfg.seq_len * d;
    const std::size_t per_layer = 2 * d               // ln1
                                  + 4 * (d * d + d)   // q, k, v, o projections
                                  + 2 * d             // ln2
                                  + (f * d + f)       // ffn in
                                  + (d * f + d);      // ffn out
    const std::size_t head = cfg.head_hidden * d + cfg.head_hidden + cfg.head_hidden + 1;
    return embed + pos + cfg.layers * per_layer + head;
}

struct TransformerLite::LayerTrace {
    std::vector<double> xhat1, rstd1, a1;       // pre-attention norm
    std::vector<double> q, k, v;                // projections
    std::vector<double> probs;                  // b*h*t*t softmax rows
    std::vector<double> ctx;                    // merged head context
    std::vector<double> attn_mask;              // residual dropout
    std::vector<double> xhat2, rstd2, a2;       // pre-ffn norm
    std::vector<double> f1, g;                  // ffn pre-activation / activation
    std::vector<double> ffn_mask;
    std::vector<double> h_in;                   // residual stream entering the layer
};

struct TransformerLite::Trace {
    std::size_t b = 0;
    std::vector<double> tok;                    // b*t*c patched input
    std::vector<double> emb;                    // pre-norm embedding
    std::vector<double> xhat_e, rstd_e;
    std::vector<LayerTrace> layers;
    std::vector<double> h_final;                // residual stream after layers
    std::vector<double> pooled;
    std::vector<double> head_pre, head_act, head_mask;
    std::vector<double> logits;
};

TransformerLite::TransformerLite(TransformerLite&&) noexcept = default;
TransformerLite& TransformerLite::operator=(TransformerLite&&) noexcept = default;
TransformerLite::~TransformerLite() = default;

TransformerLite::TransformerLite(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t d = cfg_.d_model, c = cfg_.in_channels, f = cfg_.ffn_dim;
    const std::size_t hh = cfg_.head_hidden;

    std::size_t off = 0;
    auto add = [&](std::string name, std::vector<std::size_t> shape) {
        ParamView v{std::move(name), off, std::move(shape)};
        off += v.numel();
        views_.push_back(std::move(v));
    };
    add("embed.weight", {d, c});
    add("embed.bias", {d});
    add("embed_norm.gamma", {d});
    add("embed_norm.beta", {d});
    add("pos.weight", {cfg_.seq_len, d});
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        add(p + "ln1.gamma", {d});
        add(p + "ln1.beta", {d});
        add(p + "attn.wq", {d, d});
        add(p + "attn.bq", {d});
        add(p + "attn.wk", {d, d});
        add(p + "attn.bk", {d});
        add(p + "attn.wv", {d, d});
        add(p + "attn.bv", {d});
        add(p + "attn.wo", {d, d});
        add(p + "attn.bo", {d});
        add(p + "ln2.gamma", {d});
        add(p + "ln2.beta", {d});
        add(p + "ffn.w1", {f, d});
        add(p + "ffn.b1", {f});
        add(p + "ffn.w2", {d, f});
        add(p + "ffn.b2", {d});
    }
    add("head.w1", {hh, d});
    add("head.b1", {hh});
    add("head.w2", {1, hh});
    add("head.b2", {1});

    params_.assign(off, 0.0);
    grads_.assign(off, 0.0);

    Rng rng(init_seed);
    for (const ParamView& v : views_) {
        double* p = params_.data() + v.offset;
        const bool is_bias = v.shape.size() == 1 && v.name.find("norm") == std::string::npos &&
                             v.name.find("ln") == std::string::npos;
        if (v.name.ends_with(".gamma")) {
            std::fill_n(p, v.numel(), 1.0);
        } else if (v.name.ends_with(".beta") || is_bias) {
            std::fill_n(p, v.numel(), 0.0);
        } else if (v.name == "pos.weight") {
            for (std::size_t i = 0; i < v.numel(); ++i) p[i] = rng.gaussian(0.0, 0.02);
        } else {
            const double fan_in = static_cast<double>(v.shape.back());
            const double fan_out = static_cast<double>(v.shape.front());
            const double sd = std::sqrt(2.0 / (fan_in + fan_out));
            for (std::size_t i = 0; i < v.numel(); ++i) p[i] = rng.gaussian(0.0, sd);
        }
    }
}

double* TransformerLite::view(const char* name) {
    for (const ParamView& v : views_) {
        if (v.name == name) return params_.data() + v.offset;
    }
    throw Error(std::string("TransformerLite: no parameter named ") + name);
}

const double* TransformerLite::view(const char* name) const {
    return const_cast<TransformerLite*>(this)->view(name);
}

double* TransformerLite::gview(const char* name) {
    for (const ParamView& v : views_) {
        if (v.name == name) return grads_.data() + v.offset;
    }
    throw Error(std::string("TransformerLite: no parameter named ") + name);
}

void TransformerLite::zero_grads() { std::fill(grads_.begin(), grads_.end(), 0.0); }

ForwardOutput TransformerLite::forward(const Batch& batch, RunMode mode, Rng* dropout_rng) {
    const std::size_t bsz = batch.b, t = cfg_.seq_len, d = cfg_.d_model;
    const std::size_t c = cfg_.in_channels, f = cfg_.ffn_dim, heads = cfg_.heads;
    const std::size_t dh = d / heads;
    const std::size_t hh = cfg_.head_hidden;

    if (batch.b == 0 || batch.channels != c || batch.t_samples != cfg_.window_samples() ||
        batch.x.size() != bsz * c * batch.t_samples) {
        throw ShapeError("forward: expected batch of [b, " + std::to_string(c) + ", " +
                         std::to_string(cfg_.window_samples()) + "], got [" +
                         std::to_string(batch.b) + ", " + std::to_string(batch.channels) +
                         ", " + std::to_string(batch.t_samples) + "]");
    }
    for (double v : batch.x) {
        if (!std::isfinite(v)) throw DataError("forward: non-finite input value");
    }
    const bool training = mode == RunMode::train;
    if (training && cfg_.dropout > 0.0 && dropout_rng == nullptr) {
        throw ParamError("forward: train mode with dropout needs an rng");
    }

    auto trace = std::make_unique<Trace>();
    trace->b = bsz;
    const std::size_t rows = bsz * t;

    // Patch averaging: token (b, t) channel c is the mean over patch samples.
    trace->tok.assign(rows * c, 0.0);
    for (std::size_t b = 0; b < bsz; ++b) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* src = batch.x.data() + (b * c + ch) * batch.t_samples;
            for (std::size_t tt = 0; tt < t; ++tt) {
                double acc = 0.0;
                for (std::size_t p = 0; p < cfg_.patch; ++p) acc += src[tt * cfg_.patch + p];
                trace->tok[(b * t + tt) * c + ch] = acc / static_cast<double>(cfg_.patch);
            }
        }
    }

    // Embedding projection, LayerNorm, positional embedding.
    trace->emb.assign(rows * d, 0.0);
    linear_forward(trace->tok.data(), view("embed.weight"), view("embed.bias"),
                   trace->emb.data(), rows, c, d);
    std::vector<double> h(rows * d);
    trace->xhat_e.assign(rows * d, 0.0);
    trace->rstd_e.assign(rows, 0.0);
    layernorm_forward(trace->emb.data(), view("embed_norm.gamma"), view("embed_norm.beta"),
                      h.data(), trace->xhat_e.data(), trace->rstd_e.data(), rows, d);
    {
        const double* pos = view("pos.weight");
        for (std::size_t b = 0; b < bsz; ++b) {
            for (std::size_t tt = 0; tt < t; ++tt) {
                double* hr = h.data() + (b * t + tt) * d;
                const double* pr = pos + tt * d;
                for (std::size_t i = 0; i < d; ++i) hr[i] += pr[i];
            }
        }
    }

    const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    trace->layers.resize(cfg_.layers);
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        LayerTrace& lt = trace->layers[l];
        const std::string p = "layer" + std::to_string(l) + ".";
        lt.h_in = h;

        lt.xhat1.assign(rows * d, 0.0);
        lt.rstd1.assign(rows, 0.0);
        lt.a1.assign(rows * d, 0.0);
        layernorm_forward(h.data(), view((p + "ln1.gamma").c_str()),
                          view((p + "ln1.beta").c_str()), lt.a1.data(), lt.xhat1.data(),
                          lt.rstd1.data(), rows, d);

        lt.q.assign(rows * d, 0.0);
        lt.k.assign(rows * d, 0.0);
        lt.v.assign(rows * d, 0.0);
        linear_forward(lt.a1.data(), view((p + "attn.wq").c_str()),
                       view((p + "attn.bq").c_str()), lt.q.data(), rows, d, d);
        linear_forward(lt.a1.data(), view((p + "attn.wk").c_str()),
                       view((p + "attn.bk").c_str()), lt.k.data(), rows, d, d);
        linear_forward(lt.a1.data(), view((p + "attn.wv").c_str()),
                       view((p + "attn.bv").c_str()), lt.v.data(), rows, d, d);

        lt.probs.assign(bsz * heads * t * t, 0.0);
        lt.ctx.assign(rows * d, 0.0);
        for (std::size_t b = 0; b < bsz; ++b) {
            for (std::size_t hd = 0; hd < heads; ++hd) {
                const std::size_t hoff = hd * dh;
                double* prob = lt.probs.data() + ((b * heads + hd) * t) * t;
                for (std::size_t ti = 0; ti < t; ++ti) {
                    const double* qi = lt.q.data() + (b * t + ti) * d + hoff;
                    double* row = prob + ti * t;
                    double mx = -1e300;
                    for (std::size_t tj = 0; tj < t; ++tj) {
                        const double* kj = lt.k.data() + (b * t + tj) * d + hoff;
                        row[tj] = dot4(qi, kj, dh) * attn_scale;
                        mx = std::max(mx, row[tj]);
                    }
                    double z = 0.0;
                    for (std::size_t tj = 0; tj < t; ++tj) {
                        row[tj] = std::exp(row[tj] - mx);
                        z += row[tj];
                    }
                    for (std::size_t tj = 0; tj < t; ++tj) row[tj] /= z;
                    double* ctx = lt.ctx.data() + (b * t + ti) * d + hoff;
                    for (std::size_t tj = 0; tj < t; ++tj) {
                        const double w = row[tj];
                        const double* vj = lt.v.data() + (b * t + tj) * d + hoff;
                        for (std::size_t i = 0; i < dh; ++i) ctx[i] += w * vj[i];
                    }
                }
            }
        }

        std::vector<double> ao(rows * d);
        linear_forward(lt.ctx.data(), view((p + "attn.wo").c_str()),
                       view((p + "attn.bo").c_str()), ao.data(), rows, d, d);
        lt.attn_mask.assign(rows * d, 1.0);
        if (training) fill_dropout_mask(lt.attn_mask, cfg_.dropout, dropout_rng);
        for (std::size_t i = 0; i < rows * d; ++i) h[i] += ao[i] * lt.attn_mask[i];

        lt.xhat2.assign(rows * d, 0.0);
        lt.rstd2.assign(rows, 0.0);
        lt.a2.assign(rows * d, 0.0);
        layernorm_forward(h.data(), view((p + "ln2.gamma").c_str()),
                          view((p + "ln2.beta").c_str()), lt.a2.data(), lt.xhat2.data(),
                          lt.rstd2.data(), rows, d);

        lt.f1.assign(rows * f, 0.0);
        linear_forward(lt.a2.data(), view((p + "ffn.w1").c_str()),
                       view((p + "ffn.b1").c_str()), lt.f1.data(), rows, d, f);
        lt.g.assign(rows * f, 0.0);
        for (std::size_t i = 0; i < rows * f; ++i) lt.g[i] = gelu(lt.f1[i]);
        std::vector<double> f2(rows * d);
        linear_forward(lt.g.data(), view((p + "ffn.w2").c_str()),
                       view((p + "ffn.b2").c_str()), f2.data(), rows, f, d);
        lt.ffn_mask.assign(rows * d, 1.0);
        if (training) fill_dropout_mask(lt.ffn_mask, cfg_.dropout, dropout_rng);
        for (std::size_t i = 0; i < rows * d; ++i) h[i] += f2[i] * lt.ffn_mask[i];
    }

    trace->h_final = h;
    trace->pooled.assign(bsz * d, 0.0);
    for (std::size_t b = 0; b < bsz; ++b) {
        double* pr = trace->pooled.data() + b * d;
        for (std::size_t tt = 0; tt < t; ++tt) {
            const double* hr = h.data() + (b * t + tt) * d;
            for (std::size_t i = 0; i < d; ++i) pr[i] += hr[i];
        }
        for (std::size_t i = 0; i < d; ++i) pr[i] /= static_cast<double>(t);
    }

    trace->head_pre.assign(bsz * hh, 0.0);
    linear_forward(trace->pooled.data(), view("head.w1"), view("head.b1"),
                   trace->head_pre.data(), bsz, d, hh);
    trace->head_act.assign(bsz * hh, 0.0);
    for (std::size_t i = 0; i < bsz * hh; ++i) trace->head_act[i] = gelu(trace->head_pre[i]);
    trace->head_mask.assign(bsz * hh, 1.0);
    if (training) fill_dropout_mask(trace->head_mask, cfg_.dropout, dropout_rng);
    std::vector<double> head_dropped(bsz * hh);
    for (std::size_t i = 0; i < bsz * hh; ++i) {
        head_dropped[i] = trace->head_act[i] * trace->head_mask[i];
    }
    trace->logits.assign(bsz, 0.0);
    linear_forward(head_dropped.data(), view("head.w2"), view("head.b2"),
                   trace->logits.data(), bsz, hh, 1);

    ForwardOutput out;
    out.logits = trace->logits;
    out.nvi_pred.resize(bsz);
    for (std::size_t b = 0; b < bsz; ++b) out.nvi_pred[b] = 100.0 * sigmoid(out.logits[b]);

    if (training) {
        trace_ = std::move(trace);
    } else {
        trace_.reset();
    }
    return out;
}

void TransformerLite::backward(const std::vector<double>& dlogit) {
    if (!trace_) {
        throw Error("backward: no recorded forward pass (run forward in train mode first)");
    }
    const Trace& tr = *trace_;
    const std::size_t bsz = tr.b, t = cfg_.seq_len, d = cfg_.d_model;
    const std::size_t c = cfg_.in_channels, f = cfg_.ffn_dim, heads = cfg_.heads;
    const std::size_t dh = d / heads, hh = cfg_.head_hidden;
    const std::size_t rows = bsz * t;
    if (dlogit.size() != bsz) {
        throw ShapeError("backward: dlogit size " + std::to_string(dlogit.size()) +
                         " does not match batch " + std::to_string(bsz));
    }

    // Head.
    std::vector<double> head_dropped(bsz * hh);
    for (std::size_t i = 0; i < bsz * hh; ++i) {
        head_dropped[i] = tr.head_act[i] * tr.head_mask[i];
    }
    std::vector<double> d_head_dropped(bsz * hh, 0.0);
    linear_backward(head_dropped.data(), view("head.w2"), dlogit.data(), gview("head.w2"),
                    gview("head.b2"), d_head_dropped.data(), bsz, hh, 1);
    std::vector<double> d_head_pre(bsz * hh);
    for (std::size_t i = 0; i < bsz * hh; ++i) {
        d_head_pre[i] = d_head_dropped[i] * tr.head_mask[i] * gelu_grad(tr.head_pre[i]);
    }
    std::vector<double> d_pooled(bsz * d, 0.0);
    linear_backward(tr.pooled.data(), view("head.w1"), d_head_pre.data(), gview("head.w1"),
                    gview("head.b1"), d_pooled.data(), bsz, d, hh);

    // Average pooling spreads the gradient evenly over tokens.
    std::vector<double> dh_stream(rows * d);
    for (std::size_t b = 0; b < bsz; ++b) {
        const double* dp = d_pooled.data() + b * d;
        for (std::size_t tt = 0; tt < t; ++tt) {
            double* dr = dh_stream.data() + (b * t + tt) * d;
            for (std::size_t i = 0; i < d; ++i) dr[i] = dp[i] / static_cast<double>(t);
        }
    }

    const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t l = cfg_.layers; l-- > 0;) {
        const LayerTrace& lt = tr.layers[l];
        const std::string p = "layer" + std::to_string(l) + ".";

        // FFN branch.
        std::vector<double> df2(rows * d);
        for (std::size_t i = 0; i < rows * d; ++i) df2[i] = dh_stream[i] * lt.ffn_mask[i];
        std::vector<double> dg(rows * f, 0.0);
        linear_backward(lt.g.data(), view((p + "ffn.w2").c_str()), df2.data(),
                        gview((p + "ffn.w2").c_str()), gview((p + "ffn.b2").c_str()),
                        dg.data(), rows, f, d);
        std::vector<double> df1(rows * f);
        for (std::size_t i = 0; i < rows * f; ++i) df1[i] = dg[i] * gelu_grad(lt.f1[i]);
        std::vector<double> da2(rows * d, 0.0);
        linear_backward(lt.a2.data(), view((p + "ffn.w1").c_str()), df1.data(),
                        gview((p + "ffn.w1").c_str()), gview((p + "ffn.b1").c_str()),
                        da2.data(), rows, d, f);
        layernorm_backward(lt.xhat2.data(), lt.rstd2.data(), view((p + "ln2.gamma").c_str()),
                           da2.data(), gview((p + "ln2.gamma").c_str()),
                           gview((p + "ln2.beta").c_str()), dh_stream.data(), rows, d);

        // Attention branch.
        std::vector<double> dao(rows * d);
        for (std::size_t i = 0; i < rows * d; ++i) dao[i] = dh_stream[i] * lt.attn_mask[i];
        std::vector<double> dctx(rows * d, 0.0);
        linear_backward(lt.ctx.data(), view((p + "attn.wo").c_str()), dao.data(),
                        gview((p + "attn.wo").c_str()), gview((p + "attn.bo").c_str()),
                        dctx.data(), rows, d, d);

        std::vector<double> dq(rows * d, 0.0), dk(rows * d, 0.0), dv(rows * d, 0.0);
        std::vector<double> dprob_row(t), dscore_row(t);
        for (std::size_t b = 0; b < bsz; ++b) {
            for (std::size_t hd = 0; hd < heads; ++hd) {
                const std::size_t hoff = hd * dh;
                const double* prob = lt.probs.data() + ((b * heads + hd) * t) * t;
                for (std::size_t ti = 0; ti < t; ++ti) {
                    const double* row = prob + ti * t;
                    const double* dctx_i = dctx.data() + (b * t + ti) * d + hoff;
                    // dP and dV.
                    for (std::size_t tj = 0; tj < t; ++tj) {
                        const double* vj = lt.v.data() + (b * t + tj) * d + hoff;
                        dprob_row[tj] = dot4(dctx_i, vj, dh);
                        double* dvj = dv.data() + (b * t + tj) * d + hoff;
                        const double w = row[tj];
                        for (std::size_t i = 0; i < dh; ++i) dvj[i] += w * dctx_i[i];
                    }
                    // Softmax backward.
                    double dot = 0.0;
                    for (std::size_t tj = 0; tj < t; ++tj) dot += dprob_row[tj] * row[tj];
                    for (std::size_t tj = 0; tj < t; ++tj) {
                        dscore_row[tj] = row[tj] * (dprob_row[tj] - dot);
                    }
                    // dQ and dK.
                    double* dqi = dq.data() + (b * t + ti) * d + hoff;
                    const double* qi = lt.q.data() + (b * t + ti) * d + hoff;
                    for (std::size_t tj = 0; tj < t; ++tj) {
                        const double s = dscore_row[tj] * attn_scale;
                        if (s == 0.0) continue;
                        const double* kj = lt.k.data() + (b * t + tj) * d + hoff;
                        double* dkj = dk.data() + (b * t + tj) * d + hoff;
                        for (std::size_t i = 0; i < dh; ++i) {
                            dqi[i] += s * kj[i];
                            dkj[i] += s * qi[i];
                        }
                    }
                }
            }
        }

        std::vector<double> da1(rows * d, 0.0);
        linear_backward(lt.a1.data(), view((p + "attn.wq").c_str()), dq.data(),
                        gview((p + "attn.wq").c_str()), gview((p + "attn.bq").c_str()),
                        da1.data(), rows, d, d);
        linear_backward(lt.a1.data(), view((p + "attn.wk").c_str()), dk.data(),
                        gview((p + "attn.wk").c_str()), gview((p + "attn.bk").c_str()),
                        da1.data(), rows, d, d);
        linear_backward(lt.a1.data(), view((p + "attn.wv").c_str()), dv.data(),
                        gview((p + "attn.wv").c_str()), gview((p + "attn.bv").c_str()),
                        da1.data(), rows, d, d);
        layernorm_backward(lt.xhat1.data(), lt.rstd1.data(), view((p + "ln1.gamma").c_str()),
                           da1.data(), gview((p + "ln1.gamma").c_str()),
                           gview((p + "ln1.beta").c_str()), dh_stream.data(), rows, d);
    }

    // Positional embedding and input projection.
    {
        double* dpos = gview("pos.weight");
        for (std::size_t b = 0; b < bsz; ++b) {
            for (std::size_t tt = 0; tt < t; ++tt) {
                const double* dr = dh_stream.data() + (b * t + tt) * d;
                double* dp = dpos + tt * d;
                for (std::size_t i = 0; i < d; ++i) dp[i] += dr[i];
            }
        }
    }
    std::vector<double> demb(rows * d, 0.0);
    layernorm_backward(tr.xhat_e.data(), tr.rstd_e.data(), view("embed_norm.gamma"),
                       dh_stream.data(), gview("embed_norm.gamma"), gview("embed_norm.beta"),
                       demb.data(), rows, d);
    linear_backward(tr.tok.data(), view("embed.weight"), demb.data(), gview("embed.weight"),
                    gview("embed.bias"), nullptr, rows, c, d);

    for (double g : grads_) {
        if (!std::isfinite(g)) throw Error("backward: non-finite gradient");
    }
}

const std::vector<double>& TransformerLite::attention_probs(std::size_t layer) const {
    if (!trace_) throw Error("attention_probs: no recorded forward pass");
    if (layer >= trace_->layers.size()) throw ParamError("attention_probs: layer out of range");
    return trace_->layers[layer].probs;
}

LossTerms combined_loss(const std::vector<double>& logits,
                        const std::vector<double>& nvi_targets,
                        const std::vector<int>& labels, double pos_weight, double mse_weight,
                        double bce_weight) {
    const std::size_t n = logits.size();
    if (n == 0 || nvi_targets.size() != n || labels.size() != n) {
        throw ShapeError("combined_loss: logits/targets/labels length mismatch");
    }
    if (pos_weight <= 0.0) throw ParamError("combined_loss: pos_weight must be > 0");
    if (std::fabs(mse_weight + bce_weight - 1.0) > 1e-9) {
        throw ParamError("combined_loss: loss mix weights must sum to 1");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(logits[i]) || !std::isfinite(nvi_targets[i])) {
            throw DataError("combined_loss: non-finite input");
        }
        if (nvi_targets[i] < 0.0 || nvi_targets[i] > 100.0) {
            throw DomainError("combined_loss: nvi_target outside [0, 100]");
        }
        if (labels[i] != 0 && labels[i] != 1) {
            throw DomainError("combined_loss: labels must be 0/1");
        }
    }

    LossTerms out;
    out.dlogit.assign(n, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = logits[i];
        const double s = sigmoid(z);
        const double target_unit = nvi_targets[i] / 100.0;

        const double err = s - target_unit;
        out.mse += err * err * inv_n;
        const double dmse = 2.0 * err * s * (1.0 - s) * inv_n;

        const double zc = std::clamp(z, -30.0, 30.0);
        double bce_i, dbce;
        if (labels[i] == 1) {
            bce_i = pos_weight * softplus(-zc);
            dbce = pos_weight * (sigmoid(zc) - 1.0);
        } else {
            bce_i = softplus(zc);
            dbce = sigmoid(zc);
        }
        if (z != zc) dbce = 0.0;  // beyond the cap the BCE is flat
        out.bce += bce_i * inv_n;
        out.dlogit[i] = mse_weight * dmse + bce_weight * dbce * inv_n;
    }
    out.total = mse_weight * out.mse + bce_weight * out.bce;
    return out;
}

void adamw_step(std::vector<double>& params, const std::vector<double>& grads,
                AdamWState& state, double lr, double weight_decay) {
    if (params.size() != grads.size()) throw ShapeError("adamw_step: params/grads mismatch");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size()) throw ShapeError("adamw_step: stale optimizer state");
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * params[i]);
    }
}

double cosine_lr(std::size_t epoch, double lr_max, std::size_t t_max, double eta_min) {
    if (t_max == 0) throw ParamError("cosine_lr: t_max must be > 0");
    if (epoch >= t_max) return eta_min;
    const double frac = static_cast<double>(epoch) / static_cast<double>(t_max);
    return eta_min + 0.5 * (lr_max - eta_min) * (1.0 + std::cos(3.14159265358979323846 * frac));
}

void TrainConfig::validate() const {
    if (lr <= 0.0 || eta_min < 0.0) throw ParamError("TrainConfig: lr must be > 0");
    if (std::fabs(mse_weight + bce_weight - 1.0) > 1e-9) {
        throw ParamError("TrainConfig: loss mix weights must sum to 1");
    }
    if (batch_size == 0 || max_epochs == 0) {
        throw ParamError("TrainConfig: batch_size and max_epochs must be > 0");
    }
}

Batch make_batch(const Dataset& dataset, const std::vector<std::size_t>& indices) {
    Batch batch;
    if (indices.empty()) return batch;
    const LabeledWindow& first = dataset.windows.at(indices.front());
    batch.b = indices.size();
    batch.channels = kChannels;
    batch.t_samples = first.t;
    batch.x.resize(batch.b * batch.channels * batch.t_samples);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const LabeledWindow& w = dataset.windows.at(indices[i]);
        if (w.t != batch.t_samples) throw ShapeError("make_batch: ragged window lengths");
        std::copy(w.channels.begin(), w.channels.end(),
                  batch.x.begin() + static_cast<std::ptrdiff_t>(i * kChannels * batch.t_samples));
    }
    return batch;
}

std::vector<double> eval_logits(TransformerLite& model, const Dataset& dataset,
                                const std::vector<std::size_t>& indices,
                                std::size_t batch_size) {
    std::vector<double> logits;
    logits.reserve(indices.size());
    for (std::size_t start = 0; start < indices.size(); start += batch_size) {
        const std::size_t end = std::min(indices.size(), start + batch_size);
        const std::vector<std::size_t> chunk(indices.begin() + static_cast<std::ptrdiff_t>(start),
                                             indices.begin() + static_cast<std::ptrdiff_t>(end));
        const ForwardOutput out = model.forward(make_batch(dataset, chunk), RunMode::eval);
        logits.insert(logits.end(), out.logits.begin(), out.logits.end());
    }
    return logits;
}

TrainResult train(const Dataset& dataset, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg) {
    model_cfg.validate();
    train_cfg.validate();
    if (dataset.train_idx.empty() || dataset.val_idx.empty()) {
        throw DataError("train: dataset needs non-empty train and val splits");
    }

    std::size_t n_pos = 0;
    for (std::size_t i : dataset.train_idx) {
        if (dataset.windows[i].label != 0) ++n_pos;
    }
    const std::size_t n_neg = dataset.train_idx.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("train: train split needs both classes");
    const double pos_weight = train_cfg.pos_weight > 0.0
                                  ? train_cfg.pos_weight
                                  : static_cast<double>(n_neg) / static_cast<double>(n_pos);

    std::vector<int> val_labels;
    for (std::size_t i : dataset.val_idx) val_labels.push_back(dataset.windows[i].label);

    TransformerLite model(model_cfg, train_cfg.seed);
    AdamWState opt;
    Rng dropout_rng = Rng::stream(train_cfg.seed, 7001);

    TrainResult result;
    std::vector<double> best_params = model.params();
    double best_auc = -1.0;
    std::size_t best_epoch = 0, since_improve = 0;

    std::vector<std::size_t> order = dataset.train_idx;
    for (std::size_t epoch = 0; epoch < train_cfg.max_epochs; ++epoch) {
        const double lr = cosine_lr(epoch, train_cfg.lr, train_cfg.t_max, train_cfg.eta_min);

        Rng shuffle_rng = Rng::stream(train_cfg.seed, 5001, epoch);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.index(i)]);
        }

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + train_cfg.batch_size);
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(end));
            const Batch batch = make_batch(dataset, idx);
            std::vector<double> targets;
            std::vector<int> labels;
            for (std::size_t i : idx) {
                targets.push_back(dataset.windows[i].nvi_target);
                labels.push_back(dataset.windows[i].label);
            }
            const ForwardOutput out = model.forward(batch, RunMode::train, &dropout_rng);
            const LossTerms loss = combined_loss(out.logits, targets, labels, pos_weight,
                                                 train_cfg.mse_weight, train_cfg.bce_weight);
            model.zero_grads();
            model.backward(loss.dlogit);
            adamw_step(model.params(), model.grads(), opt, lr, train_cfg.weight_decay);
            epoch_loss += loss.total * static_cast<double>(idx.size());
            seen += idx.size();
        }
        epoch_loss /= static_cast<double>(seen);

        const std::vector<double> val_logits = eval_logits(model, dataset, dataset.val_idx);
        const double val_auc = roc_auc(val_logits, val_labels);

        result.history.push_back(EpochStats{epoch, epoch_loss, val_auc, lr});

        if (val_auc > best_auc) {
            best_auc = val_auc;
            best_epoch = epoch;
            best_params = model.params();
            since_improve = 0;
        } else {
            ++since_improve;
            if (since_improve > train_cfg.patience) break;
        }
    }

    result.best_epoch = best_epoch;
    result.best_val_auc = best_auc;
    Checkpoint& ck = result.checkpoint;
    ck.model_cfg = model_cfg;
    ck.train_cfg = train_cfg;
    ck.params = std::move(best_params);
    ck.opt_m = opt.m;
    ck.opt_v = opt.v;
    ck.opt_t = opt.t;
    ck.epoch = best_epoch;
    ck.best_val_auc = best_auc;
    ck.rng_state = dropout_rng.serialize();
    return result;
}

namespace {

void write_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ofstream& f, std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint32_t read_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::uint64_t read_u64(std::ifstream& f) {
    std::uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_tensor(std::ofstream& f, const std::string& name,
                  const std::vector<std::size_t>& shape, const double* data,
                  std::size_t numel) {
    write_u32(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(f, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) write_u64(f, d);
    write_u64(f, numel);
    f.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(numel * sizeof(double)));
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("save_checkpoint: cannot open " + path);

    nlohmann::json header{{"format", "nvi-checkpoint"},
                          {"model_config", model_cfg_to_json(ckpt.model_cfg)},
                          {"train_config", train_cfg_to_json(ckpt.train_cfg)},
                          {"epoch", ckpt.epoch},
                          {"best_val_auc", ckpt.best_val_auc},
                          {"opt_t", ckpt.opt_t},
                          {"rng_state", ckpt.rng_state}};
    const std::string hs = header.dump();

    f.write("NVCK", 4);
    write_u32(f, 1);  // container version
    write_u64(f, hs.size());
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));

    TransformerLite probe(ckpt.model_cfg, 0);  // registry only, for names/shapes
    const auto& views = probe.param_views();
    if (ckpt.params.size() != param_count(ckpt.model_cfg)) {
        throw ShapeError("save_checkpoint: params length does not match config");
    }
    const bool with_opt = !ckpt.opt_m.empty();
    write_u32(f, static_cast<std::uint32_t>(views.size() + (with_opt ? 2 : 0)));
    for (const ParamView& v : views) {
        write_tensor(f, v.name, v.shape, ckpt.params.data() + v.offset, v.numel());
    }
    if (with_opt) {
        write_tensor(f, "optimizer.m", {ckpt.opt_m.size()}, ckpt.opt_m.data(), ckpt.opt_m.size());
        write_tensor(f, "optimizer.v", {ckpt.opt_v.size()}, ckpt.opt_v.data(), ckpt.opt_v.size());
    }
    if (!f) throw DataError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("load_checkpoint: cannot open " + path);

    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "NVCK", 4) != 0) {
        throw DataError("load_checkpoint: bad magic in " + path);
    }
    const std::uint32_t version = read_u32(f);
    if (version != 1) {
        throw DataError("load_checkpoint: unsupported container version " +
                        std::to_string(version));
    }
    const std::uint64_t hlen = read_u64(f);
    std::string hs(hlen, '\0');
    f.read(hs.data(), static_cast<std::streamsize>(hlen));
    const nlohmann::json header = nlohmann::json::parse(hs);

    Checkpoint ck;
    ck.model_cfg = model_cfg_from_json(header.at("model_config"));
    ck.train_cfg = train_cfg_from_json(header.at("train_config"));
    ck.epoch = header.at("epoch").get<std::size_t>();
    ck.best_val_auc = header.at("best_val_auc").get<double>();
    ck.opt_t = header.at("opt_t").get<std::size_t>();
    const auto rs = header.at("rng_state").get<std::vector<std::uint64_t>>();
    std::copy_n(rs.begin(), std::min<std::size_t>(rs.size(), ck.rng_state.size()),
                ck.rng_state.begin());

    TransformerLite probe(ck.model_cfg, 0);
    ck.params.assign(param_count(ck.model_cfg), 0.0);

    const std::uint32_t count = read_u32(f);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(f);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        const std::uint32_t ndim = read_u32(f);
        std::vector<std::size_t> shape(ndim);
        for (auto& d : shape) d = read_u64(f);
        const std::uint64_t numel = read_u64(f);
        std::vector<double> data(numel);
        f.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(numel * sizeof(double)));
        if (!f) throw DataError("load_checkpoint: truncated tensor " + name);

        if (name == "optimizer.m") {
            ck.opt_m = std::move(data);
        } else if (name == "optimizer.v") {
            ck.opt_v = std::move(data);
        } else {
            bool found = false;
            for (const ParamView& v : probe.param_views()) {
                if (v.name == name) {
                    if (v.shape != shape || v.numel() != numel) {
                        throw DataError("load_checkpoint: shape mismatch for " + name);
                    }
                    std::copy(data.begin(), data.end(),
                              ck.params.begin() + static_cast<std::ptrdiff_t>(v.offset));
                    found = true;
                    break;
                }
            }
            if (!found) throw DataError("load_checkpoint: unknown tensor " + name);
        }
    }
    return ck;
}

} // namespace nvi
