#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nvicore/rng.hpp"
#include "nvicore/synth.hpp"

namespace nvi {

// Encoder-only classifier: patch-averaged input tokens, linear projection
// with LayerNorm plus a learned positional embedding, pre-norm encoder
// layers (multi-head self-attention and a GELU FFN, dropout on each residual
// branch), global average pooling and a two-layer head emitting one logit.
// The continuous score is 100 * sigmoid(logit).
struct ModelConfig {
    std::size_t in_channels = 4;
    std::size_t d_model = 128;
    std::size_t heads = 4;
    std::size_t layers = 2;
    std::size_t ffn_dim = 256;
    double dropout = 0.15;
    std::size_t seq_len = 60;     // tokens
    std::size_t patch = 100;      // samples averaged per token
    std::size_t head_hidden = 32;

    std::size_t window_samples() const { return seq_len * patch; }
    void validate() const;  // d_model divisible by heads, dropout in [0,1)
};

// Closed form matching the parameters the model actually allocates.
std::size_t param_count(const ModelConfig& cfg);

struct ParamView {
    std::string name;
    std::size_t offset = 0;
    std::vector<std::size_t> shape;

    std::size_t numel() const {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }
};

struct Batch {
    std::vector<double> x;  // b * channels * t_samples, row-major
    std::size_t b = 0, channels = 0, t_samples = 0;
};

enum class RunMode { train, eval };

struct ForwardOutput {
    std::vector<double> logits;
    std::vector<double> nvi_pred;  // 100 * sigmoid(logit), in [0, 100]
};

class TransformerLite {
public:
    TransformerLite(const ModelConfig& cfg, std::uint64_t init_seed);
    TransformerLite(TransformerLite&&) noexcept;
    TransformerLite& operator=(TransformerLite&&) noexcept;
    ~TransformerLite();

    const ModelConfig& config() const { return cfg_; }
    const std::vector<ParamView>& param_views() const { return views_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<double>& grads() const { return grads_; }

    // Train mode records the activations backward() consumes and applies
    // dropout (the rng is required when dropout > 0). Eval mode is pure.
    ForwardOutput forward(const Batch& batch, RunMode mode, Rng* dropout_rng = nullptr);

    // Reverse pass from d(loss)/d(logit) per batch item. Requires a
    // recorded train-mode forward; accumulates into grads().
    void backward(const std::vector<double>& dlogit);

    void zero_grads();

    // Attention probabilities of the last recorded forward:
    // b * heads * seq_len * seq_len for the given layer.
    const std::vector<double>& attention_probs(std::size_t layer) const;

private:
    struct LayerTrace;
    struct Trace;

    ModelConfig cfg_;
    std::vector<ParamView> views_;
    std::vector<double> params_;
    std::vector<double> grads_;
    std::unique_ptr<Trace> trace_;

    double* view(const char* name);
    const double* view(const char* name) const;
    double* gview(const char* name);
};

// 0.7 MSE + 0.3 class-weighted BCE by default; predictions and targets are
// compared on the [0, 1] scale (score / 100). The BCE logit is capped at
// +/-30, which also zeroes its gradient beyond the cap.
struct LossTerms {
    double total = 0.0;
    double mse = 0.0;
    double bce = 0.0;
    std::vector<double> dlogit;
};

LossTerms combined_loss(const std::vector<double>& logits,
                        const std::vector<double>& nvi_targets,
                        const std::vector<int>& labels, double pos_weight,
                        double mse_weight = 0.7, double bce_weight = 0.3);

// Decoupled weight decay; beta1 0.9, beta2 0.999, eps 1e-8.
struct AdamWState {
    std::vector<double> m, v;
    std::size_t t = 0;
};

void adamw_step(std::vector<double>& params, const std::vector<double>& grads,
                AdamWState& state, double lr, double weight_decay);

// eta_min + 0.5 (lr - eta_min)(1 + cos(pi epoch / t_max)); epochs beyond
// t_max stay at eta_min.
double cosine_lr(std::size_t epoch, double lr_max, std::size_t t_max, double eta_min);

struct TrainConfig {
    double lr = 1e-3;
    double weight_decay = 1e-2;
    std::size_t t_max = 100;
    double eta_min = 1e-5;
    std::size_t patience = 25;
    double pos_weight = 0.0;  // <= 0 means n_neg / n_pos of the train split
    double mse_weight = 0.7;
    double bce_weight = 0.3;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_auc = 0.0;
    double lr = 0.0;
};

struct Checkpoint {
    ModelConfig model_cfg;
    TrainConfig train_cfg;
    std::vector<double> params;
    std::vector<double> opt_m, opt_v;
    std::size_t opt_t = 0;
    std::size_t epoch = 0;         // epoch of the retained best parameters
    double best_val_auc = 0.0;
    std::array<std::uint64_t, 6> rng_state{};
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;
    double best_val_auc = 0.0;
};

// Mini-batch loop with seeded shuffling, per-epoch validation AUC, best
// checkpoint retention and early stopping after `patience` epochs without
// improvement. Deterministic for a fixed seed.
TrainResult train(const Dataset& dataset, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg);

// Versioned binary container: JSON header (configs, epoch, metric, RNG
// state) followed by named tensors as raw row-major doubles. A reload
// reproduces eval-mode outputs bit-exactly.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Assemble a batch from dataset windows (shape checks happen in forward).
Batch make_batch(const Dataset& dataset, const std::vector<std::size_t>& indices);

// Eval-mode logits over the given windows, batched internally.
std::vector<double> eval_logits(TransformerLite& model, const Dataset& dataset,
                                const std::vector<std::size_t>& indices,
                                std::size_t batch_size = 64);

} // namespace nvi
