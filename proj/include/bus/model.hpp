#pragma once

#include <string>

#include "bus/core.hpp"
#include "bus/rng.hpp"

namespace bus {

/// Three-layer per-pixel segmentation net:
///   conv1 3x3 (3 -> hidden) + ReLU
///   conv2 3x3 (hidden -> hidden) + ReLU   <- its output is the feature map
///   head  1x1 (hidden -> num_out) logits
struct SegNetConfig {
    int hidden = 16;
    int num_out = 5;

    void validate() const {
        if (hidden < 1 || hidden > 64) throw ValidationError("SegNetConfig: hidden out of range");
        if (num_out < 1 || num_out > 64)
            throw ValidationError("SegNetConfig: num_out out of range");
    }
};

struct ForwardResult {
    LogitMap logits;
    FeatureMap features;
};

/// Activations kept for the backward pass.
struct ForwardCache {
    ImageTensor input;
    FeatureMap a1;                     // post-ReLU conv1
    std::vector<std::uint8_t> mask1;   // conv1 pre-activation > 0
    FeatureMap a2;                     // post-ReLU conv2 (the feature map)
    std::vector<std::uint8_t> mask2;
    LogitMap logits;
};

class SegNet {
public:
    explicit SegNet(SegNetConfig cfg);

    const SegNetConfig& config() const { return cfg_; }
    int param_count() const { return param_count_; }
    static int param_count(const SegNetConfig& cfg);

    ParamVector& params() { return params_; }
    const ParamVector& params() const { return params_; }
    void set_params(ParamVector p);

    /// Uniform +-1/sqrt(fan_in) per layer, weights and biases alike.
    void init_params(Rng& rng);

    ForwardResult forward(const ImageTensor& image) const;
    ForwardCache forward_cached(const ImageTensor& image) const;

    /// Accumulate parameter gradients into grad. g_logits (layout of the
    /// logit map) and g_features (layout of the conv2 feature map) may each
    /// be null when that head of the loss is absent.
    void backward(const ForwardCache& cache, const double* g_logits, const double* g_features,
                  ParamVector& grad) const;

private:
    SegNetConfig cfg_;
    int param_count_ = 0;
    ParamVector params_;

    // Flat layout offsets: [w1 | b1 | w2 | b2 | wh | bh] with output channel
    // fastest in every weight block.
    int w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0, wh_ = 0, bh_ = 0;
};

struct SgdState {
    ParamVector velocity;
};

/// velocity = momentum * velocity + grads; params -= lr * velocity.
void sgd_step(ParamVector& params, const ParamVector& grads, double lr, double momentum,
              SgdState& state);

enum class TrainMode {
    kConfThreshold,
    kHeadExpansion,
    kHeadExpansionDecon,
    kHeadExpansionRemix,
    kBusFull,
};

bool mode_uses_unknown_head(TrainMode mode);
bool mode_uses_decon(TrainMode mode);
bool mode_uses_remix(TrainMode mode);
std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);

/// Per-pixel prediction. Head-expansion modes take the argmax over all
/// heads; conf_threshold takes the argmax over known heads and overrides
/// pixels whose max probability falls below tau_inf with the unknown class.
LabelMap predict(const SegNet& net, const ImageTensor& image, TrainMode mode, double tau_inf,
                 const ClassSpace& cs);

}  // namespace bus
