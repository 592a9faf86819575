#include "bus/model.hpp"

#include <cmath>
#include <cstring>

namespace bus {

namespace {

constexpr int kMaxChannels = 64;

// 3x3 same-padding convolution, weights [ky][kx][ci][co] with co fastest.
void conv3x3(const double* in, int h, int w, int ci, const double* weights, const double* bias,
             int co, double* out) {
    double acc[kMaxChannels];
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < co; ++c) acc[c] = bias[c];
            const int dy0 = y > 0 ? -1 : 0, dy1 = y < h - 1 ? 1 : 0;
            const int dx0 = x > 0 ? -1 : 0, dx1 = x < w - 1 ? 1 : 0;
            for (int dy = dy0; dy <= dy1; ++dy) {
                for (int dx = dx0; dx <= dx1; ++dx) {
                    const double* px = in + (static_cast<std::size_t>(y + dy) * w + (x + dx)) * ci;
                    const double* wk = weights + ((dy + 1) * 3 + (dx + 1)) * ci * co;
                    for (int c = 0; c < ci; ++c) {
                        const double v = px[c];
                        const double* wr = wk + c * co;
                        for (int o = 0; o < co; ++o) acc[o] += v * wr[o];
                    }
                }
            }
            double* dst = out + (static_cast<std::size_t>(y) * w + x) * co;
            for (int c = 0; c < co; ++c) dst[c] = acc[c];
        }
    }
}

// Gradients of a 3x3 convolution: accumulates weight/bias gradients and,
// when g_in is non-null, the gradient w.r.t. the input.
void conv3x3_backward(const double* in, int h, int w, int ci, const double* weights, int co,
                      const double* g_out, double* g_weights, double* g_bias, double* g_in) {
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double* gpx = g_out + (static_cast<std::size_t>(y) * w + x) * co;
            for (int o = 0; o < co; ++o) g_bias[o] += gpx[o];
            const int dy0 = y > 0 ? -1 : 0, dy1 = y < h - 1 ? 1 : 0;
            const int dx0 = x > 0 ? -1 : 0, dx1 = x < w - 1 ? 1 : 0;
            for (int dy = dy0; dy <= dy1; ++dy) {
                for (int dx = dx0; dx <= dx1; ++dx) {
                    const std::size_t nb = (static_cast<std::size_t>(y + dy) * w + (x + dx)) * ci;
                    const double* px = in + nb;
                    const int k = (dy + 1) * 3 + (dx + 1);
                    double* gw = g_weights + k * ci * co;
                    for (int c = 0; c < ci; ++c) {
                        const double v = px[c];
                        double* gwr = gw + c * co;
                        for (int o = 0; o < co; ++o) gwr[o] += v * gpx[o];
                    }
                    if (g_in) {
                        const double* wk = weights + k * ci * co;
                        double* gin = g_in + nb;
                        for (int c = 0; c < ci; ++c) {
                            const double* wr = wk + c * co;
                            double s = 0.0;
                            for (int o = 0; o < co; ++o) s += wr[o] * gpx[o];
                            gin[c] += s;
                        }
                    }
                }
            }
        }
    }
}

void relu_forward(const std::vector<double>& z, std::vector<double>& a,
                  std::vector<std::uint8_t>& mask) {
    a.resize(z.size());
    mask.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const bool pos = z[i] > 0.0;
        mask[i] = pos;
        a[i] = pos ? z[i] : 0.0;
    }
}

}  // namespace

SegNet::SegNet(SegNetConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const int f = cfg_.hidden, k = cfg_.num_out;
    w1_ = 0;
    b1_ = w1_ + 9 * 3 * f;
    w2_ = b1_ + f;
    b2_ = w2_ + 9 * f * f;
    wh_ = b2_ + f;
    bh_ = wh_ + f * k;
    param_count_ = bh_ + k;
    params_.assign(param_count_, 0.0);
}

int SegNet::param_count(const SegNetConfig& cfg) { return SegNet(cfg).param_count(); }

void SegNet::set_params(ParamVector p) {
    if (static_cast<int>(p.size()) != param_count_)
        throw ValidationError("SegNet: parameter vector length mismatch");
    params_ = std::move(p);
}

void SegNet::init_params(Rng& rng) {
    const int f = cfg_.hidden;
    auto fill = [&](int begin, int end, double bound) {
        for (int i = begin; i < end; ++i) params_[i] = (rng.uniform() * 2.0 - 1.0) * bound;
    };
    fill(w1_, w2_, 1.0 / std::sqrt(27.0));      // conv1 weights + bias, fan_in 3*9
    fill(w2_, wh_, 1.0 / std::sqrt(9.0 * f));   // conv2
    fill(wh_, param_count_, 1.0 / std::sqrt(static_cast<double>(f)));  // head
}

ForwardCache SegNet::forward_cached(const ImageTensor& image) const {
    if (image.height < 3 || image.width < 3)
        throw ValidationError("SegNet: image must be at least 3x3");
    const int h = image.height, w = image.width, f = cfg_.hidden, k = cfg_.num_out;
    const double* p = params_.data();

    ForwardCache cache;
    cache.input = image;

    std::vector<double> z(static_cast<std::size_t>(h) * w * f);
    conv3x3(image.data.data(), h, w, 3, p + w1_, p + b1_, f, z.data());
    cache.a1.height = h;
    cache.a1.width = w;
    cache.a1.channels = f;
    relu_forward(z, cache.a1.data, cache.mask1);

    conv3x3(cache.a1.data.data(), h, w, f, p + w2_, p + b2_, f, z.data());
    cache.a2.height = h;
    cache.a2.width = w;
    cache.a2.channels = f;
    relu_forward(z, cache.a2.data, cache.mask2);

    cache.logits = LogitMap::zeros(h, w, k);
    const double* wh = p + wh_;
    const double* bh = p + bh_;
    for (std::size_t px = 0; px < static_cast<std::size_t>(h) * w; ++px) {
        const double* feat = cache.a2.data.data() + px * f;
        double* out = cache.logits.data.data() + px * k;
        for (int o = 0; o < k; ++o) out[o] = bh[o];
        for (int c = 0; c < f; ++c) {
            const double v = feat[c];
            const double* wr = wh + c * k;
            for (int o = 0; o < k; ++o) out[o] += v * wr[o];
        }
    }
    return cache;
}

ForwardResult SegNet::forward(const ImageTensor& image) const {
    ForwardCache cache = forward_cached(image);
    return {std::move(cache.logits), std::move(cache.a2)};
}

void SegNet::backward(const ForwardCache& cache, const double* g_logits,
                      const double* g_features, ParamVector& grad) const {
    if (static_cast<int>(grad.size()) != param_count_)
        throw ValidationError("SegNet: gradient vector length mismatch");
    const int h = cache.input.height, w = cache.input.width;
    const int f = cfg_.hidden, k = cfg_.num_out;
    const std::size_t npx = static_cast<std::size_t>(h) * w;
    const double* p = params_.data();

    // Head backward, folding the external feature gradient into g_a2.
    std::vector<double> g_a2(npx * f, 0.0);
    if (g_features) std::memcpy(g_a2.data(), g_features, npx * f * sizeof(double));
    if (g_logits) {
        const double* wh = p + wh_;
        double* gwh = grad.data() + wh_;
        double* gbh = grad.data() + bh_;
        for (std::size_t px = 0; px < npx; ++px) {
            const double* gl = g_logits + px * k;
            const double* feat = cache.a2.data.data() + px * f;
            double* ga = g_a2.data() + px * f;
            for (int o = 0; o < k; ++o) gbh[o] += gl[o];
            for (int c = 0; c < f; ++c) {
                const double v = feat[c];
                const double* wr = wh + c * k;
                double* gwr = gwh + c * k;
                double s = 0.0;
                for (int o = 0; o < k; ++o) {
                    gwr[o] += v * gl[o];
                    s += wr[o] * gl[o];
                }
                ga[c] += s;
            }
        }
    }

    // Through ReLU2, then conv2.
    for (std::size_t i = 0; i < g_a2.size(); ++i)
        if (!cache.mask2[i]) g_a2[i] = 0.0;
    std::vector<double> g_a1(npx * f, 0.0);
    conv3x3_backward(cache.a1.data.data(), h, w, f, p + w2_, f, g_a2.data(),
                     grad.data() + w2_, grad.data() + b2_, g_a1.data());

    // Through ReLU1, then conv1 (no input gradient needed).
    for (std::size_t i = 0; i < g_a1.size(); ++i)
        if (!cache.mask1[i]) g_a1[i] = 0.0;
    conv3x3_backward(cache.input.data.data(), h, w, 3, p + w1_, f, g_a1.data(),
                     grad.data() + w1_, grad.data() + b1_, nullptr);
}

void sgd_step(ParamVector& params, const ParamVector& grads, double lr, double momentum,
              SgdState& state) {
    if (params.size() != grads.size()) throw ValidationError("sgd_step: length mismatch");
    if (state.velocity.empty()) state.velocity.assign(params.size(), 0.0);
    if (state.velocity.size() != params.size())
        throw ValidationError("sgd_step: state length mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.velocity[i] = momentum * state.velocity[i] + grads[i];
        params[i] -= lr * state.velocity[i];
    }
}

bool mode_uses_unknown_head(TrainMode mode) { return mode != TrainMode::kConfThreshold; }

bool mode_uses_decon(TrainMode mode) {
    return mode == TrainMode::kHeadExpansionDecon || mode == TrainMode::kBusFull;
}

bool mode_uses_remix(TrainMode mode) {
    return mode == TrainMode::kHeadExpansionRemix || mode == TrainMode::kBusFull;
}

std::string to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::kConfThreshold: return "conf_threshold";
        case TrainMode::kHeadExpansion: return "head_expansion";
        case TrainMode::kHeadExpansionDecon: return "head_expansion_decon";
        case TrainMode::kHeadExpansionRemix: return "head_expansion_remix";
        case TrainMode::kBusFull: return "bus_full";
    }
    throw ValidationError("to_string: bad TrainMode");
}

TrainMode parse_train_mode(const std::string& name) {
    if (name == "conf_threshold") return TrainMode::kConfThreshold;
    if (name == "head_expansion") return TrainMode::kHeadExpansion;
    if (name == "head_expansion_decon") return TrainMode::kHeadExpansionDecon;
    if (name == "head_expansion_remix") return TrainMode::kHeadExpansionRemix;
    if (name == "bus_full") return TrainMode::kBusFull;
    throw ConfigError("unknown mode: " + name);
}

LabelMap predict(const SegNet& net, const ImageTensor& image, TrainMode mode, double tau_inf,
                 const ClassSpace& cs) {
    const ForwardResult fwd = net.forward(image);
    const ProbMap probs = softmax(fwd.logits);
    auto [labels, maxvals] = argmax_with_prob(probs);
    if (mode == TrainMode::kConfThreshold) {
        for (std::size_t p = 0; p < labels.data.size(); ++p)
            if (maxvals[p] < tau_inf) labels.data[p] = cs.unknown_id;
    }
    return labels;
}

}  // namespace bus
