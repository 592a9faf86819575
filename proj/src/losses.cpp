#include "bus/losses.hpp"

#include <cmath>

namespace bus {

namespace {

// Smooth L2 normalization keeps the loss differentiable at zero feature
// vectors (ReLU features can vanish on whole pixels).
constexpr double kNormEps = 1e-8;

}  // namespace

LossValue weighted_cross_entropy(const LogitMap& logits, const LabelMap& labels,
                                 const std::vector<double>& pixel_weights, const ClassSpace& cs) {
    if (labels.height != logits.height || labels.width != logits.width)
        throw ValidationError("weighted_cross_entropy: dimension mismatch");
    if (pixel_weights.size() != labels.data.size())
        throw ValidationError("weighted_cross_entropy: weight count mismatch");

    const int k = logits.num_classes;
    LossValue out;
    out.gradient.assign(logits.data.size(), 0.0);

    std::size_t contributing = 0;
    for (std::size_t p = 0; p < labels.data.size(); ++p)
        if (labels.data[p] != cs.ignore_id) ++contributing;
    if (contributing == 0) return out;

    double loss = 0.0;
    std::vector<double> probs(k);
    for (std::size_t p = 0; p < labels.data.size(); ++p) {
        const int label = labels.data[p];
        if (label == cs.ignore_id) continue;
        if (label < 0 || label >= k)
            throw ValidationError("weighted_cross_entropy: label out of range");
        const double w = pixel_weights[p];
        if (w < 0.0) throw ValidationError("weighted_cross_entropy: negative weight");

        const std::size_t base = p * k;
        double m = logits.data[base];
        for (int c = 1; c < k; ++c) m = std::max(m, logits.data[base + c]);
        double sum = 0.0;
        for (int c = 0; c < k; ++c) {
            probs[c] = std::exp(logits.data[base + c] - m);
            sum += probs[c];
        }
        const double log_sum = std::log(sum);
        loss += w * (log_sum + m - logits.data[base + label]);

        const double scale = w / static_cast<double>(contributing);
        for (int c = 0; c < k; ++c) out.gradient[base + c] = probs[c] / sum * scale;
        out.gradient[base + label] -= scale;
    }
    out.value = loss / static_cast<double>(contributing);
    return out;
}

LossValue decon_loss(const FeatureMap& features, const BinaryMask& positives,
                     const BinaryMask& negatives, const DeconConfig& cfg) {
    if (!(cfg.temperature > 0.0)) throw ValidationError("decon_loss: temperature must be > 0");
    if (positives.height != features.height || positives.width != features.width ||
        negatives.height != features.height || negatives.width != features.width)
        throw ValidationError("decon_loss: mask/feature dimension mismatch");

    LossValue out;
    out.gradient.assign(features.data.size(), 0.0);

    std::vector<std::size_t> pos, neg;
    for (std::size_t p = 0; p < positives.data.size(); ++p) {
        if (positives.data[p]) pos.push_back(p);
        if (negatives.data[p]) neg.push_back(p);
    }
    if (pos.empty() || neg.empty()) {
        out.skipped = true;
        return out;
    }

    const int f = features.channels;
    const double tau = cfg.temperature;
    const std::size_t np = pos.size(), nn = neg.size();

    // Normalize every participating pixel: u = x / sqrt(|x|^2 + eps^2).
    std::vector<std::size_t> all(pos);
    all.insert(all.end(), neg.begin(), neg.end());
    std::vector<std::vector<double>> unit(all.size(), std::vector<double>(f));
    std::vector<double> inv_norm(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        const double* x = features.data.data() + all[i] * f;
        double sq = kNormEps * kNormEps;
        for (int c = 0; c < f; ++c) sq += x[c] * x[c];
        inv_norm[i] = 1.0 / std::sqrt(sq);
        for (int c = 0; c < f; ++c) unit[i][c] = x[c] * inv_norm[i];
    }

    // Anchor: renormalized mean of the normalized positives.
    std::vector<double> mean(f, 0.0);
    for (std::size_t i = 0; i < np; ++i)
        for (int c = 0; c < f; ++c) mean[c] += unit[i][c];
    for (int c = 0; c < f; ++c) mean[c] /= static_cast<double>(np);
    double mean_sq = kNormEps * kNormEps;
    for (int c = 0; c < f; ++c) mean_sq += mean[c] * mean[c];
    const double inv_mean_norm = 1.0 / std::sqrt(mean_sq);
    std::vector<double> anchor(f);
    for (int c = 0; c < f; ++c) anchor[c] = mean[c] * inv_mean_norm;

    auto dot_anchor = [&](const std::vector<double>& u) {
        double s = 0.0;
        for (int c = 0; c < f; ++c) s += anchor[c] * u[c];
        return s;
    };

    // Stable log-sum-exp of the similarity logits on each side.
    std::vector<double> sp(np), sn(nn);
    double mp = -1e300, mn = -1e300;
    for (std::size_t i = 0; i < np; ++i) {
        sp[i] = dot_anchor(unit[i]) / tau;
        mp = std::max(mp, sp[i]);
    }
    for (std::size_t i = 0; i < nn; ++i) {
        sn[i] = dot_anchor(unit[np + i]) / tau;
        mn = std::max(mn, sn[i]);
    }
    double sum_p = 0.0, sum_n = 0.0;
    for (std::size_t i = 0; i < np; ++i) sum_p += std::exp(sp[i] - mp);
    for (std::size_t i = 0; i < nn; ++i) sum_n += std::exp(sn[i] - mn);
    out.value = -(mp + std::log(sum_p)) + (mn + std::log(sum_n));

    // dL/ds_p = -softmax_p / tau, dL/ds_n = +softmax_n / tau.
    std::vector<double> ds(all.size());
    for (std::size_t i = 0; i < np; ++i) ds[i] = -std::exp(sp[i] - mp) / sum_p / tau;
    for (std::size_t i = 0; i < nn; ++i) ds[np + i] = std::exp(sn[i] - mn) / sum_n / tau;

    // Gradient w.r.t. the anchor, then back through renormalization and mean.
    std::vector<double> g_anchor(f, 0.0);
    for (std::size_t i = 0; i < all.size(); ++i)
        for (int c = 0; c < f; ++c) g_anchor[c] += ds[i] * unit[i][c];
    double a_dot_g = 0.0;
    for (int c = 0; c < f; ++c) a_dot_g += anchor[c] * g_anchor[c];
    std::vector<double> g_mean(f);
    for (int c = 0; c < f; ++c)
        g_mean[c] = inv_mean_norm * (g_anchor[c] - anchor[c] * a_dot_g);

    // Per-pixel gradient: direct similarity term plus (for positives) the
    // anchor-mean pathway, mapped through u = x / sqrt(|x|^2 + eps^2).
    std::vector<double> g_u(f);
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (int c = 0; c < f; ++c) {
            g_u[c] = ds[i] * anchor[c];
            if (i < np) g_u[c] += g_mean[c] / static_cast<double>(np);
        }
        double u_dot_g = 0.0;
        for (int c = 0; c < f; ++c) u_dot_g += unit[i][c] * g_u[c];
        double* g_x = out.gradient.data() + all[i] * f;
        // Accumulate: a pixel listed in both masks contributes twice.
        for (int c = 0; c < f; ++c)
            g_x[c] += inv_norm[i] * (g_u[c] - unit[i][c] * u_dot_g);
    }
    return out;
}

TotalLoss total_loss(const LossValue& source_ce, const LossValue& target_ce,
                     const LossValue& decon, double lambda_d) {
    if (lambda_d < 0.0) throw ValidationError("total_loss: lambda_d must be >= 0");
    TotalLoss out;
    out.value = source_ce.value + target_ce.value + lambda_d * decon.value;
    out.source_gradient = source_ce.gradient;
    out.target_gradient = target_ce.gradient;
    out.decon_gradient = decon.gradient;
    for (double& g : out.decon_gradient) g *= lambda_d;
    return out;
}

}  // namespace bus
