#pragma once

#include <vector>

#include "bus/core.hpp"
#include "bus/morphology.hpp"

namespace bus {

struct DeconConfig {
    double temperature = 0.1;
    double weight = 1.0;  // lambda_D in the total loss
    MorphConfig morph;

    void validate() const {
        if (!(temperature > 0.0)) throw ValidationError("DeconConfig: temperature must be > 0");
        if (weight < 0.0) throw ValidationError("DeconConfig: weight must be >= 0");
        morph.validate();
    }
};

/// A scalar loss plus its gradient, flattened with the same layout as the
/// differentiated input (logit map or feature map).
struct LossValue {
    double value = 0.0;
    std::vector<double> gradient;
    bool skipped = false;  // set when the loss had no usable samples
};

/// Mean categorical cross-entropy over non-ignore pixels, each scaled by its
/// pixel weight. The gradient is (softmax - onehot) * weight / count, laid
/// out like the logits. Labels outside [0, num_classes) that are not the
/// ignore sentinel are an error.
LossValue weighted_cross_entropy(const LogitMap& logits, const LabelMap& labels,
                                 const std::vector<double>& pixel_weights, const ClassSpace& cs);

/// Dilation-erosion contrastive loss over a cropped feature map:
///   anchor    = renormalized mean of the L2-normalized core (positive) features
///   loss      = -log [ sum_p exp(anchor . pos_p / tau) / sum_n exp(anchor . neg_n / tau) ]
/// Gradient flows to every pixel in the core and the band, including through
/// the anchor. Returns a skipped zero when either mask is empty.
LossValue decon_loss(const FeatureMap& features, const BinaryMask& positives,
                     const BinaryMask& negatives, const DeconConfig& cfg);

struct TotalLoss {
    double value = 0.0;
    std::vector<double> source_gradient;  // w.r.t. source logits
    std::vector<double> target_gradient;  // w.r.t. target logits
    std::vector<double> decon_gradient;   // w.r.t. crop features, scaled by lambda_D
};

/// L = source_ce + target_ce + lambda_D * decon, gradients combined linearly.
TotalLoss total_loss(const LossValue& source_ce, const LossValue& target_ce,
                     const LossValue& decon, double lambda_d);

}  // namespace bus
