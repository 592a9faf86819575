#pragma once

#include <functional>

#include "bus/core.hpp"

namespace bus {

/// Teacher output for one target image: per-pixel labels in [0, unknown_id]
/// (never ignore) plus the image-level confidence used to weight its loss.
struct PseudoLabel {
    LabelMap labels;
    double confidence = 0.0;  // q_t in [0,1]
};

/// Optional label refinement stage (e.g. an external mask model). The
/// default hook is the identity; nothing in this repo replaces it.
using RefinementHook = std::function<LabelMap(const LabelMap&)>;

inline RefinementHook identity_refinement() {
    return [](const LabelMap& labels) { return labels; };
}

/// Assign each pixel its argmax known class when the max known-class
/// probability reaches tau_p, otherwise the unknown class. teacher_probs
/// must cover the known classes only (the unknown head is excluded).
LabelMap generate_pseudo_label(const ProbMap& teacher_probs, double tau_p,
                               const ClassSpace& cs);

/// Fraction of pixels whose max probability reaches tau_t.
double confidence_ratio(const ProbMap& teacher_probs, double tau_t);

/// Indicator mask of pixels labeled unknown.
BinaryMask private_mask(const LabelMap& labels, const ClassSpace& cs);

/// teacher <- alpha * teacher + (1 - alpha) * student, elementwise.
ParamVector ema_update(const ParamVector& teacher, const ParamVector& student, double alpha);

}  // namespace bus
