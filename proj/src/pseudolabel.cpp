#include "bus/pseudolabel.hpp"

namespace bus {

LabelMap generate_pseudo_label(const ProbMap& teacher_probs, double tau_p,
                               const ClassSpace& cs) {
    if (!(tau_p > 0.0 && tau_p < 1.0))
        throw ValidationError("generate_pseudo_label: tau_p must be in (0,1)");
    if (teacher_probs.num_classes != cs.num_known)
        throw ValidationError("generate_pseudo_label: probs must cover known classes only");

    auto [labels, maxvals] = argmax_with_prob(teacher_probs);
    for (std::size_t p = 0; p < labels.data.size(); ++p)
        if (maxvals[p] < tau_p) labels.data[p] = cs.unknown_id;
    return labels;
}

double confidence_ratio(const ProbMap& teacher_probs, double tau_t) {
    if (!(tau_t > 0.0 && tau_t < 1.0))
        throw ValidationError("confidence_ratio: tau_t must be in (0,1)");

    const int k = teacher_probs.num_classes;
    const std::size_t n = teacher_probs.data.size() / k;
    std::size_t confident = 0;
    for (std::size_t p = 0; p < n; ++p) {
        const std::size_t base = p * k;
        double m = teacher_probs.data[base];
        for (int c = 1; c < k; ++c) m = std::max(m, teacher_probs.data[base + c]);
        if (m >= tau_t) ++confident;
    }
    return static_cast<double>(confident) / static_cast<double>(n);
}

BinaryMask private_mask(const LabelMap& labels, const ClassSpace& cs) {
    BinaryMask mask = BinaryMask::zeros(labels.height, labels.width);
    for (std::size_t p = 0; p < labels.data.size(); ++p) {
        if (labels.data[p] == cs.ignore_id)
            throw ValidationError("private_mask: labels must not contain ignore pixels");
        mask.data[p] = labels.data[p] == cs.unknown_id ? 1 : 0;
    }
    return mask;
}

ParamVector ema_update(const ParamVector& teacher, const ParamVector& student, double alpha) {
    if (teacher.size() != student.size())
        throw ValidationError("ema_update: parameter length mismatch");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ValidationError("ema_update: alpha must be in [0,1]");

    ParamVector out(teacher.size());
    for (std::size_t i = 0; i < teacher.size(); ++i)
        out[i] = alpha * teacher[i] + (1.0 - alpha) * student[i];
    return out;
}

}  // namespace bus
