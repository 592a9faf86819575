#include "bus/core.hpp"

#include <cmath>

namespace bus {

ProbMap softmax(const LogitMap& logits) {
    ProbMap out;
    out.height = logits.height;
    out.width = logits.width;
    out.num_classes = logits.num_classes;
    out.data.resize(logits.data.size());

    const int k = logits.num_classes;
    const std::size_t n = logits.data.size();
    for (std::size_t base = 0; base < n; base += k) {
        double m = logits.data[base];
        for (int c = 1; c < k; ++c) m = std::max(m, logits.data[base + c]);
        if (!std::isfinite(m)) throw ValidationError("softmax: non-finite logit");
        double sum = 0.0;
        for (int c = 0; c < k; ++c) {
            const double v = logits.data[base + c];
            if (!std::isfinite(v)) throw ValidationError("softmax: non-finite logit");
            const double e = std::exp(v - m);
            out.data[base + c] = e;
            sum += e;
        }
        for (int c = 0; c < k; ++c) out.data[base + c] /= sum;
    }
    return out;
}

std::pair<LabelMap, std::vector<double>> argmax_with_prob(const ProbMap& probs) {
    LabelMap labels;
    labels.height = probs.height;
    labels.width = probs.width;
    labels.data.resize(static_cast<std::size_t>(probs.height) * probs.width);
    std::vector<double> maxvals(labels.data.size());

    const int k = probs.num_classes;
    for (std::size_t p = 0; p < labels.data.size(); ++p) {
        const std::size_t base = p * k;
        int best = 0;
        double bestv = probs.data[base];
        for (int c = 1; c < k; ++c) {
            if (probs.data[base + c] > bestv) {
                bestv = probs.data[base + c];
                best = c;
            }
        }
        labels.data[p] = best;
        maxvals[p] = bestv;
    }
    return {std::move(labels), std::move(maxvals)};
}

}  // namespace bus
