#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bus/error.hpp"

namespace bus {

constexpr int kIgnoreId = 255;

/// Class index layout: known classes occupy [0, num_known), the unknown class
/// sits at slot num_known (one extra classifier head), and ignore is a
/// sentinel outside the class range.
struct ClassSpace {
    int num_known = 1;
    int unknown_id = 1;
    int ignore_id = kIgnoreId;

    ClassSpace() = default;
    explicit ClassSpace(int known) : num_known(known), unknown_id(known) {
        if (known < 1) throw ValidationError("ClassSpace: num_known must be >= 1");
        if (ignore_id >= 0 && ignore_id <= num_known)
            throw ValidationError("ClassSpace: ignore_id inside class range");
    }

    /// Number of classifier heads in the expanded model (known + unknown).
    int num_heads() const { return num_known + 1; }
};

/// H x W x 3 image, row-major, values in [0,1].
struct ImageTensor {
    int height = 0, width = 0;
    std::vector<double> data;  // size H*W*3

    static ImageTensor zeros(int h, int w) {
        ImageTensor t;
        t.height = h;
        t.width = w;
        t.data.assign(static_cast<std::size_t>(h) * w * 3, 0.0);
        return t;
    }
    double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    double at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    int pixels() const { return height * width; }
};

/// H x W map of class indices; entries are known classes, unknown_id, or ignore_id.
struct LabelMap {
    int height = 0, width = 0;
    std::vector<int> data;  // size H*W

    static LabelMap filled(int h, int w, int value) {
        LabelMap m;
        m.height = h;
        m.width = w;
        m.data.assign(static_cast<std::size_t>(h) * w, value);
        return m;
    }
    int& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    int at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    int pixels() const { return height * width; }
};

/// H x W mask with entries in {0,1}.
struct BinaryMask {
    int height = 0, width = 0;
    std::vector<std::uint8_t> data;  // size H*W

    static BinaryMask zeros(int h, int w) {
        BinaryMask m;
        m.height = h;
        m.width = w;
        m.data.assign(static_cast<std::size_t>(h) * w, 0);
        return m;
    }
    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    int pixels() const { return height * width; }
    int count_ones() const {
        int n = 0;
        for (auto v : data) n += v;
        return n;
    }
};

/// H x W x K raw per-pixel class scores, class index fastest.
struct LogitMap {
    int height = 0, width = 0, num_classes = 0;
    std::vector<double> data;  // size H*W*K

    static LogitMap zeros(int h, int w, int k) {
        LogitMap m;
        m.height = h;
        m.width = w;
        m.num_classes = k;
        m.data.assign(static_cast<std::size_t>(h) * w * k, 0.0);
        return m;
    }
    double& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * num_classes + c];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * num_classes + c];
    }
    std::span<double> pixel(int y, int x) {
        return {data.data() + (static_cast<std::size_t>(y) * width + x) * num_classes,
                static_cast<std::size_t>(num_classes)};
    }
    std::span<const double> pixel(int y, int x) const {
        return {data.data() + (static_cast<std::size_t>(y) * width + x) * num_classes,
                static_cast<std::size_t>(num_classes)};
    }
    int pixels() const { return height * width; }
};

/// H x W x K per-pixel probabilities; each pixel's row is nonnegative and sums to 1.
struct ProbMap {
    int height = 0, width = 0, num_classes = 0;
    std::vector<double> data;

    static ProbMap zeros(int h, int w, int k) {
        ProbMap m;
        m.height = h;
        m.width = w;
        m.num_classes = k;
        m.data.assign(static_cast<std::size_t>(h) * w * k, 0.0);
        return m;
    }
    double& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * num_classes + c];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * num_classes + c];
    }
    std::span<const double> pixel(int y, int x) const {
        return {data.data() + (static_cast<std::size_t>(y) * width + x) * num_classes,
                static_cast<std::size_t>(num_classes)};
    }
    int pixels() const { return height * width; }
};

/// H x W x F dense feature map (penultimate-layer activations).
struct FeatureMap {
    int height = 0, width = 0, channels = 0;
    std::vector<double> data;

    static FeatureMap zeros(int h, int w, int f) {
        FeatureMap m;
        m.height = h;
        m.width = w;
        m.channels = f;
        m.data.assign(static_cast<std::size_t>(h) * w * f, 0.0);
        return m;
    }
    double& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::span<double> pixel(int y, int x) {
        return {data.data() + (static_cast<std::size_t>(y) * width + x) * channels,
                static_cast<std::size_t>(channels)};
    }
    std::span<const double> pixel(int y, int x) const {
        return {data.data() + (static_cast<std::size_t>(y) * width + x) * channels,
                static_cast<std::size_t>(channels)};
    }
    int pixels() const { return height * width; }
};

/// Flat model parameters; layout is owned by the network that produced them.
using ParamVector = std::vector<double>;

/// Per-pixel softmax with max subtraction. Throws on non-finite input.
ProbMap softmax(const LogitMap& logits);

/// Per-pixel argmax and max value. Ties break toward the lowest class index.
std::pair<LabelMap, std::vector<double>> argmax_with_prob(const ProbMap& probs);

}  // namespace bus
