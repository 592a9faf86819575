#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bus/core.hpp"

namespace bus {

/// Pooled intersection/union pixel counts per class (index unknown_id is the
/// private class), plus the derived scores. IoU of a class absent from both
/// prediction and ground truth is undefined and excluded from means.
struct MetricsReport {
    std::vector<std::int64_t> intersection;  // size num_known + 1
    std::vector<std::int64_t> union_;        // size num_known + 1
    std::vector<double> iou;                 // -1 marks undefined
    double common_miou = 0.0;
    double private_iou = 0.0;
    double h_score = 0.0;

    std::string to_json() const;
    static MetricsReport from_json(const std::string& text);
    std::string csv_header() const;
    std::string csv_row() const;
};

struct ClassCounts {
    std::vector<std::int64_t> intersection;
    std::vector<std::int64_t> union_;
};

/// Per-class intersection/union over non-ignored pixels for classes
/// [0, num_known] (known classes plus unknown).
ClassCounts per_class_counts(const LabelMap& pred, const LabelMap& gt, const ClassSpace& cs);

/// Per-class IoU from a single prediction.
std::vector<double> per_class_iou(const LabelMap& pred, const LabelMap& gt, const ClassSpace& cs);

/// Harmonic mean, zero when both inputs are zero.
double h_score(double common_miou, double private_iou);

/// Reduce pooled counts into the final report.
MetricsReport report_from_counts(const ClassCounts& counts, const ClassSpace& cs);

/// Fixed palette prediction rendering: unknown is white, ignore black.
ImageTensor render_prediction(const LabelMap& labels, const ClassSpace& cs);

}  // namespace bus
