#include "bus/metrics.hpp"

#include <array>
#include <sstream>

#include <json.hpp>

namespace bus {

ClassCounts per_class_counts(const LabelMap& pred, const LabelMap& gt, const ClassSpace& cs) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw ValidationError("per_class_counts: dimension mismatch");
    const int k = cs.num_known + 1;
    ClassCounts counts;
    counts.intersection.assign(k, 0);
    counts.union_.assign(k, 0);
    for (std::size_t p = 0; p < gt.data.size(); ++p) {
        const int g = gt.data[p];
        if (g == cs.ignore_id) continue;
        const int q = pred.data[p];
        if (g < 0 || g >= k) throw ValidationError("per_class_counts: gt label out of range");
        if (q < 0 || q >= k) throw ValidationError("per_class_counts: pred label out of range");
        if (g == q) {
            ++counts.intersection[g];
            ++counts.union_[g];
        } else {
            ++counts.union_[g];
            ++counts.union_[q];
        }
    }
    return counts;
}

std::vector<double> per_class_iou(const LabelMap& pred, const LabelMap& gt,
                                  const ClassSpace& cs) {
    const ClassCounts counts = per_class_counts(pred, gt, cs);
    std::vector<double> iou(counts.union_.size());
    for (std::size_t c = 0; c < iou.size(); ++c)
        iou[c] = counts.union_[c] > 0
                     ? static_cast<double>(counts.intersection[c]) / counts.union_[c]
                     : -1.0;
    return iou;
}

double h_score(double common_miou, double private_iou) {
    const double sum = common_miou + private_iou;
    if (sum <= 0.0) return 0.0;
    return 2.0 * common_miou * private_iou / sum;
}

MetricsReport report_from_counts(const ClassCounts& counts, const ClassSpace& cs) {
    MetricsReport report;
    report.intersection = counts.intersection;
    report.union_ = counts.union_;
    report.iou.resize(counts.union_.size());
    double common_sum = 0.0;
    int common_defined = 0;
    for (std::size_t c = 0; c < report.iou.size(); ++c) {
        if (counts.union_[c] > 0) {
            report.iou[c] = static_cast<double>(counts.intersection[c]) / counts.union_[c];
            if (static_cast<int>(c) < cs.num_known) {
                common_sum += report.iou[c];
                ++common_defined;
            }
        } else {
            report.iou[c] = -1.0;
        }
    }
    report.common_miou = common_defined > 0 ? common_sum / common_defined : 0.0;
    report.private_iou = report.iou[cs.unknown_id] >= 0.0 ? report.iou[cs.unknown_id] : 0.0;
    report.h_score = h_score(report.common_miou, report.private_iou);
    return report;
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["intersection"] = intersection;
    j["union"] = union_;
    j["iou"] = iou;
    j["common_miou"] = common_miou;
    j["private_iou"] = private_iou;
    j["h_score"] = h_score;
    return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    MetricsReport report;
    report.intersection = j.at("intersection").get<std::vector<std::int64_t>>();
    report.union_ = j.at("union").get<std::vector<std::int64_t>>();
    report.iou = j.at("iou").get<std::vector<double>>();
    report.common_miou = j.at("common_miou").get<double>();
    report.private_iou = j.at("private_iou").get<double>();
    report.h_score = j.at("h_score").get<double>();
    return report;
}

std::string MetricsReport::csv_header() const {
    std::ostringstream out;
    out << "common_miou,private_iou,h_score";
    for (std::size_t c = 0; c < iou.size(); ++c) out << ",iou_" << c;
    return out.str();
}

std::string MetricsReport::csv_row() const {
    std::ostringstream out;
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    put(common_miou);
    out << ",";
    put(private_iou);
    out << ",";
    put(h_score);
    for (double v : iou) {
        out << ",";
        put(v);
    }
    return out.str();
}

ImageTensor render_prediction(const LabelMap& labels, const ClassSpace& cs) {
    static constexpr std::array<std::array<double, 3>, 10> kPalette = {{
        {0.50, 0.69, 0.96},  // class 0
        {0.37, 0.62, 0.21},  // class 1
        {0.86, 0.20, 0.18},  // class 2
        {0.95, 0.78, 0.16},  // class 3
        {0.58, 0.32, 0.72},  // class 4
        {0.15, 0.67, 0.69},  // class 5
        {0.90, 0.44, 0.13},  // class 6
        {0.55, 0.35, 0.17},  // class 7
        {0.80, 0.45, 0.66},  // class 8
        {0.45, 0.48, 0.55},  // class 9
    }};
    ImageTensor out = ImageTensor::zeros(labels.height, labels.width);
    for (int y = 0; y < labels.height; ++y)
        for (int x = 0; x < labels.width; ++x) {
            const int v = labels.at(y, x);
            double r, g, b;
            if (v == cs.ignore_id) {
                r = g = b = 0.0;  // ignore is black
            } else if (v == cs.unknown_id) {
                r = g = b = 1.0;  // unknown is white
            } else {
                const auto& c = kPalette[static_cast<std::size_t>(v) % kPalette.size()];
                r = c[0];
                g = c[1];
                b = c[2];
            }
            out.at(y, x, 0) = r;
            out.at(y, x, 1) = g;
            out.at(y, x, 2) = b;
        }
    return out;
}

}  // namespace bus
