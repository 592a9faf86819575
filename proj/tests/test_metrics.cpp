#include <doctest.h>

#include <cmath>

#include "bus/metrics.hpp"
#include "bus/rng.hpp"

using namespace bus;

namespace {

LabelMap random_labels(int h, int w, int max_class, Rng& rng) {
    LabelMap m = LabelMap::filled(h, w, 0);
    for (int& v : m.data) v = static_cast<int>(rng.uniform_int(0, max_class));
    return m;
}

}  // namespace

TEST_CASE("identical prediction scores IoU 1 for every present class") {
    const ClassSpace cs(3);
    Rng rng(2);
    const LabelMap gt = random_labels(8, 8, cs.unknown_id, rng);
    const auto iou = per_class_iou(gt, gt, cs);
    for (std::size_t c = 0; c < iou.size(); ++c) {
        bool present = false;
        for (int v : gt.data) present = present || v == static_cast<int>(c);
        if (present) CHECK(iou[c] == doctest::Approx(1.0));
        else CHECK(iou[c] == -1.0);
    }
}

TEST_CASE("disjoint supports score IoU 0") {
    const ClassSpace cs(2);
    const LabelMap pred = LabelMap::filled(4, 4, 0);
    const LabelMap gt = LabelMap::filled(4, 4, 1);
    const auto iou = per_class_iou(pred, gt, cs);
    CHECK(iou[0] == doctest::Approx(0.0));
    CHECK(iou[1] == doctest::Approx(0.0));
}

TEST_CASE("hand-counted 2x2 example") {
    const ClassSpace cs(2);
    LabelMap pred = LabelMap::filled(2, 2, 0);
    pred.at(1, 0) = 1;
    pred.at(1, 1) = 1;
    LabelMap gt = LabelMap::filled(2, 2, 0);
    gt.at(0, 1) = 1;
    gt.at(1, 0) = 1;
    gt.at(1, 1) = 1;
    const auto iou = per_class_iou(pred, gt, cs);
    CHECK(iou[0] == doctest::Approx(0.5));
    CHECK(iou[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("ignore pixels are excluded entirely") {
    const ClassSpace cs(2);
    LabelMap pred = LabelMap::filled(1, 4, 0);
    LabelMap gt = LabelMap::filled(1, 4, 0);
    gt.at(0, 2) = cs.ignore_id;
    pred.at(0, 2) = 1;  // would pollute union_1 if counted
    const auto counts = per_class_counts(pred, gt, cs);
    CHECK(counts.union_[1] == 0);
    CHECK(counts.intersection[0] == 3);
    CHECK(counts.union_[0] == 3);
}

TEST_CASE("h_score reproduces the published operating points") {
    CHECK(h_score(72.47, 55.42) == doctest::Approx(62.81).epsilon(0.0002));
    CHECK(h_score(64.62, 33.37) == doctest::Approx(44.01).epsilon(0.0002));
    CHECK(h_score(0.7, 0.7) == doctest::Approx(0.7));
    CHECK(h_score(0.9, 0.0) == 0.0);
    CHECK(h_score(0.0, 0.0) == 0.0);
}

TEST_CASE("h_score sits between min and arithmetic mean") {
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
        const double a = rng.uniform() * 0.99 + 0.005;
        const double b = rng.uniform() * 0.99 + 0.005;
        const double h = h_score(a, b);
        CHECK(h >= std::min(a, b) - 1e-12);
        CHECK(h <= (a + b) / 2.0 + 1e-12);
    }
}

TEST_CASE("pooled counts differ from per-image averaging and match a single pass") {
    const ClassSpace cs(2);
    Rng rng(11);
    std::vector<LabelMap> preds, gts;
    for (int i = 0; i < 5; ++i) {
        preds.push_back(random_labels(6, 6, cs.unknown_id, rng));
        gts.push_back(random_labels(6, 6, cs.unknown_id, rng));
    }

    ClassCounts pooled;
    pooled.intersection.assign(cs.num_known + 1, 0);
    pooled.union_.assign(cs.num_known + 1, 0);
    for (int i = 0; i < 5; ++i) {
        const ClassCounts counts = per_class_counts(preds[i], gts[i], cs);
        for (std::size_t c = 0; c < pooled.union_.size(); ++c) {
            pooled.intersection[c] += counts.intersection[c];
            pooled.union_[c] += counts.union_[c];
        }
    }

    // Oracle: concatenate all images into one map and count once.
    LabelMap big_pred = LabelMap::filled(6, 30, 0), big_gt = LabelMap::filled(6, 30, 0);
    for (int i = 0; i < 5; ++i)
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) {
                big_pred.at(y, i * 6 + x) = preds[i].at(y, x);
                big_gt.at(y, i * 6 + x) = gts[i].at(y, x);
            }
    const ClassCounts oracle = per_class_counts(big_pred, big_gt, cs);
    CHECK(pooled.intersection == oracle.intersection);
    CHECK(pooled.union_ == oracle.union_);
}

TEST_CASE("report derives scores and serializes losslessly") {
    const ClassSpace cs(2);
    ClassCounts counts;
    counts.intersection = {7, 3, 2};
    counts.union_ = {10, 9, 6};
    const MetricsReport report = report_from_counts(counts, cs);
    CHECK(report.common_miou == doctest::Approx((0.7 + 1.0 / 3.0) / 2.0));
    CHECK(report.private_iou == doctest::Approx(1.0 / 3.0));
    CHECK(report.h_score ==
          doctest::Approx(h_score(report.common_miou, report.private_iou)));

    const MetricsReport back = MetricsReport::from_json(report.to_json());
    CHECK(back.intersection == report.intersection);
    CHECK(back.union_ == report.union_);
    CHECK(back.iou == report.iou);
    CHECK(back.common_miou == report.common_miou);
    CHECK(back.private_iou == report.private_iou);
    CHECK(back.h_score == report.h_score);
    CHECK(back.to_json() == report.to_json());

    CHECK(report.csv_row().find(',') != std::string::npos);
}

TEST_CASE("absent classes are excluded from the mean, not scored 1") {
    const ClassSpace cs(3);  // class 2 never appears
    ClassCounts counts;
    counts.intersection = {5, 5, 0, 1};
    counts.union_ = {5, 10, 0, 2};
    const MetricsReport report = report_from_counts(counts, cs);
    CHECK(report.iou[2] == -1.0);
    CHECK(report.common_miou == doctest::Approx((1.0 + 0.5) / 2.0));
}

TEST_CASE("prediction rendering uses the fixed palette rules") {
    const ClassSpace cs(2);
    LabelMap labels = LabelMap::filled(1, 3, 0);
    labels.at(0, 1) = cs.unknown_id;
    labels.at(0, 2) = cs.ignore_id;
    const ImageTensor img = render_prediction(labels, cs);
    CHECK(img.at(0, 1, 0) == 1.0);  // unknown is white
    CHECK(img.at(0, 1, 1) == 1.0);
    CHECK(img.at(0, 1, 2) == 1.0);
    CHECK(img.at(0, 2, 0) == 0.0);  // ignore is black
    CHECK(img.at(0, 2, 1) == 0.0);
}
