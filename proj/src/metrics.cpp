#include "zs3/metrics.hpp"

#include "zs3/errors.hpp"

#include <cmath>

namespace zs3 {

std::size_t EvalReport::total_pixels() const {
    std::size_t total = 0;
    for (std::size_t v : confusion) total += v;
    return total;
}

double harmonic_iou(double seen_miou, double unseen_miou) {
    if (seen_miou < 0.0 || unseen_miou < 0.0 || seen_miou > 100.0 || unseen_miou > 100.0)
        throw ValueError("harmonic_iou: arguments must be within [0, 100]");
    const double sum = seen_miou + unseen_miou;
    if (sum == 0.0) return 0.0;
    return 2.0 * seen_miou * unseen_miou / sum;
}

namespace {

GroupMetrics group_metrics(const EvalReport& report, const std::vector<std::size_t>& group_ids,
                           const std::vector<std::size_t>& gt_count, const std::vector<std::size_t>& pred_count) {
    GroupMetrics g;
    std::size_t diag = 0;
    std::size_t gt_pixels = 0;
    double acc_sum = 0.0;
    std::size_t acc_n = 0;
    double iou_sum = 0.0;
    std::size_t iou_n = 0;
    for (std::size_t c : group_ids) {
        gt_pixels += gt_count[c];
        diag += report.count(c, c);
        if (gt_count[c] > 0) {
            acc_sum += static_cast<double>(report.count(c, c)) / static_cast<double>(gt_count[c]);
            acc_n += 1;
        }
        if (gt_count[c] > 0 || pred_count[c] > 0) {
            const std::size_t inter = report.count(c, c);
            const std::size_t uni = gt_count[c] + pred_count[c] - inter;
            iou_sum += static_cast<double>(inter) / static_cast<double>(uni);
            iou_n += 1;
        }
    }
    g.gt_pixels = gt_pixels;
    g.empty = iou_n == 0;
    g.pixel_accuracy = gt_pixels > 0 ? static_cast<double>(diag) / static_cast<double>(gt_pixels) : 0.0;
    g.mean_accuracy = acc_n > 0 ? acc_sum / static_cast<double>(acc_n) : 0.0;
    g.mean_iou = iou_n > 0 ? iou_sum / static_cast<double>(iou_n) : 0.0;
    return g;
}

} // namespace

EvalReport report_from_confusion(std::vector<std::size_t> confusion, const ClassCatalog& catalog) {
    EvalReport report;
    report.n_classes = catalog.size();
    if (confusion.size() != report.n_classes * report.n_classes)
        throw DimensionError("report_from_confusion: matrix size mismatch");
    report.confusion = std::move(confusion);
    if (report.total_pixels() == 0) throw ValueError("evaluate: empty evaluation set");

    std::vector<std::size_t> gt_count(report.n_classes, 0);
    std::vector<std::size_t> pred_count(report.n_classes, 0);
    for (std::size_t i = 0; i < report.n_classes; ++i)
        for (std::size_t j = 0; j < report.n_classes; ++j) {
            gt_count[i] += report.count(i, j);
            pred_count[j] += report.count(i, j);
        }

    report.class_iou.assign(report.n_classes, -1.0);
    report.class_accuracy.assign(report.n_classes, -1.0);
    for (std::size_t c = 0; c < report.n_classes; ++c) {
        if (gt_count[c] > 0)
            report.class_accuracy[c] =
                static_cast<double>(report.count(c, c)) / static_cast<double>(gt_count[c]);
        if (gt_count[c] > 0 || pred_count[c] > 0) {
            const std::size_t inter = report.count(c, c);
            const std::size_t uni = gt_count[c] + pred_count[c] - inter;
            report.class_iou[c] = static_cast<double>(inter) / static_cast<double>(uni);
        }
    }

    std::vector<std::size_t> seen_ids = catalog.seen_ids();
    std::vector<std::size_t> unseen_ids = catalog.unseen_ids();
    std::vector<std::size_t> all_ids(report.n_classes);
    for (std::size_t i = 0; i < report.n_classes; ++i) all_ids[i] = i;

    report.seen = group_metrics(report, seen_ids, gt_count, pred_count);
    report.unseen = group_metrics(report, unseen_ids, gt_count, pred_count);
    report.overall = group_metrics(report, all_ids, gt_count, pred_count);
    report.h_iou = report.unseen.empty ? 0.0 : harmonic_iou(report.seen.mean_iou, report.unseen.mean_iou);
    return report;
}

EvalReport evaluate(const std::vector<LabelMap>& predictions, const std::vector<LabelMap>& groundtruth,
                    const ClassCatalog& catalog) {
    if (predictions.size() != groundtruth.size())
        throw DimensionError("evaluate: prediction and GT scene counts differ");
    if (predictions.empty()) throw ValueError("evaluate: empty evaluation set");
    const std::size_t n = catalog.size();
    std::vector<std::size_t> confusion(n * n, 0);
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        const LabelMap& pred = predictions[s];
        const LabelMap& gt = groundtruth[s];
        if (pred.height != gt.height || pred.width != gt.width)
            throw DimensionError("evaluate: scene " + std::to_string(s) + " shape mismatch");
        for (std::size_t p = 0; p < gt.pixels(); ++p) {
            const std::uint16_t t = gt.labels[p];
            const std::uint16_t y = pred.labels[p];
            if (t >= n || y >= n)
                throw IndexError("evaluate: label outside catalog in scene " + std::to_string(s));
            confusion[t * n + y] += 1;
        }
    }
    return report_from_confusion(std::move(confusion), catalog);
}

} // namespace zs3
