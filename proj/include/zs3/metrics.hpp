#pragma once

#include "zs3/embeddings.hpp"
#include "zs3/scene_data.hpp"

#include <optional>
#include <vector>

namespace zs3 {

struct GroupMetrics {
    double pixel_accuracy = 0.0; // PA
    double mean_accuracy = 0.0;  // MA
    double mean_iou = 0.0;       // mIoU
    std::size_t gt_pixels = 0;
    bool empty = true; // no class of the group appears in GT or prediction
};

/// Confusion-matrix derived segmentation metrics. Rows of the confusion
/// matrix are ground truth, columns are predictions. Metrics are fractions
/// in [0,1]; classes absent from both GT and prediction are excluded from
/// group means.
struct EvalReport {
    std::size_t n_classes = 0;
    std::vector<std::size_t> confusion; // n_classes x n_classes, row-major
    std::vector<double> class_iou;      // -1 marks an excluded class
    std::vector<double> class_accuracy; // -1 marks a class with no GT pixels
    GroupMetrics seen;
    GroupMetrics unseen;
    GroupMetrics overall;
    double h_iou = 0.0; // harmonic mean of seen and unseen mIoU

    std::size_t& count(std::size_t gt, std::size_t pred) { return confusion[gt * n_classes + pred]; }
    std::size_t count(std::size_t gt, std::size_t pred) const { return confusion[gt * n_classes + pred]; }
    std::size_t total_pixels() const;
};

/// Harmonic mean 2ab/(a+b), 0 when a+b = 0. Accepts fractions or percents
/// (both arguments must use the same scale, each within [0, 100]).
double harmonic_iou(double seen_miou, double unseen_miou);

EvalReport evaluate(const std::vector<LabelMap>& predictions, const std::vector<LabelMap>& groundtruth,
                    const ClassCatalog& catalog_with_split);

/// Builds a report from an already-filled confusion matrix.
EvalReport report_from_confusion(std::vector<std::size_t> confusion, const ClassCatalog& catalog_with_split);

} // namespace zs3
