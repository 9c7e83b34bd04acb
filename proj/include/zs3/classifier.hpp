#pragma once

#include "zs3/embeddings.hpp"
#include "zs3/gmmn.hpp"
#include "zs3/matrix.hpp"
#include "zs3/nn.hpp"
#include "zs3/scene_data.hpp"

#include <string>
#include <vector>

namespace zs3 {

class RngStream;

enum class PredictMode { generalized, vanilla };

/// Per-pixel linear classifier over d_x features, one row per catalog class.
class LinearPixelClassifier {
public:
    LinearPixelClassifier() = default;
    /// Rows initialized N(0, 1/d_x), bias zero.
    LinearPixelClassifier(std::size_t n_classes, std::size_t d_x, RngStream& init_rng);

    /// scores = features * weight^T + bias.
    Matrix logits(const Matrix& features) const;

    /// Generalized: argmax over all classes. Vanilla: argmax restricted to the
    /// unseen set. Ties break toward the smallest class id.
    std::vector<std::size_t> predict(const Matrix& features, PredictMode mode,
                                     const std::vector<std::size_t>& unseen_ids) const;

    LabelMap predict_map(const FeatureMap& features, PredictMode mode,
                         const std::vector<std::size_t>& unseen_ids) const;

    std::size_t n_classes() const { return weight.value.rows; }
    std::size_t d_x() const { return weight.value.cols; }

    Parameter weight; // |C| x d_x
    Parameter bias;   // 1 x |C|
};

struct ClassifierTrainConfig {
    double base_lr = 7e-3;
    double weight_decay = 5e-4;
    double momentum = 0.9;
    double poly_power = 0.9;
    std::size_t iterations = 3000;
    std::size_t batch_size = 128;
    std::size_t per_class_cap = 500;
};

/// Fine-tunes on the class-balanced union of real seen pools and synthetic
/// unseen pools (SGD + momentum, poly LR decay, softmax cross-entropy).
/// Synthetic pools may be empty only in the seen-only ablation mode.
TrainTrace finetune_classifier(LinearPixelClassifier& clf, const ClassFeaturePools& real_seen,
                               const ClassFeaturePools& synthetic_unseen, const ClassCatalog& catalog,
                               const ClassifierTrainConfig& config, RngStream& rng);

void save_classifier(const LinearPixelClassifier& clf, const std::string& path);
LinearPixelClassifier load_classifier(const std::string& path);

} // namespace zs3
