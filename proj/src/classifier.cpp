#include "zs3/classifier.hpp"

#include "zs3/errors.hpp"
#include "zs3/optim.hpp"
#include "zs3/rng.hpp"
#include "zs3/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace zs3 {

LinearPixelClassifier::LinearPixelClassifier(std::size_t n_classes, std::size_t d_x, RngStream& init_rng)
    : weight(Matrix::randn(n_classes, d_x, init_rng, 1.0 / std::sqrt(static_cast<double>(d_x))),
             "classifier.weight"),
      bias(Matrix::zeros(1, n_classes), "classifier.bias") {}

Matrix LinearPixelClassifier::logits(const Matrix& features) const {
    if (features.cols != d_x())
        throw DimensionError("classifier logits: feature dim " + std::to_string(features.cols) +
                             " != " + std::to_string(d_x()));
    Matrix scores = matmul_nt(features, weight.value);
    for (std::size_t i = 0; i < scores.rows; ++i) {
        double* row = scores.row_ptr(i);
        const double* b = bias.value.row_ptr(0);
        for (std::size_t j = 0; j < scores.cols; ++j) row[j] += b[j];
    }
    return scores;
}

namespace {

std::size_t argmax_restricted(const double* row, const std::vector<std::size_t>& ids) {
    std::size_t best = ids.front();
    double best_v = row[best];
    for (std::size_t id : ids) {
        if (row[id] > best_v) {
            best_v = row[id];
            best = id;
        }
    }
    return best;
}

} // namespace

std::vector<std::size_t> LinearPixelClassifier::predict(const Matrix& features, PredictMode mode,
                                                        const std::vector<std::size_t>& unseen_ids) const {
    std::vector<std::size_t> restrict_ids;
    if (mode == PredictMode::vanilla) {
        if (unseen_ids.empty()) throw ConfigError("vanilla prediction requires a nonempty unseen set");
        restrict_ids = unseen_ids;
        std::sort(restrict_ids.begin(), restrict_ids.end());
    } else {
        restrict_ids.resize(n_classes());
        for (std::size_t i = 0; i < n_classes(); ++i) restrict_ids[i] = i;
    }
    const Matrix scores = logits(features);
    std::vector<std::size_t> out(scores.rows);
    for (std::size_t i = 0; i < scores.rows; ++i)
        out[i] = argmax_restricted(scores.row_ptr(i), restrict_ids);
    return out;
}

LabelMap LinearPixelClassifier::predict_map(const FeatureMap& features, PredictMode mode,
                                            const std::vector<std::size_t>& unseen_ids) const {
    Matrix rows(features.pixels(), features.depth);
    for (std::size_t p = 0; p < features.pixels(); ++p) {
        const float* src = features.values.data() + p * features.depth;
        double* dst = rows.row_ptr(p);
        for (std::size_t j = 0; j < features.depth; ++j) dst[j] = static_cast<double>(src[j]);
    }
    const std::vector<std::size_t> preds = predict(rows, mode, unseen_ids);
    LabelMap map(features.height, features.width);
    for (std::size_t p = 0; p < preds.size(); ++p) map.labels[p] = static_cast<std::uint16_t>(preds[p]);
    return map;
}

TrainTrace finetune_classifier(LinearPixelClassifier& clf, const ClassFeaturePools& real_seen,
                               const ClassFeaturePools& synthetic_unseen, const ClassCatalog& catalog,
                               const ClassifierTrainConfig& config, RngStream& rng) {
    const std::size_t n_classes = catalog.size();
    if (real_seen.size() != n_classes || synthetic_unseen.size() != n_classes)
        throw ConfigError("finetune: pools must be indexed by catalog class id");
    if (clf.n_classes() != n_classes) throw DimensionError("finetune: classifier class count mismatch");

    // Verify the pools respect the split before any training.
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (!catalog.seen[c] && real_seen[c].rows > 0)
            throw DataError("finetune: real pool holds unseen class '" + catalog.names[c] + "'");
        if (catalog.seen[c] && synthetic_unseen[c].rows > 0)
            throw DataError("finetune: synthetic pool holds seen class '" + catalog.names[c] + "'");
    }

    // Class-balanced sampling pools, capped per class.
    std::vector<Matrix> pools(n_classes);
    std::vector<std::size_t> classes_present;
    for (std::size_t c = 0; c < n_classes; ++c) {
        const Matrix& src = catalog.seen[c] ? real_seen[c] : synthetic_unseen[c];
        if (src.rows == 0) continue;
        const std::size_t take = std::min(src.rows, config.per_class_cap);
        Matrix pool(take, src.cols);
        if (take == src.rows) {
            pool = src;
        } else {
            for (std::size_t i = 0; i < take; ++i) {
                const std::size_t idx = rng.uniform_int(src.rows);
                std::memcpy(pool.row_ptr(i), src.row_ptr(idx), src.cols * sizeof(double));
            }
        }
        pools[c] = std::move(pool);
        classes_present.push_back(c);
    }
    if (classes_present.empty()) throw ConfigError("finetune: no training data");

    PolyLrSchedule schedule{config.base_lr, config.iterations, config.poly_power};
    OptimizerState opt = OptimizerState::sgd(config.momentum, config.weight_decay);
    std::vector<Parameter*> params = {&clf.weight, &clf.bias};

    TrainTrace trace;
    trace.losses.reserve(config.iterations);
    Matrix batch(config.batch_size, clf.d_x());
    std::vector<std::size_t> targets(config.batch_size);
    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        for (std::size_t i = 0; i < config.batch_size; ++i) {
            const std::size_t cls = classes_present[rng.uniform_int(classes_present.size())];
            const Matrix& pool = pools[cls];
            const std::size_t idx = rng.uniform_int(pool.rows);
            std::memcpy(batch.row_ptr(i), pool.row_ptr(idx), pool.cols * sizeof(double));
            targets[i] = cls;
        }
        const Matrix scores = clf.logits(batch);
        SoftmaxCrossEntropy ce = softmax_cross_entropy(scores, targets);
        clf.weight.zero_grad();
        clf.bias.zero_grad();
        // logits = features * W^T + b: dW = dscores^T * features, db = column sums
        add_inplace(clf.weight.grad, matmul_tn(ce.grad_logits, batch));
        for (std::size_t i = 0; i < ce.grad_logits.rows; ++i) {
            const double* row = ce.grad_logits.row_ptr(i);
            double* b = clf.bias.grad.row_ptr(0);
            for (std::size_t j = 0; j < ce.grad_logits.cols; ++j) b[j] += row[j];
        }
        const double lr = poly_lr(schedule, iter);
        if (lr > 0.0) optimizer_step(params, opt, lr);
        trace.losses.push_back(ce.loss);
    }
    return trace;
}

void save_classifier(const LinearPixelClassifier& clf, const std::string& path) {
    ByteWriter w;
    w.magic("ZS3C");
    w.u16(1); // version
    w.u16(static_cast<std::uint16_t>(clf.n_classes()));
    w.u16(static_cast<std::uint16_t>(clf.d_x()));
    w.matrix(clf.weight.value);
    w.matrix(clf.bias.value);
    w.to_file(path);
}

LinearPixelClassifier load_classifier(const std::string& path) {
    ByteReader r(path);
    r.expect_magic("ZS3C");
    const std::uint16_t version = r.u16();
    if (version != 1) throw FormatError("unsupported classifier checkpoint version");
    const std::size_t n_classes = r.u16();
    const std::size_t d_x = r.u16();
    RngStream dummy(0);
    LinearPixelClassifier clf(n_classes, d_x, dummy);
    r.matrix_into(clf.weight.value);
    r.matrix_into(clf.bias.value);
    r.expect_end();
    return clf;
}

} // namespace zs3
