#include "zs3/pipeline.hpp"

#include "zs3/errors.hpp"
#include "zs3/optim.hpp"
#include "zs3/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace zs3 {

namespace {

Matrix features_as_rows(const FeatureMap& fm) {
    Matrix rows(fm.pixels(), fm.depth);
    for (std::size_t p = 0; p < fm.pixels(); ++p) {
        const float* src = fm.values.data() + p * fm.depth;
        double* dst = rows.row_ptr(p);
        for (std::size_t j = 0; j < fm.depth; ++j) dst[j] = static_cast<double>(src[j]);
    }
    return rows;
}

std::vector<LabelMap> ground_truth_maps(const Dataset& ds) {
    std::vector<LabelMap> maps;
    maps.reserve(ds.scene_count());
    for (const Scene& s : ds.scenes) maps.push_back(s.labels);
    return maps;
}

/// Drops pool entries for classes flagged unseen; used by cross-validation
/// where pseudo-unseen pixels exist in the raw scenes but must not reach
/// supervision.
void drop_unseen_pools(ClassFeaturePools& pools, const ClassCatalog& catalog) {
    for (std::size_t c = 0; c < pools.size(); ++c)
        if (!catalog.seen[c]) pools[c] = Matrix();
}

struct CoreResult {
    Zs3Run run;
};

/// Shared ZS3 engine. `universe` lists the classes eligible at prediction
/// time (all classes for the real pipeline, the seen set for zero-shot
/// cross-validation). Supervision pools must already respect the catalog's
/// seen flags; `train_scenes` is only consulted by the graph-context path.
Zs3Run run_zs3_core(const PipelineConfig& cfg, const ClassCatalog& catalog,
                    const ClassEmbeddingTable& embeddings, const ClassFeaturePools& supervision,
                    const std::vector<Scene>* train_scenes, const Dataset& eval_set,
                    const std::vector<std::size_t>& universe, const SyntheticWorld& world) {
    Zs3Run out;
    out.used_graph_context = cfg.graph_context;
    const std::size_t n_classes = catalog.size();
    const KernelBank bank = cfg.kernel_bank();

    std::vector<std::size_t> targets;
    for (std::size_t c : universe)
        if (!catalog.seen[c]) targets.push_back(c);

    RngStream init_rng = RngStream::named(cfg.seed, "generator-init");
    RngStream train_rng = RngStream::named(cfg.seed, "generator");
    RngStream synth_rng = RngStream::named(cfg.seed, "synthesis");

    out.synthetic_unseen.assign(n_classes, Matrix());
    if (!targets.empty()) {
        if (!cfg.graph_context) {
            out.generator = GmmnMlp(embeddings.dimension, cfg.generator.hidden, world.d_x(),
                                    cfg.generator.leaky_slope, cfg.generator.dropout_rate, init_rng);
            out.generator_trace =
                train_generator(out.generator, supervision, catalog, embeddings, bank, cfg.generator, train_rng);
            for (std::size_t c : targets)
                out.synthetic_unseen[c] =
                    sample_synthetic(out.generator, c, cfg.synthetic_per_class, embeddings, synth_rng);
        } else {
            if (train_scenes == nullptr)
                throw ConfigError("graph-context training requires scene access");
            std::vector<SceneGraph> graphs;
            for (const Scene& s : *train_scenes) {
                bool all_seen = true;
                for (std::uint16_t l : s.labels.labels)
                    if (!catalog.seen[l]) { all_seen = false; break; }
                if (all_seen) graphs.push_back(build_scene_graph(s, embeddings, cfg.graph_connectivity));
            }
            if (graphs.empty()) throw ConfigError("graph-context training has no all-seen scenes");

            out.graph_generator = GraphGenerator(embeddings.dimension, cfg.generator.hidden, world.d_x(),
                                                 cfg.generator.leaky_slope, cfg.generator.dropout_rate,
                                                 init_rng);
            out.generator_trace =
                train_graph_generator(out.graph_generator, graphs, catalog, bank, cfg.generator, train_rng);

            // Structure-only masks drawn from the world geometry provide the
            // graphs that carry unseen nodes at synthesis time.
            std::vector<SceneGraph> structures;
            for (std::size_t i = 0; i < cfg.n_structure_masks; ++i) {
                LabelMap mask = render_scene(world, catalog, universe, cfg.scene_height, cfg.scene_width,
                                             kStructureSeedBase + i);
                SceneGraph sg;
                sg.graph = extract_component_graph(mask, embeddings, cfg.graph_connectivity);
                sg.norm_adjacency = normalize_adjacency(sg.graph);
                structures.push_back(std::move(sg));
            }
            ClassFeaturePools sampled = sample_synthetic_graph(out.graph_generator, structures, n_classes,
                                                               cfg.synthetic_per_class, synth_rng);
            for (std::size_t c : targets) {
                if (sampled[c].rows == 0)
                    throw ConfigError("class '" + catalog.names[c] +
                                      "' absent from structure masks; raise n_structure_masks");
                out.synthetic_unseen[c] = std::move(sampled[c]);
            }
        }
    }

    RngStream clf_init = RngStream::named(cfg.seed, "classifier-init");
    RngStream clf_rng = RngStream::named(cfg.seed, "classifier");
    out.classifier = LinearPixelClassifier(n_classes, world.d_x(), clf_init);
    out.classifier_trace = finetune_classifier(out.classifier, supervision, out.synthetic_unseen, catalog,
                                               cfg.classifier, clf_rng);

    const bool full_universe = universe.size() == n_classes;
    std::vector<LabelMap> predictions;
    predictions.reserve(eval_set.scene_count());
    for (const Scene& s : eval_set.scenes) {
        if (full_universe)
            predictions.push_back(out.classifier.predict_map(s.features, PredictMode::generalized, {}));
        else
            predictions.push_back(out.classifier.predict_map(s.features, PredictMode::vanilla, universe));
    }
    out.report = evaluate(predictions, ground_truth_maps(eval_set), catalog);
    return out;
}

} // namespace

Zs3Run run_zs3(const PipelineConfig& cfg, const ClassCatalog& catalog,
               const ClassEmbeddingTable& embeddings, const Dataset& train, const Dataset& test,
               const SyntheticWorld& world) {
    ClassFeaturePools pools = collect_class_features(train, catalog.size());
    for (std::size_t c = 0; c < catalog.size(); ++c)
        if (!catalog.seen[c] && pools[c].rows > 0)
            throw DataError("run_zs3: train scenes contain unseen class '" + catalog.names[c] + "'");

    std::vector<std::size_t> universe(catalog.size());
    for (std::size_t c = 0; c < catalog.size(); ++c) universe[c] = c;
    return run_zs3_core(cfg, catalog, embeddings, pools, &train.scenes, test, universe, world);
}

std::vector<std::vector<PseudoLabel>> select_pseudo_labels(const LinearPixelClassifier& clf,
                                                           const Dataset& unlabeled,
                                                           const std::vector<std::size_t>& unseen_ids,
                                                           double p) {
    if (p < 0.0 || p > 1.0) throw ConfigError("select_pseudo_labels: p must be in [0,1]");
    std::vector<bool> is_unseen(clf.n_classes(), false);
    for (std::size_t c : unseen_ids) is_unseen[c] = true;

    std::vector<std::vector<PseudoLabel>> result;
    result.reserve(unlabeled.scene_count());
    for (const Scene& scene : unlabeled.scenes) {
        std::vector<PseudoLabel> candidates;
        if (p > 0.0 && !unseen_ids.empty()) {
            const Matrix rows = features_as_rows(scene.features);
            const Matrix scores = clf.logits(rows);
            for (std::size_t i = 0; i < scores.rows; ++i) {
                const double* row = scores.row_ptr(i);
                std::size_t best = 0;
                for (std::size_t j = 1; j < scores.cols; ++j)
                    if (row[j] > row[best]) best = j;
                if (!is_unseen[best]) continue;
                double mx = row[best];
                double denom = 0.0;
                for (std::size_t j = 0; j < scores.cols; ++j) denom += std::exp(row[j] - mx);
                candidates.push_back(PseudoLabel{i, best, 1.0 / denom});
            }
            std::stable_sort(candidates.begin(), candidates.end(), [](const PseudoLabel& a, const PseudoLabel& b) {
                if (a.confidence != b.confidence) return a.confidence > b.confidence;
                return a.pixel_index < b.pixel_index;
            });
            const std::size_t keep =
                static_cast<std::size_t>(std::ceil(p * static_cast<double>(candidates.size())));
            candidates.resize(std::min(candidates.size(), keep));
        }
        result.push_back(std::move(candidates));
    }
    return result;
}

Zs5Run run_zs5(const PipelineConfig& cfg, const ClassCatalog& catalog,
               const ClassEmbeddingTable& /*embeddings*/, const Dataset& train, const Dataset& test,
               const Dataset& pool, const Zs3Run& zs3) {
    Zs5Run out;
    out.classifier = zs3.classifier;
    out.report = zs3.report;
    out.retrained = false;

    const std::vector<std::size_t> unseen = catalog.unseen_ids();
    ClassFeaturePools supervision = collect_class_features(train, catalog.size());
    for (std::size_t c : unseen)
        if (supervision[c].rows > 0)
            throw DataError("run_zs5: train scenes contain unseen class '" + catalog.names[c] + "'");

    RngStream clf_init = RngStream::named(cfg.seed, "zs5-classifier-init");
    RngStream clf_rng = RngStream::named(cfg.seed, "zs5-classifier");

    for (std::size_t round = 0; round < cfg.self_training_rounds; ++round) {
        const auto pseudo = select_pseudo_labels(out.classifier, pool, unseen, cfg.self_training_p);
        std::size_t total = 0;
        for (const auto& scene_labels : pseudo) total += scene_labels.size();
        if (total == 0) {
            std::fprintf(stderr, "warning: self-training round %zu selected no pseudo-labels; keeping previous result\n",
                         round);
            return out;
        }
        out.pseudo_pixels = total;

        // Real features of the selected pixels, labeled with their pseudo class.
        std::vector<std::size_t> counts(catalog.size(), 0);
        for (const auto& scene_labels : pseudo)
            for (const PseudoLabel& pl : scene_labels) counts[pl.class_id]++;
        ClassFeaturePools combined(catalog.size());
        for (std::size_t c = 0; c < catalog.size(); ++c) {
            const std::size_t synth_rows = zs3.synthetic_unseen[c].rows;
            if (counts[c] + synth_rows == 0) continue;
            combined[c] = Matrix(synth_rows + counts[c], test.d_x);
            if (synth_rows > 0)
                std::memcpy(combined[c].data.data(), zs3.synthetic_unseen[c].data.data(),
                            zs3.synthetic_unseen[c].data.size() * sizeof(double));
        }
        std::vector<std::size_t> fill(catalog.size(), 0);
        for (std::size_t s = 0; s < pseudo.size(); ++s) {
            const FeatureMap& fm = pool.scenes[s].features;
            for (const PseudoLabel& pl : pseudo[s]) {
                const std::size_t c = pl.class_id;
                double* dst = combined[c].row_ptr(zs3.synthetic_unseen[c].rows + fill[c]++);
                const float* src = fm.values.data() + pl.pixel_index * fm.depth;
                for (std::size_t j = 0; j < fm.depth; ++j) dst[j] = static_cast<double>(src[j]);
            }
        }

        out.classifier = LinearPixelClassifier(catalog.size(), test.d_x, clf_init);
        out.classifier_trace =
            finetune_classifier(out.classifier, supervision, combined, catalog, cfg.classifier, clf_rng);

        std::vector<LabelMap> predictions;
        predictions.reserve(test.scene_count());
        for (const Scene& s : test.scenes)
            predictions.push_back(out.classifier.predict_map(s.features, PredictMode::generalized, {}));
        out.report = evaluate(predictions, ground_truth_maps(test), catalog);
        out.retrained = true;
    }
    return out;
}

LabelMap DeviseBaseline::predict_map(const FeatureMap& features, PredictMode mode,
                                     const std::vector<std::size_t>& unseen_ids) const {
    std::vector<std::size_t> restrict_ids;
    if (mode == PredictMode::vanilla) {
        if (unseen_ids.empty()) throw ConfigError("vanilla prediction requires a nonempty unseen set");
        restrict_ids = unseen_ids;
    } else {
        restrict_ids.resize(embeddings.vectors.rows);
        for (std::size_t i = 0; i < restrict_ids.size(); ++i) restrict_ids[i] = i;
    }

    const Matrix rows = features_as_rows(features);
    Matrix regressed = matmul(rows, projection.weight.value);
    for (std::size_t i = 0; i < regressed.rows; ++i) {
        double* r = regressed.row_ptr(i);
        const double* b = projection.bias.value.row_ptr(0);
        for (std::size_t j = 0; j < regressed.cols; ++j) r[j] += b[j];
    }

    LabelMap map(features.height, features.width);
    bool warned = false;
    std::vector<double> query(regressed.cols);
    for (std::size_t i = 0; i < regressed.rows; ++i) {
        const double* r = regressed.row_ptr(i);
        double norm = 0.0;
        for (std::size_t j = 0; j < regressed.cols; ++j) norm += r[j] * r[j];
        if (norm == 0.0) {
            if (!warned) {
                std::fprintf(stderr, "warning: zero regressed embedding, falling back to class 0\n");
                warned = true;
            }
            map.labels[i] = 0;
            continue;
        }
        std::copy(r, r + regressed.cols, query.begin());
        map.labels[i] = static_cast<std::uint16_t>(cosine_nearest(embeddings, query, restrict_ids));
    }
    return map;
}

DeviseBaseline train_devise_baseline(const PipelineConfig& cfg, const ClassCatalog& catalog,
                                     const ClassEmbeddingTable& embeddings, const Dataset& train) {
    ClassFeaturePools pools = collect_class_features(train, catalog.size());
    std::vector<std::size_t> classes_present;
    for (std::size_t c = 0; c < catalog.size(); ++c) {
        if (!catalog.seen[c] && pools[c].rows > 0)
            throw DataError("baseline: train scenes contain unseen class '" + catalog.names[c] + "'");
        if (catalog.seen[c] && pools[c].rows > 0) classes_present.push_back(c);
    }
    if (classes_present.empty()) throw ConfigError("baseline: no seen training data");

    DeviseBaseline baseline;
    baseline.embeddings = embeddings.normalized_copy();

    RngStream init_rng = RngStream::named(cfg.seed, "baseline-init");
    RngStream rng = RngStream::named(cfg.seed, "baseline");
    baseline.projection = AffineLayer(train.d_x, embeddings.dimension, init_rng, "baseline.projection",
                                      1.0 / std::sqrt(static_cast<double>(train.d_x)));

    const ClassifierTrainConfig& tc = cfg.classifier;
    PolyLrSchedule schedule{tc.base_lr, tc.iterations, tc.poly_power};
    OptimizerState opt = OptimizerState::sgd(tc.momentum, tc.weight_decay);
    std::vector<Parameter*> params = {&baseline.projection.weight, &baseline.projection.bias};

    Matrix batch(tc.batch_size, train.d_x);
    Matrix targets(tc.batch_size, embeddings.dimension);
    baseline.trace.losses.reserve(tc.iterations);
    for (std::size_t iter = 0; iter < tc.iterations; ++iter) {
        for (std::size_t i = 0; i < tc.batch_size; ++i) {
            const std::size_t cls = classes_present[rng.uniform_int(classes_present.size())];
            const Matrix& pool = pools[cls];
            const std::size_t idx = rng.uniform_int(pool.rows);
            std::memcpy(batch.row_ptr(i), pool.row_ptr(idx), pool.cols * sizeof(double));
            std::memcpy(targets.row_ptr(i), baseline.embeddings.row(cls),
                        embeddings.dimension * sizeof(double));
        }
        Matrix regressed = baseline.projection.forward(batch);
        CosineLoss loss = cosine_embedding_loss(regressed, targets);
        baseline.projection.weight.zero_grad();
        baseline.projection.bias.zero_grad();
        baseline.projection.backward(loss.grad_output);
        const double lr = poly_lr(schedule, iter);
        if (lr > 0.0) optimizer_step(params, opt, lr);
        baseline.trace.losses.push_back(loss.loss);
    }
    return baseline;
}

EvalReport evaluate_devise_baseline(const DeviseBaseline& baseline, const ClassCatalog& catalog,
                                    const Dataset& test) {
    std::vector<LabelMap> predictions;
    predictions.reserve(test.scene_count());
    for (const Scene& s : test.scenes)
        predictions.push_back(baseline.predict_map(s.features, PredictMode::generalized, {}));
    return evaluate(predictions, ground_truth_maps(test), catalog);
}

namespace {

std::string config_tiebreak_key(const PipelineConfig& cfg) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.17g|%.17g|%zu|%zu|%.17g|%zu", cfg.kernel_scale,
                  cfg.generator.learning_rate, cfg.generator.iterations, cfg.generator.hidden,
                  cfg.classifier.base_lr, cfg.classifier.iterations);
    return buf;
}

} // namespace

CvOutcome zero_shot_cross_validate(const std::vector<PipelineConfig>& grid, const ClassCatalog& catalog,
                                   const ClassEmbeddingTable& embeddings, const Dataset& train,
                                   const SyntheticWorld& world) {
    if (grid.empty()) throw ConfigError("cross-validation grid is empty");
    const std::vector<std::size_t> seen = catalog.seen_ids();
    if (seen.size() < 4) throw ConfigError("cross-validation requires at least 4 seen classes");

    // Hold out ceil(|S|/4) seen classes (never the background) as pseudo-unseen.
    std::vector<std::size_t> candidates;
    for (std::size_t c : seen)
        if (!catalog.background_id || *catalog.background_id != c) candidates.push_back(c);
    RngStream holdout_rng = RngStream::named(grid.front().seed, "cv-holdout");
    for (std::size_t i = candidates.size(); i > 1; --i) {
        const std::size_t j = holdout_rng.uniform_int(i);
        std::swap(candidates[i - 1], candidates[j]);
    }
    const std::size_t n_holdout = (seen.size() + 3) / 4;
    if (n_holdout > candidates.size())
        throw ConfigError("cross-validation cannot hold out that many classes");
    std::vector<std::size_t> pseudo_unseen(candidates.begin(),
                                           candidates.begin() + static_cast<std::ptrdiff_t>(n_holdout));

    ClassCatalog catalog_cv = catalog;
    for (std::size_t c : pseudo_unseen) catalog_cv.seen[c] = false;

    // Deterministic interleaved split of the train scenes into fit/validation.
    Dataset cv_fit, cv_val;
    cv_fit.d_x = train.d_x;
    cv_val.d_x = train.d_x;
    for (std::size_t i = 0; i < train.scene_count(); ++i) {
        if (i % 4 == 3)
            cv_val.scenes.push_back(train.scenes[i]);
        else
            cv_fit.scenes.push_back(train.scenes[i]);
    }
    if (cv_fit.scenes.empty() || cv_val.scenes.empty())
        throw ConfigError("cross-validation needs at least 4 train scenes");

    ClassFeaturePools pools = collect_class_features(cv_fit, catalog.size());
    drop_unseen_pools(pools, catalog_cv);

    CvOutcome outcome;
    outcome.pseudo_unseen_ids = pseudo_unseen;
    outcome.scores.reserve(grid.size());
    double best_score = -1.0;
    std::string best_key;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        Zs3Run run = run_zs3_core(grid[g], catalog_cv, embeddings, pools, &cv_fit.scenes, cv_val, seen, world);
        const double score = run.report.h_iou;
        outcome.scores.push_back(score);
        const std::string key = config_tiebreak_key(grid[g]);
        if (score > best_score || (score == best_score && key < best_key)) {
            best_score = score;
            best_key = key;
            outcome.best_index = g;
        }
    }
    return outcome;
}

} // namespace zs3
