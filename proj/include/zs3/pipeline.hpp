#pragma once

#include "zs3/classifier.hpp"
#include "zs3/embeddings.hpp"
#include "zs3/gmmn.hpp"
#include "zs3/graph.hpp"
#include "zs3/metrics.hpp"
#include "zs3/scene_data.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace zs3 {

/// Full recipe for one zero-shot run; every field has a working default and
/// all randomness derives from `seed` through named streams.
struct PipelineConfig {
    std::size_t n_classes = 10;
    std::size_t d_a = 8;
    double embedding_pair_cos = 0.85;

    WorldConfig world; // d_x, sigma_f, scene geometry

    std::size_t scene_height = 64;
    std::size_t scene_width = 64;
    std::size_t n_train_scenes = 200;
    std::size_t n_test_scenes = 50;
    std::size_t n_pool_scenes = 50;

    std::size_t n_unseen = 2;

    GmmnConfig generator;
    std::vector<double> kernel_bandwidths = {2.0, 5.0, 10.0, 20.0, 40.0, 60.0};
    double kernel_scale = 1.0;

    ClassifierTrainConfig classifier;
    std::size_t synthetic_per_class = 500;

    bool graph_context = false;
    int graph_connectivity = 4;
    std::size_t n_structure_masks = 64;

    double self_training_p = 0.25;
    std::size_t self_training_rounds = 1;

    std::uint64_t seed = 7;

    KernelBank kernel_bank() const { return KernelBank(kernel_bandwidths).scaled(kernel_scale); }
};

/// Scene seed namespaces; keeps train/test/pool/structure renders disjoint.
inline constexpr std::uint64_t kTrainSceneSeedBase = 0;
inline constexpr std::uint64_t kTestSceneSeedBase = 1'000'000;
inline constexpr std::uint64_t kPoolSceneSeedBase = 2'000'000;
inline constexpr std::uint64_t kStructureSeedBase = 3'000'000;

struct Zs3Run {
    bool used_graph_context = false;
    GmmnMlp generator;
    GraphGenerator graph_generator;
    LinearPixelClassifier classifier;
    ClassFeaturePools synthetic_unseen; // per class id
    TrainTrace generator_trace;
    TrainTrace classifier_trace;
    EvalReport report;
};

/// Trains the generator on seen pixels, synthesizes unseen features,
/// fine-tunes the classifier on the union, and evaluates generalized
/// predictions on the test scenes. Train scenes must contain no unseen pixel.
Zs3Run run_zs3(const PipelineConfig& config, const ClassCatalog& catalog,
               const ClassEmbeddingTable& embeddings, const Dataset& train, const Dataset& test,
               const SyntheticWorld& world);

struct PseudoLabel {
    std::size_t pixel_index = 0;
    std::size_t class_id = 0; // always unseen
    double confidence = 0.0;  // softmax probability of the winning class
};

/// Per scene: pixels whose generalized argmax lands on an unseen class,
/// keeping the top ceil(p * count) by confidence (ties by pixel index).
std::vector<std::vector<PseudoLabel>> select_pseudo_labels(const LinearPixelClassifier& clf,
                                                           const Dataset& unlabeled,
                                                           const std::vector<std::size_t>& unseen_ids,
                                                           double p);

struct Zs5Run {
    LinearPixelClassifier classifier;
    EvalReport report;
    bool retrained = false;            // false when the pseudo set was empty
    std::size_t pseudo_pixels = 0;
    TrainTrace classifier_trace;
};

/// One self-training round per config: pseudo-label the pool with the ZS3
/// classifier, append the selected real features (with their pseudo labels)
/// to the unseen pools, retrain the classifier, re-evaluate. An empty pseudo
/// set returns the ZS3 report unchanged.
Zs5Run run_zs5(const PipelineConfig& config, const ClassCatalog& catalog,
               const ClassEmbeddingTable& embeddings, const Dataset& train, const Dataset& test,
               const Dataset& pool, const Zs3Run& zs3);

/// DeViSe-style baseline: linear projection d_x -> d_a trained with cosine
/// loss against normalized class embeddings; prediction by cosine nearest
/// class.
struct DeviseBaseline {
    AffineLayer projection;
    ClassEmbeddingTable embeddings; // normalized

    LabelMap predict_map(const FeatureMap& features, PredictMode mode,
                         const std::vector<std::size_t>& unseen_ids) const;
    TrainTrace trace;
};

DeviseBaseline train_devise_baseline(const PipelineConfig& config, const ClassCatalog& catalog,
                                     const ClassEmbeddingTable& embeddings, const Dataset& train);

EvalReport evaluate_devise_baseline(const DeviseBaseline& baseline, const ClassCatalog& catalog,
                                    const Dataset& test);

struct CvOutcome {
    std::size_t best_index = 0;
    std::vector<double> scores; // pseudo-unseen hIoU per grid point
    std::vector<std::size_t> pseudo_unseen_ids;
};

/// Holds out ceil(|S|/4) seen classes as pseudo-unseen, runs the ZS3
/// pipeline per grid point inside the seen universe and picks the point with
/// the best pseudo-unseen hIoU. True unseen classes are never touched.
CvOutcome zero_shot_cross_validate(const std::vector<PipelineConfig>& grid, const ClassCatalog& catalog,
                                   const ClassEmbeddingTable& embeddings, const Dataset& train,
                                   const SyntheticWorld& world);

} // namespace zs3
