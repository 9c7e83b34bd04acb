#pragma once

#include "zs3/embeddings.hpp"
#include "zs3/matrix.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace zs3 {

/// M x N ground-truth class ids, row-major.
struct LabelMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint16_t> labels;

    LabelMap() = default;
    LabelMap(std::size_t m, std::size_t n, std::uint16_t fill = 0)
        : height(m), width(n), labels(m * n, fill) {}

    std::uint16_t& at(std::size_t r, std::size_t c) { return labels[r * width + c]; }
    std::uint16_t at(std::size_t r, std::size_t c) const { return labels[r * width + c]; }
    std::size_t pixels() const { return labels.size(); }
};

/// M x N x d_x per-pixel features, pixel-major. Values are held at 32-bit
/// precision so the on-disk format round-trips bit-exactly.
struct FeatureMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t depth = 0;
    std::vector<float> values;

    FeatureMap() = default;
    FeatureMap(std::size_t m, std::size_t n, std::size_t d)
        : height(m), width(n), depth(d), values(m * n * d, 0.0f) {}

    float* pixel(std::size_t r, std::size_t c) { return values.data() + (r * width + c) * depth; }
    const float* pixel(std::size_t r, std::size_t c) const { return values.data() + (r * width + c) * depth; }
    std::size_t pixels() const { return height * width; }
};

struct SceneGeometry {
    std::size_t min_stamps = 2;
    std::size_t max_stamps = 5;
    std::size_t min_region_size = 16; // pixels
};

/// Ground-truth generative law: per pixel of class c, x = a[c] * W_star + noise.
struct SyntheticWorld {
    Matrix w_star; // d_a x d_x
    double sigma_f = 0.0;
    SceneGeometry geometry;
    std::uint64_t seed = 0;

    std::size_t d_a() const { return w_star.rows; }
    std::size_t d_x() const { return w_star.cols; }

    /// Noiseless feature mean of a class, a[c] * W_star, as a 1 x d_x matrix.
    Matrix class_mean(const ClassEmbeddingTable& embeddings, std::size_t class_id) const;
};

struct WorldConfig {
    std::size_t d_x = 16;
    double sigma_f = 0.05;
    SceneGeometry geometry;
};

struct SplitConfig {
    std::size_t n_unseen = 0;
    std::vector<std::size_t> unseen_ids; // ordered, |unseen_ids| == n_unseen
    std::uint64_t seed = 0;

    bool is_unseen(std::size_t class_id) const;
};

struct Scene {
    FeatureMap features;
    LabelMap labels;
};

struct Dataset {
    std::vector<Scene> scenes;
    std::size_t d_x = 0;

    std::size_t scene_count() const { return scenes.size(); }
};

SyntheticWorld build_world(const ClassCatalog& catalog, const ClassEmbeddingTable& embeddings,
                           const WorldConfig& config, std::uint64_t seed);

/// Paints the background class, then stamps axis-aligned rectangles of
/// classes drawn from the subset; later stamps overwrite earlier ones.
/// Every class present in the result occupies >= min_region_size pixels.
LabelMap render_scene(const SyntheticWorld& world, const ClassCatalog& catalog,
                      const std::vector<std::size_t>& class_subset, std::size_t height, std::size_t width,
                      std::uint64_t scene_seed);

FeatureMap emit_features(const SyntheticWorld& world, const LabelMap& labelmap,
                         const ClassEmbeddingTable& embeddings, std::uint64_t scene_seed);

/// Unseen set = first K entries of a seeded permutation of class ids, so
/// splits with the same seed are nested. The background class is excluded
/// from the permutation.
SplitConfig make_split(const ClassCatalog& catalog, std::size_t n_unseen, std::uint64_t seed);

/// Applies a split to a catalog: marks unseen_ids unseen, everything else seen.
ClassCatalog apply_split(const ClassCatalog& catalog, const SplitConfig& split);

/// Renders n scenes (seed_base, seed_base+1, ...) and emits their features.
Dataset generate_scenes(const SyntheticWorld& world, const ClassCatalog& catalog,
                        const ClassEmbeddingTable& embeddings, const std::vector<std::size_t>& class_subset,
                        std::size_t n_scenes, std::size_t height, std::size_t width,
                        std::uint64_t seed_base);

void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Exact on-disk size of a dataset in the ZS3D format.
std::size_t dataset_file_size(std::size_t d_x, std::size_t height, std::size_t width, std::size_t n_scenes);

} // namespace zs3
