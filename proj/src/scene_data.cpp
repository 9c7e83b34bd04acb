#include "zs3/scene_data.hpp"

#include "zs3/errors.hpp"
#include "zs3/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace zs3 {

namespace {

RngStream derive_stream(std::uint64_t base_seed, std::string_view purpose, std::uint64_t index) {
    return RngStream::named(base_seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)), purpose);
}

} // namespace

Matrix SyntheticWorld::class_mean(const ClassEmbeddingTable& embeddings, std::size_t class_id) const {
    return matmul(embeddings.embedding_of(class_id), w_star);
}

bool SplitConfig::is_unseen(std::size_t class_id) const {
    return std::find(unseen_ids.begin(), unseen_ids.end(), class_id) != unseen_ids.end();
}

SyntheticWorld build_world(const ClassCatalog& catalog, const ClassEmbeddingTable& embeddings,
                           const WorldConfig& config, std::uint64_t seed) {
    if (embeddings.dimension < 2 || config.d_x < 2)
        throw ConfigError("build_world: d_a and d_x must be at least 2");
    if (catalog.size() != embeddings.vectors.rows)
        throw ConfigError("build_world: catalog size does not match embedding table");
    SyntheticWorld world;
    RngStream rng = RngStream::named(seed, "world");
    const double stddev = 1.0 / std::sqrt(static_cast<double>(embeddings.dimension));
    world.w_star = Matrix::randn(embeddings.dimension, config.d_x, rng, stddev);
    world.sigma_f = config.sigma_f;
    world.geometry = config.geometry;
    world.seed = seed;
    return world;
}

LabelMap render_scene(const SyntheticWorld& world, const ClassCatalog& catalog,
                      const std::vector<std::size_t>& class_subset, std::size_t height, std::size_t width,
                      std::uint64_t scene_seed) {
    if (class_subset.empty()) throw ConfigError("render_scene: empty class subset");
    if (height < 2 || width < 2) throw ConfigError("render_scene: canvas must be at least 2x2");
    const SceneGeometry& geom = world.geometry;
    if (geom.min_region_size > height * width)
        throw ConfigError("render_scene: canvas too small for min region size");

    std::size_t background = class_subset.front();
    if (catalog.background_id &&
        std::find(class_subset.begin(), class_subset.end(), *catalog.background_id) != class_subset.end())
        background = *catalog.background_id;

    std::vector<std::size_t> stamp_classes;
    for (std::size_t c : class_subset)
        if (c != background) stamp_classes.push_back(c);

    const std::size_t min_side =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(geom.min_region_size))));
    if (min_side > height || min_side > width)
        throw ConfigError("render_scene: canvas too small for min region size");

    RngStream rng = derive_stream(world.seed, "render", scene_seed);
    const std::size_t max_attempts = 100;
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        LabelMap map(height, width, static_cast<std::uint16_t>(background));
        if (!stamp_classes.empty() && geom.max_stamps > 0) {
            const std::size_t span = geom.max_stamps - std::min(geom.min_stamps, geom.max_stamps) + 1;
            const std::size_t k = std::min(geom.min_stamps, geom.max_stamps) + rng.uniform_int(span);
            for (std::size_t s = 0; s < k; ++s) {
                const std::size_t cls = stamp_classes[rng.uniform_int(stamp_classes.size())];
                const std::size_t max_h = std::max(min_side, height / 2);
                const std::size_t max_w = std::max(min_side, width / 2);
                const std::size_t h = min_side + rng.uniform_int(max_h - min_side + 1);
                const std::size_t w = min_side + rng.uniform_int(max_w - min_side + 1);
                const std::size_t r0 = rng.uniform_int(height - h + 1);
                const std::size_t c0 = rng.uniform_int(width - w + 1);
                for (std::size_t r = r0; r < r0 + h; ++r)
                    for (std::size_t c = c0; c < c0 + w; ++c) map.at(r, c) = static_cast<std::uint16_t>(cls);
            }
        }
        std::map<std::uint16_t, std::size_t> counts;
        for (std::uint16_t l : map.labels) counts[l]++;
        bool ok = true;
        for (const auto& [cls, n] : counts)
            if (n < geom.min_region_size) ok = false;
        if (ok) return map;
    }
    throw ConfigError("render_scene: could not satisfy min region size after " +
                      std::to_string(max_attempts) + " attempts");
}

FeatureMap emit_features(const SyntheticWorld& world, const LabelMap& labelmap,
                         const ClassEmbeddingTable& embeddings, std::uint64_t scene_seed) {
    FeatureMap fm(labelmap.height, labelmap.width, world.d_x());
    std::map<std::uint16_t, Matrix> means;
    for (std::uint16_t l : labelmap.labels)
        if (!means.count(l)) means.emplace(l, world.class_mean(embeddings, l));

    RngStream rng = derive_stream(world.seed, "features", scene_seed);
    const double sigma = world.sigma_f;
    float* out = fm.values.data();
    for (std::size_t p = 0; p < labelmap.pixels(); ++p) {
        const Matrix& mean = means.at(labelmap.labels[p]);
        const double* m = mean.row_ptr(0);
        for (std::size_t j = 0; j < fm.depth; ++j) {
            const double v = sigma == 0.0 ? m[j] : m[j] + sigma * rng.gaussian();
            out[p * fm.depth + j] = static_cast<float>(v);
        }
    }
    return fm;
}

SplitConfig make_split(const ClassCatalog& catalog, std::size_t n_unseen, std::uint64_t seed) {
    if (n_unseen >= catalog.size() && catalog.size() > 0)
        throw ConfigError("make_split: K must be smaller than the class count");
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < catalog.size(); ++i)
        if (!catalog.background_id || *catalog.background_id != i) pool.push_back(i);
    if (n_unseen > pool.size())
        throw ConfigError("make_split: K exceeds the number of non-background classes");

    RngStream rng = RngStream::named(seed, "split");
    for (std::size_t i = pool.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_int(i);
        std::swap(pool[i - 1], pool[j]);
    }
    SplitConfig split;
    split.n_unseen = n_unseen;
    split.unseen_ids.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_unseen));
    split.seed = seed;
    return split;
}

ClassCatalog apply_split(const ClassCatalog& catalog, const SplitConfig& split) {
    ClassCatalog out = catalog;
    out.seen.assign(out.size(), true);
    for (std::size_t id : split.unseen_ids) {
        if (id >= out.size()) throw ConfigError("apply_split: unseen id out of catalog");
        if (out.background_id && *out.background_id == id)
            throw ConfigError("apply_split: background class cannot be unseen");
        out.seen[id] = false;
    }
    return out;
}

Dataset generate_scenes(const SyntheticWorld& world, const ClassCatalog& catalog,
                        const ClassEmbeddingTable& embeddings, const std::vector<std::size_t>& class_subset,
                        std::size_t n_scenes, std::size_t height, std::size_t width,
                        std::uint64_t seed_base) {
    Dataset ds;
    ds.d_x = world.d_x();
    ds.scenes.reserve(n_scenes);
    for (std::size_t i = 0; i < n_scenes; ++i) {
        Scene scene;
        scene.labels = render_scene(world, catalog, class_subset, height, width, seed_base + i);
        scene.features = emit_features(world, scene.labels, embeddings, seed_base + i);
        ds.scenes.push_back(std::move(scene));
    }
    return ds;
}

namespace {

void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xFF));
    buf.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& buf, float v) {
    put_u32(buf, std::bit_cast<std::uint32_t>(v));
}

struct Reader {
    std::ifstream in;
    explicit Reader(const std::string& path) : in(path, std::ios::binary) {}

    void bytes(char* dst, std::size_t n) {
        in.read(dst, static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n)) throw IoError("dataset file truncated");
    }
    std::uint16_t u16() {
        unsigned char b[2];
        bytes(reinterpret_cast<char*>(b), 2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(reinterpret_cast<char*>(b), 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    float f32() { return std::bit_cast<float>(u32()); }
};

} // namespace

std::size_t dataset_file_size(std::size_t d_x, std::size_t height, std::size_t width, std::size_t n_scenes) {
    const std::size_t header = 4 + 2 + 2 + 2 + 2 + 4;
    const std::size_t per_scene = height * width * 2 + height * width * d_x * 4;
    return header + n_scenes * per_scene;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    if (dataset.scenes.empty()) throw DataError("save_dataset: dataset must not be empty");
    const std::size_t m = dataset.scenes.front().labels.height;
    const std::size_t n = dataset.scenes.front().labels.width;
    const std::size_t d = dataset.d_x;
    if (m > 0xFFFF || n > 0xFFFF || d > 0xFFFF)
        throw DataError("save_dataset: dimension exceeds format limit");
    if (dataset.scenes.size() > 0xFFFFFFFFULL) throw DataError("save_dataset: too many scenes");
    for (const Scene& s : dataset.scenes) {
        if (s.labels.height != m || s.labels.width != n || s.features.depth != d ||
            s.features.height != m || s.features.width != n)
            throw DataError("save_dataset: scenes must have uniform dimensions");
    }

    std::string buf;
    buf.reserve(dataset_file_size(d, m, n, dataset.scenes.size()));
    buf.append("ZS3D", 4);
    put_u16(buf, 1); // version
    put_u16(buf, static_cast<std::uint16_t>(d));
    put_u16(buf, static_cast<std::uint16_t>(m));
    put_u16(buf, static_cast<std::uint16_t>(n));
    put_u32(buf, static_cast<std::uint32_t>(dataset.scenes.size()));
    for (const Scene& s : dataset.scenes) {
        for (std::uint16_t l : s.labels.labels) put_u16(buf, l);
        for (float v : s.features.values) put_f32(buf, v);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failure on '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
    Reader r(path);
    if (!r.in) throw IoError("cannot open dataset file '" + path + "'");
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "ZS3D", 4) != 0) throw FormatError("bad dataset magic");
    const std::uint16_t version = r.u16();
    if (version != 1) throw FormatError("unsupported dataset version " + std::to_string(version));
    const std::size_t d = r.u16();
    const std::size_t m = r.u16();
    const std::size_t n = r.u16();
    const std::uint32_t count = r.u32();
    if (d == 0 || m == 0 || n == 0) throw FormatError("degenerate dataset dimensions");
    if (count == 0) throw FormatError("empty dataset");

    Dataset ds;
    ds.d_x = d;
    ds.scenes.reserve(count);
    for (std::uint32_t s = 0; s < count; ++s) {
        Scene scene;
        scene.labels = LabelMap(m, n);
        for (std::uint16_t& l : scene.labels.labels) l = r.u16();
        scene.features = FeatureMap(m, n, d);
        for (float& v : scene.features.values) v = r.f32();
        ds.scenes.push_back(std::move(scene));
    }
    return ds;
}

} // namespace zs3
