#include "zs3/graph.hpp"

#include "zs3/errors.hpp"
#include "zs3/optim.hpp"
#include "zs3/rng.hpp"
#include "zs3/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <queue>
#include <set>

namespace zs3 {

namespace {

const int kOffsets4[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
const int kOffsets8[8][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};

} // namespace

ComponentGraph extract_component_graph(const LabelMap& labelmap, const ClassEmbeddingTable& embeddings,
                                       int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        throw ConfigError("component graph connectivity must be 4 or 8");
    const std::size_t h = labelmap.height;
    const std::size_t w = labelmap.width;
    const int n_off = connectivity;
    const int(*offsets)[2] = connectivity == 4 ? kOffsets4 : kOffsets8;

    std::vector<std::ptrdiff_t> component(h * w, -1);
    ComponentGraph graph;

    for (std::size_t start = 0; start < h * w; ++start) {
        if (component[start] >= 0) continue;
        const std::uint16_t cls = labelmap.labels[start];
        const std::size_t id = graph.nodes.size();
        graph.nodes.push_back(GraphNode{cls, {}});
        std::queue<std::size_t> frontier;
        frontier.push(start);
        component[start] = static_cast<std::ptrdiff_t>(id);
        while (!frontier.empty()) {
            const std::size_t p = frontier.front();
            frontier.pop();
            graph.nodes[id].pixel_indices.push_back(p);
            const std::size_t r = p / w;
            const std::size_t c = p % w;
            for (int k = 0; k < n_off; ++k) {
                const std::ptrdiff_t nr = static_cast<std::ptrdiff_t>(r) + offsets[k][0];
                const std::ptrdiff_t nc = static_cast<std::ptrdiff_t>(c) + offsets[k][1];
                if (nr < 0 || nc < 0 || nr >= static_cast<std::ptrdiff_t>(h) ||
                    nc >= static_cast<std::ptrdiff_t>(w))
                    continue;
                const std::size_t np = static_cast<std::size_t>(nr) * w + static_cast<std::size_t>(nc);
                if (component[np] >= 0 || labelmap.labels[np] != cls) continue;
                component[np] = static_cast<std::ptrdiff_t>(id);
                frontier.push(np);
            }
        }
        std::sort(graph.nodes[id].pixel_indices.begin(), graph.nodes[id].pixel_indices.end());
    }

    std::set<std::pair<std::size_t, std::size_t>> edge_set;
    for (std::size_t p = 0; p < h * w; ++p) {
        const std::size_t r = p / w;
        const std::size_t c = p % w;
        for (int k = 0; k < n_off; ++k) {
            const std::ptrdiff_t nr = static_cast<std::ptrdiff_t>(r) + offsets[k][0];
            const std::ptrdiff_t nc = static_cast<std::ptrdiff_t>(c) + offsets[k][1];
            if (nr < 0 || nc < 0 || nr >= static_cast<std::ptrdiff_t>(h) ||
                nc >= static_cast<std::ptrdiff_t>(w))
                continue;
            const std::size_t np = static_cast<std::size_t>(nr) * w + static_cast<std::size_t>(nc);
            const std::size_t a = static_cast<std::size_t>(component[p]);
            const std::size_t b = static_cast<std::size_t>(component[np]);
            if (a != b) edge_set.emplace(std::min(a, b), std::max(a, b));
        }
    }
    graph.edges.assign(edge_set.begin(), edge_set.end());

    graph.node_embeddings = Matrix(graph.nodes.size(), embeddings.dimension);
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const double* a = embeddings.row(graph.nodes[i].class_id);
        std::memcpy(graph.node_embeddings.row_ptr(i), a, embeddings.dimension * sizeof(double));
    }
    return graph;
}

Matrix normalize_adjacency(const ComponentGraph& graph) {
    const std::size_t n = graph.size();
    Matrix a_hat = Matrix::identity(n);
    for (const auto& [u, v] : graph.edges) {
        a_hat(u, v) = 1.0;
        a_hat(v, u) = 1.0;
    }
    std::vector<double> inv_sqrt_deg(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += a_hat(i, j);
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a_hat(i, j) *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
    return a_hat;
}

GraphGenerator::GraphGenerator(std::size_t d_a, std::size_t hidden, std::size_t d_x, double leaky_slope,
                               double dropout_rate, RngStream& init_rng)
    : d_a_(d_a),
      hidden_(hidden),
      d_x_(d_x),
      w1_(Matrix::randn(2 * d_a, hidden, init_rng, 1.0 / std::sqrt(static_cast<double>(2 * d_a))),
          "gcn.w1"),
      w2_(Matrix::randn(hidden, d_x, init_rng, 1.0 / std::sqrt(static_cast<double>(hidden))), "gcn.w2"),
      activation_(leaky_slope),
      dropout_(dropout_rate) {}

Matrix GraphGenerator::forward(const ComponentGraph& graph, const Matrix& norm_adjacency, const Matrix& z,
                               RngStream& rng, bool training) {
    const std::size_t n = graph.size();
    if (z.rows != n || z.cols != d_a_) throw DimensionError("graph forward: z must be |V| x d_a");
    if (graph.node_embeddings.cols != d_a_) throw DimensionError("graph forward: embedding width mismatch");
    if (norm_adjacency.rows != n || norm_adjacency.cols != n)
        throw DimensionError("graph forward: adjacency must be |V| x |V|");

    Matrix h0(n, 2 * d_a_);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = h0.row_ptr(i);
        std::memcpy(row, graph.node_embeddings.row_ptr(i), d_a_ * sizeof(double));
        std::memcpy(row + d_a_, z.row_ptr(i), d_a_ * sizeof(double));
    }
    adj_ = norm_adjacency;
    t1_ = matmul(adj_, h0);
    pre1_ = matmul(t1_, w1_.value);
    Matrix h1 = activation_.forward(pre1_);
    h1 = dropout_.forward(h1, rng, training);
    t2_ = matmul(adj_, h1);
    Matrix out = matmul(t2_, w2_.value);
    check_finite(out, "graph generator output");
    return out;
}

void GraphGenerator::backward(const Matrix& grad_out) {
    add_inplace(w2_.grad, matmul_tn(t2_, grad_out));
    Matrix dt2 = matmul_nt(grad_out, transpose(w2_.value));
    Matrix dh1 = matmul_tn(adj_, dt2);
    dh1 = dropout_.backward(dh1);
    Matrix dpre1 = activation_.backward(dh1);
    add_inplace(w1_.grad, matmul_tn(t1_, dpre1));
}

void GraphGenerator::zero_grad() {
    w1_.zero_grad();
    w2_.zero_grad();
}

std::vector<Parameter*> GraphGenerator::parameters() { return {&w1_, &w2_}; }

SceneGraph build_scene_graph(const Scene& scene, const ClassEmbeddingTable& embeddings, int connectivity) {
    SceneGraph sg;
    sg.graph = extract_component_graph(scene.labels, embeddings, connectivity);
    sg.norm_adjacency = normalize_adjacency(sg.graph);
    const std::size_t d = scene.features.depth;
    sg.node_targets = Matrix(sg.graph.size(), d);
    for (std::size_t i = 0; i < sg.graph.size(); ++i) {
        double* row = sg.node_targets.row_ptr(i);
        const auto& pixels = sg.graph.nodes[i].pixel_indices;
        for (std::size_t p : pixels) {
            const float* f = scene.features.values.data() + p * d;
            for (std::size_t j = 0; j < d; ++j) row[j] += static_cast<double>(f[j]);
        }
        for (std::size_t j = 0; j < d; ++j) row[j] /= static_cast<double>(pixels.size());
    }
    return sg;
}

TrainTrace train_graph_generator(GraphGenerator& gen, const std::vector<SceneGraph>& scenes,
                                 const ClassCatalog& catalog, const KernelBank& bank,
                                 const GmmnConfig& config, RngStream& rng) {
    if (scenes.empty()) throw ConfigError("train_graph_generator: no scenes");
    for (const SceneGraph& sg : scenes)
        for (const GraphNode& node : sg.graph.nodes)
            if (!catalog.seen[node.class_id])
                throw ConfigError("train_graph_generator: supervision scene contains unseen class '" +
                                  catalog.names[node.class_id] + "'");

    OptimizerState opt = OptimizerState::adam();
    std::vector<Parameter*> params = gen.parameters();
    TrainTrace trace;
    trace.losses.reserve(config.iterations);
    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        const SceneGraph& sg = scenes[iter % scenes.size()];
        const std::size_t n = sg.graph.size();
        Matrix z = Matrix::randn(n, gen.d_z(), rng);
        Matrix generated = gen.forward(sg.graph, sg.norm_adjacency, z, rng, /*training=*/true);

        std::map<std::size_t, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < n; ++i) by_class[sg.graph.nodes[i].class_id].push_back(i);

        double loss = 0.0;
        Matrix grad_out = Matrix::zeros(n, gen.d_x());
        for (const auto& [cls, node_ids] : by_class) {
            Matrix real(node_ids.size(), gen.d_x());
            Matrix gen_rows(node_ids.size(), gen.d_x());
            for (std::size_t k = 0; k < node_ids.size(); ++k) {
                std::memcpy(real.row_ptr(k), sg.node_targets.row_ptr(node_ids[k]),
                            gen.d_x() * sizeof(double));
                std::memcpy(gen_rows.row_ptr(k), generated.row_ptr(node_ids[k]),
                            gen.d_x() * sizeof(double));
            }
            MmdResult mmd = mmd_loss(real, gen_rows, bank);
            loss += mmd.value;
            for (std::size_t k = 0; k < node_ids.size(); ++k) {
                double* dst = grad_out.row_ptr(node_ids[k]);
                const double* src = mmd.grad_generated.row_ptr(k);
                for (std::size_t j = 0; j < gen.d_x(); ++j) dst[j] += src[j];
            }
        }
        gen.zero_grad();
        gen.backward(grad_out);
        optimizer_step(params, opt, config.learning_rate);
        trace.losses.push_back(loss);
    }
    return trace;
}

ClassFeaturePools sample_synthetic_graph(GraphGenerator& gen, const std::vector<SceneGraph>& structures,
                                         std::size_t n_classes, std::size_t n_per_class, RngStream& rng) {
    if (structures.empty()) throw ConfigError("sample_synthetic_graph: no structure masks");
    std::vector<std::vector<double>> rows(n_classes);
    std::vector<bool> present(n_classes, false);
    for (const SceneGraph& sg : structures)
        for (const GraphNode& node : sg.graph.nodes) present[node.class_id] = true;

    auto done = [&]() {
        for (std::size_t c = 0; c < n_classes; ++c)
            if (present[c] && rows[c].size() < n_per_class * gen.d_x()) return false;
        return true;
    };

    for (std::size_t pass = 0; pass < n_per_class && !done(); ++pass) {
        for (const SceneGraph& sg : structures) {
            Matrix z = Matrix::randn(sg.graph.size(), gen.d_z(), rng);
            Matrix out = gen.forward(sg.graph, sg.norm_adjacency, z, rng, /*training=*/false);
            for (std::size_t i = 0; i < sg.graph.size(); ++i) {
                const std::size_t cls = sg.graph.nodes[i].class_id;
                if (rows[cls].size() >= n_per_class * gen.d_x()) continue;
                const double* r = out.row_ptr(i);
                rows[cls].insert(rows[cls].end(), r, r + gen.d_x());
            }
        }
    }

    ClassFeaturePools pools(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        const std::size_t count = rows[c].size() / gen.d_x();
        if (count == 0) continue;
        pools[c] = Matrix(count, gen.d_x());
        std::copy(rows[c].begin(), rows[c].end(), pools[c].data.begin());
    }
    return pools;
}

void save_graph_generator(GraphGenerator& gen, const std::string& path) {
    ByteWriter w;
    w.magic("ZS3G");
    w.u16(1);
    w.u8(1); // kind: graph
    w.u16(static_cast<std::uint16_t>(gen.d_a()));
    w.u16(static_cast<std::uint16_t>(gen.hidden()));
    w.u16(static_cast<std::uint16_t>(gen.d_x()));
    w.f64(gen.leaky_slope());
    w.f64(gen.dropout_rate());
    for (Parameter* p : gen.parameters()) w.matrix(p->value);
    w.to_file(path);
}

GraphGenerator load_graph_generator(const std::string& path) {
    ByteReader r(path);
    r.expect_magic("ZS3G");
    const std::uint16_t version = r.u16();
    if (version != 1) throw FormatError("unsupported generator checkpoint version");
    const std::uint8_t kind = r.u8();
    if (kind != 1) throw FormatError("checkpoint holds an MLP generator, not a graph generator");
    const std::size_t d_a = r.u16();
    const std::size_t hidden = r.u16();
    const std::size_t d_x = r.u16();
    const double slope = r.f64();
    const double dropout = r.f64();
    RngStream dummy(0);
    GraphGenerator gen(d_a, hidden, d_x, slope, dropout, dummy);
    for (Parameter* p : gen.parameters()) r.matrix_into(p->value);
    r.expect_end();
    return gen;
}

} // namespace zs3
