#pragma once

#include "zs3/embeddings.hpp"
#include "zs3/gmmn.hpp"
#include "zs3/matrix.hpp"
#include "zs3/scene_data.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace zs3 {

class RngStream;

struct GraphNode {
    std::size_t class_id = 0;
    std::vector<std::size_t> pixel_indices; // row-major indices into the source map
};

/// Adjacency graph of the single-class connected components of a label map.
/// Nodes are in discovery (row-major scan) order; edges join components that
/// share a boundary, so edge endpoints always have different classes.
struct ComponentGraph {
    std::vector<GraphNode> nodes;
    std::vector<std::pair<std::size_t, std::size_t>> edges; // undirected, first < second
    Matrix node_embeddings;                                 // |V| x d_a

    std::size_t size() const { return nodes.size(); }
};

/// connectivity must be 4 or 8; it applies to both component growth and
/// boundary detection.
ComponentGraph extract_component_graph(const LabelMap& labelmap, const ClassEmbeddingTable& embeddings,
                                       int connectivity = 4);

/// Kipf-Welling propagation matrix: D^{-1/2} (A + I) D^{-1/2}.
Matrix normalize_adjacency(const ComponentGraph& graph);

/// Two graph-convolution layers mirroring GmmnMlp's widths; no biases.
class GraphGenerator {
public:
    GraphGenerator() = default;
    GraphGenerator(std::size_t d_a, std::size_t hidden, std::size_t d_x, double leaky_slope,
                   double dropout_rate, RngStream& init_rng);

    /// One output feature row per node: out = A~ drop(leaky(A~ [a||z] W1)) W2.
    /// `z` must have one row per node.
    Matrix forward(const ComponentGraph& graph, const Matrix& norm_adjacency, const Matrix& z,
                   RngStream& rng, bool training);
    void backward(const Matrix& grad_out);
    void zero_grad();
    std::vector<Parameter*> parameters();

    std::size_t d_a() const { return d_a_; }
    std::size_t d_z() const { return d_a_; }
    std::size_t hidden() const { return hidden_; }
    std::size_t d_x() const { return d_x_; }
    double leaky_slope() const { return activation_.slope(); }
    double dropout_rate() const { return dropout_.rate(); }

private:
    std::size_t d_a_ = 0;
    std::size_t hidden_ = 0;
    std::size_t d_x_ = 0;
    Parameter w1_; // (2 d_a) x hidden
    Parameter w2_; // hidden x d_x
    LeakyReluLayer activation_{0.2};
    DropoutLayer dropout_{0.5};
    // forward caches
    Matrix t1_;       // A~ H0
    Matrix pre1_;     // t1 W1
    Matrix t2_;       // A~ drop(leaky(pre1))
    Matrix adj_;      // A~
};

/// Per-scene graph with per-node mean real features, the supervision unit
/// for graph-context training.
struct SceneGraph {
    ComponentGraph graph;
    Matrix norm_adjacency;
    Matrix node_targets; // |V| x d_x mean real feature per node
};

SceneGraph build_scene_graph(const Scene& scene, const ClassEmbeddingTable& embeddings, int connectivity);

/// One scene per iteration: generate per-node features, group nodes by class,
/// accumulate per-class MMD against the node mean targets, Adam step.
TrainTrace train_graph_generator(GraphGenerator& gen, const std::vector<SceneGraph>& scenes,
                                 const ClassCatalog& catalog, const KernelBank& bank,
                                 const GmmnConfig& config, RngStream& rng);

/// Draws synthetic feature rows per class by running the generator over
/// structure-only masks; returns one pool per class id (classes not present
/// in any mask get an empty pool). Each class pool is capped at n_per_class.
ClassFeaturePools sample_synthetic_graph(GraphGenerator& gen, const std::vector<SceneGraph>& structures,
                                         std::size_t n_classes, std::size_t n_per_class, RngStream& rng);

void save_graph_generator(GraphGenerator& gen, const std::string& path);
GraphGenerator load_graph_generator(const std::string& path);

} // namespace zs3
