#pragma once

#include "zs3/embeddings.hpp"
#include "zs3/matrix.hpp"
#include "zs3/nn.hpp"
#include "zs3/scene_data.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace zs3 {

class RngStream;

/// Gaussian kernel bandwidths for the multi-kernel MMD estimator.
struct KernelBank {
    std::vector<double> bandwidths;

    explicit KernelBank(std::vector<double> sigmas);
    static KernelBank paper_default() { return KernelBank({2.0, 5.0, 10.0, 20.0, 40.0, 60.0}); }

    KernelBank scaled(double factor) const;
};

double gaussian_kernel(const double* x, const double* y, std::size_t dim, double sigma);
double gaussian_kernel(const std::vector<double>& x, const std::vector<double>& y, double sigma);

struct MmdResult {
    double value = 0.0;
    Matrix grad_generated; // d value / d generated rows
};

/// Biased squared-MMD estimator summed over the kernel bank:
///   sum_sigma [ (1/m^2) sum k(x,x') + (1/n^2) sum k(xh,xh') - (2/mn) sum k(x,xh) ]
/// with diagonal terms included. Gradient is w.r.t. the generated rows.
MmdResult mmd_loss(const Matrix& real, const Matrix& generated, const KernelBank& bank);

struct GmmnConfig {
    std::size_t hidden = 256;
    double leaky_slope = 0.2;
    double dropout_rate = 0.5;
    double learning_rate = 2e-4;
    std::size_t iterations = 4000;
    std::size_t batch_real = 64;
    std::size_t batch_synthetic = 64;
};

/// Class-conditioned feature generator: one hidden layer MLP on [a || z].
/// The noise dimension equals the embedding dimension.
class GmmnMlp {
public:
    GmmnMlp() = default;
    GmmnMlp(std::size_t d_a, std::size_t hidden, std::size_t d_x, double leaky_slope, double dropout_rate,
            RngStream& init_rng);

    /// Rows of `a` and `z` pair up; output is one feature row per input row.
    Matrix forward(const Matrix& a, const Matrix& z, RngStream& rng, bool training);
    void backward(const Matrix& grad_out);
    void zero_grad();
    std::vector<Parameter*> parameters();

    std::size_t d_a() const { return d_a_; }
    std::size_t d_z() const { return d_a_; }
    std::size_t hidden() const { return hidden_; }
    std::size_t d_x() const { return d_x_; }
    double leaky_slope() const { return activation_.slope(); }
    double dropout_rate() const { return dropout_.rate(); }

    AffineLayer& layer1() { return fc1_; }
    AffineLayer& layer2() { return fc2_; }

private:
    std::size_t d_a_ = 0;
    std::size_t hidden_ = 0;
    std::size_t d_x_ = 0;
    AffineLayer fc1_;
    LeakyReluLayer activation_{0.2};
    DropoutLayer dropout_{0.5};
    AffineLayer fc2_;
};

/// Real features grouped by class id; index = class id, empty matrix = no pixels.
using ClassFeaturePools = std::vector<Matrix>;

/// Gathers per-class feature rows from every scene of a dataset.
ClassFeaturePools collect_class_features(const Dataset& dataset, std::size_t n_classes);

struct TrainTrace {
    std::vector<double> losses; // one entry per iteration
};

/// Trains the generator on seen-class pools with per-class MMD batches,
/// round-robin over seen classes, Adam updates. Unseen pools must be empty.
TrainTrace train_generator(GmmnMlp& gen, const ClassFeaturePools& pools, const ClassCatalog& catalog,
                           const ClassEmbeddingTable& embeddings, const KernelBank& bank,
                           const GmmnConfig& config, RngStream& rng);

/// Draws n synthetic feature rows for one class (fresh z per row, eval mode).
Matrix sample_synthetic(GmmnMlp& gen, std::size_t class_id, std::size_t n,
                        const ClassEmbeddingTable& embeddings, RngStream& rng);

void save_generator(GmmnMlp& gen, const std::string& path);
GmmnMlp load_generator(const std::string& path);

/// 0 = MLP generator, 1 = graph generator.
int generator_checkpoint_kind(const std::string& path);

} // namespace zs3
