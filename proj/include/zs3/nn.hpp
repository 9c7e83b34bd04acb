#pragma once

#include "zs3/matrix.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace zs3 {

class RngStream;

/// A trainable tensor and its gradient accumulator.
struct Parameter {
    Matrix value;
    Matrix grad;
    std::string name;

    Parameter() = default;
    Parameter(Matrix v, std::string n)
        : value(std::move(v)), grad(Matrix::zeros(value.rows, value.cols)), name(std::move(n)) {}

    void zero_grad() { grad.fill(0.0); }
};

/// out = input * weight + bias (bias broadcast per row).
class AffineLayer {
public:
    AffineLayer() = default;
    AffineLayer(std::size_t in_dim, std::size_t out_dim, RngStream& rng, const std::string& name,
                double init_stddev);

    Matrix forward(const Matrix& input);
    /// Accumulates weight/bias grads, returns grad w.r.t. input.
    Matrix backward(const Matrix& grad_out);

    Parameter weight; // in_dim x out_dim
    Parameter bias;   // 1 x out_dim

private:
    Matrix input_cache_;
};

class LeakyReluLayer {
public:
    explicit LeakyReluLayer(double slope);

    Matrix forward(const Matrix& input);
    Matrix backward(const Matrix& grad_out) const;

    double slope() const { return slope_; }

private:
    double slope_;
    Matrix input_cache_;
};

/// Inverted dropout: kept entries are scaled by 1/(1-rate) so eval mode is
/// the exact identity. The forward mask is reused in backward.
class DropoutLayer {
public:
    explicit DropoutLayer(double rate);

    Matrix forward(const Matrix& input, RngStream& rng, bool training);
    Matrix backward(const Matrix& grad_out) const;

    double rate() const { return rate_; }

private:
    double rate_;
    bool last_training_ = false;
    Matrix mask_; // holds the scale factor per element
};

struct SoftmaxCrossEntropy {
    double loss = 0.0;
    Matrix grad_logits; // (softmax - onehot) / batch
    Matrix probs;       // batch x classes
};

/// Mean cross-entropy over rows; targets are class indices.
SoftmaxCrossEntropy softmax_cross_entropy(const Matrix& logits, const std::vector<std::size_t>& targets);

struct CosineLoss {
    double loss = 0.0;
    Matrix grad_output; // w.r.t. the regressed rows, already averaged over the batch
};

/// Mean over rows of 1 - cos(output_row, target_row).
CosineLoss cosine_embedding_loss(const Matrix& output, const Matrix& targets);

} // namespace zs3
