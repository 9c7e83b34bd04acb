#include "zs3/nn.hpp"

#include "zs3/errors.hpp"
#include "zs3/rng.hpp"

#include <algorithm>
#include <cmath>

namespace zs3 {

AffineLayer::AffineLayer(std::size_t in_dim, std::size_t out_dim, RngStream& rng,
                         const std::string& name, double init_stddev)
    : weight(Matrix::randn(in_dim, out_dim, rng, init_stddev), name + ".weight"),
      bias(Matrix::zeros(1, out_dim), name + ".bias") {}

Matrix AffineLayer::forward(const Matrix& input) {
    if (input.cols != weight.value.rows)
        throw DimensionError("affine: input cols " + std::to_string(input.cols) + " != weight rows " +
                             std::to_string(weight.value.rows));
    input_cache_ = input;
    Matrix out = matmul(input, weight.value);
    for (std::size_t i = 0; i < out.rows; ++i) {
        double* row = out.row_ptr(i);
        const double* b = bias.value.row_ptr(0);
        for (std::size_t j = 0; j < out.cols; ++j) row[j] += b[j];
    }
    return out;
}

Matrix AffineLayer::backward(const Matrix& grad_out) {
    if (grad_out.cols != weight.value.cols || grad_out.rows != input_cache_.rows)
        throw DimensionError("affine backward: grad shape mismatch");
    add_inplace(weight.grad, matmul_tn(input_cache_, grad_out));
    for (std::size_t i = 0; i < grad_out.rows; ++i) {
        const double* row = grad_out.row_ptr(i);
        double* b = bias.grad.row_ptr(0);
        for (std::size_t j = 0; j < grad_out.cols; ++j) b[j] += row[j];
    }
    return matmul_nt(grad_out, transpose(weight.value));
}

LeakyReluLayer::LeakyReluLayer(double slope) : slope_(slope) {
    if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("leaky_relu: slope must be in (0,1)");
}

Matrix LeakyReluLayer::forward(const Matrix& input) {
    input_cache_ = input;
    Matrix out = input;
    for (double& v : out.data)
        if (v < 0.0) v *= slope_;
    return out;
}

Matrix LeakyReluLayer::backward(const Matrix& grad_out) const {
    if (!grad_out.same_shape(input_cache_)) throw DimensionError("leaky_relu backward: shape mismatch");
    Matrix out = grad_out;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (input_cache_.data[i] < 0.0) out.data[i] *= slope_;
    return out;
}

DropoutLayer::DropoutLayer(double rate) : rate_(rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0,1)");
}

Matrix DropoutLayer::forward(const Matrix& input, RngStream& rng, bool training) {
    last_training_ = training;
    if (!training) return input;
    const double keep = 1.0 - rate_;
    mask_ = Matrix(input.rows, input.cols);
    Matrix out = input;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double scale = rng.uniform() < keep ? 1.0 / keep : 0.0;
        mask_.data[i] = scale;
        out.data[i] *= scale;
    }
    return out;
}

Matrix DropoutLayer::backward(const Matrix& grad_out) const {
    if (!last_training_) return grad_out;
    return hadamard(grad_out, mask_);
}

SoftmaxCrossEntropy softmax_cross_entropy(const Matrix& logits, const std::vector<std::size_t>& targets) {
    if (targets.size() != logits.rows) throw DimensionError("softmax_ce: one target per row required");
    const std::size_t batch = logits.rows;
    const std::size_t k = logits.cols;
    SoftmaxCrossEntropy result;
    result.probs = Matrix(batch, k);
    result.grad_logits = Matrix(batch, k);
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        if (targets[i] >= k)
            throw IndexError("softmax_ce: target " + std::to_string(targets[i]) + " out of range [0," +
                             std::to_string(k) + ")");
        const double* row = logits.row_ptr(i);
        double mx = row[0];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) denom += std::exp(row[j] - mx);
        const double log_denom = std::log(denom);
        double* prow = result.probs.row_ptr(i);
        double* grow = result.grad_logits.row_ptr(i);
        for (std::size_t j = 0; j < k; ++j) {
            prow[j] = std::exp(row[j] - mx) / denom;
            grow[j] = prow[j] / static_cast<double>(batch);
        }
        grow[targets[i]] -= 1.0 / static_cast<double>(batch);
        total += -(row[targets[i]] - mx - log_denom);
    }
    result.loss = total / static_cast<double>(batch);
    return result;
}

CosineLoss cosine_embedding_loss(const Matrix& output, const Matrix& targets) {
    if (!output.same_shape(targets)) throw DimensionError("cosine loss: shape mismatch");
    const std::size_t batch = output.rows;
    const std::size_t d = output.cols;
    CosineLoss result;
    result.grad_output = Matrix(batch, d);
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const double* u = output.row_ptr(i);
        const double* t = targets.row_ptr(i);
        double uu = 0.0, tt = 0.0, ut = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            uu += u[j] * u[j];
            tt += t[j] * t[j];
            ut += u[j] * t[j];
        }
        const double nu = std::sqrt(uu);
        const double nt = std::sqrt(tt);
        if (nu < 1e-300 || nt < 1e-300) throw ValueError("cosine loss: zero vector");
        const double c = ut / (nu * nt);
        total += 1.0 - c;
        double* g = result.grad_output.row_ptr(i);
        for (std::size_t j = 0; j < d; ++j) {
            // d(1-cos)/du = -(t/(|u||t|) - cos * u/|u|^2)
            g[j] = -(t[j] / (nu * nt) - c * u[j] / uu) / static_cast<double>(batch);
        }
    }
    result.loss = total / static_cast<double>(batch);
    return result;
}

} // namespace zs3
