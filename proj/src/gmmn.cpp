#include "zs3/gmmn.hpp"

#include "zs3/errors.hpp"
#include "zs3/optim.hpp"
#include "zs3/rng.hpp"
#include "zs3/serialize.hpp"

#include <cmath>
#include <cstring>

namespace zs3 {

KernelBank::KernelBank(std::vector<double> sigmas) : bandwidths(std::move(sigmas)) {
    if (bandwidths.empty()) throw ConfigError("kernel bank must not be empty");
    for (double s : bandwidths)
        if (!(s > 0.0)) throw ConfigError("kernel bandwidths must be strictly positive");
}

KernelBank KernelBank::scaled(double factor) const {
    if (!(factor > 0.0)) throw ConfigError("kernel bank scale must be positive");
    std::vector<double> out = bandwidths;
    for (double& s : out) s *= factor;
    return KernelBank(out);
}

double gaussian_kernel(const double* x, const double* y, std::size_t dim, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("gaussian kernel bandwidth must be positive");
    return std::exp(-squared_distance(x, y, dim) / (2.0 * sigma * sigma));
}

double gaussian_kernel(const std::vector<double>& x, const std::vector<double>& y, double sigma) {
    if (x.size() != y.size()) throw DimensionError("gaussian kernel: dimension mismatch");
    return gaussian_kernel(x.data(), y.data(), x.size(), sigma);
}

MmdResult mmd_loss(const Matrix& real, const Matrix& generated, const KernelBank& bank) {
    if (real.rows == 0 || generated.rows == 0) throw ValueError("mmd_loss: empty sample set");
    if (real.cols != generated.cols) throw DimensionError("mmd_loss: feature dimensions differ");
    const std::size_t m = real.rows;
    const std::size_t n = generated.rows;
    const std::size_t d = real.cols;

    std::vector<double> inv_two_sq(bank.bandwidths.size());
    std::vector<double> inv_sq(bank.bandwidths.size());
    for (std::size_t b = 0; b < bank.bandwidths.size(); ++b) {
        const double s2 = bank.bandwidths[b] * bank.bandwidths[b];
        inv_two_sq[b] = 1.0 / (2.0 * s2);
        inv_sq[b] = 1.0 / s2;
    }

    MmdResult result;
    result.grad_generated = Matrix::zeros(n, d);
    double value = 0.0;

    // real-real term: loss only
    for (std::size_t i = 0; i < m; ++i) {
        const double* xi = real.row_ptr(i);
        for (std::size_t j = 0; j < m; ++j) {
            const double d2 = squared_distance(xi, real.row_ptr(j), d);
            for (std::size_t b = 0; b < bank.bandwidths.size(); ++b)
                value += std::exp(-d2 * inv_two_sq[b]) / static_cast<double>(m * m);
        }
    }
    // generated-generated term
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    for (std::size_t p = 0; p < n; ++p) {
        const double* yp = generated.row_ptr(p);
        double* gp = result.grad_generated.row_ptr(p);
        for (std::size_t j = 0; j < n; ++j) {
            const double* yj = generated.row_ptr(j);
            const double d2 = squared_distance(yp, yj, d);
            double coeff = 0.0;
            for (std::size_t b = 0; b < bank.bandwidths.size(); ++b) {
                const double k = std::exp(-d2 * inv_two_sq[b]);
                value += k / nn;
                coeff += k * inv_sq[b];
            }
            // d/dy_p of (1/n^2) k(y_p, y_j), both orderings of the pair
            const double w = 2.0 * coeff / nn;
            for (std::size_t c = 0; c < d; ++c) gp[c] += w * (yj[c] - yp[c]);
        }
    }
    // cross term
    const double mn = static_cast<double>(m) * static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* xi = real.row_ptr(i);
        for (std::size_t p = 0; p < n; ++p) {
            const double* yp = generated.row_ptr(p);
            const double d2 = squared_distance(xi, yp, d);
            double coeff = 0.0;
            for (std::size_t b = 0; b < bank.bandwidths.size(); ++b) {
                const double k = std::exp(-d2 * inv_two_sq[b]);
                value -= 2.0 * k / mn;
                coeff += k * inv_sq[b];
            }
            double* gp = result.grad_generated.row_ptr(p);
            const double w = 2.0 * coeff / mn;
            for (std::size_t c = 0; c < d; ++c) gp[c] -= w * (xi[c] - yp[c]);
        }
    }
    result.value = value;
    return result;
}

GmmnMlp::GmmnMlp(std::size_t d_a, std::size_t hidden, std::size_t d_x, double leaky_slope,
                 double dropout_rate, RngStream& init_rng)
    : d_a_(d_a),
      hidden_(hidden),
      d_x_(d_x),
      fc1_(2 * d_a, hidden, init_rng, "gmmn.fc1", 1.0 / std::sqrt(static_cast<double>(2 * d_a))),
      activation_(leaky_slope),
      dropout_(dropout_rate),
      fc2_(hidden, d_x, init_rng, "gmmn.fc2", 1.0 / std::sqrt(static_cast<double>(hidden))) {}

Matrix GmmnMlp::forward(const Matrix& a, const Matrix& z, RngStream& rng, bool training) {
    if (a.rows != z.rows) throw DimensionError("generator forward: a and z row counts differ");
    if (a.cols != d_a_ || z.cols != d_a_)
        throw DimensionError("generator forward: expected a and z of width " + std::to_string(d_a_));
    Matrix input(a.rows, 2 * d_a_);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* row = input.row_ptr(i);
        std::memcpy(row, a.row_ptr(i), d_a_ * sizeof(double));
        std::memcpy(row + d_a_, z.row_ptr(i), d_a_ * sizeof(double));
    }
    Matrix h = fc1_.forward(input);
    h = activation_.forward(h);
    h = dropout_.forward(h, rng, training);
    Matrix out = fc2_.forward(h);
    check_finite(out, "generator output");
    return out;
}

void GmmnMlp::backward(const Matrix& grad_out) {
    Matrix g = fc2_.backward(grad_out);
    g = dropout_.backward(g);
    g = activation_.backward(g);
    fc1_.backward(g);
}

void GmmnMlp::zero_grad() {
    for (Parameter* p : parameters()) p->zero_grad();
}

std::vector<Parameter*> GmmnMlp::parameters() {
    return {&fc1_.weight, &fc1_.bias, &fc2_.weight, &fc2_.bias};
}

ClassFeaturePools collect_class_features(const Dataset& dataset, std::size_t n_classes) {
    std::vector<std::size_t> counts(n_classes, 0);
    for (const Scene& s : dataset.scenes)
        for (std::uint16_t l : s.labels.labels) {
            if (l >= n_classes) throw DataError("label " + std::to_string(l) + " outside catalog");
            counts[l]++;
        }
    ClassFeaturePools pools(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c)
        if (counts[c] > 0) pools[c] = Matrix(counts[c], dataset.d_x);
    std::vector<std::size_t> fill(n_classes, 0);
    for (const Scene& s : dataset.scenes) {
        const std::size_t d = s.features.depth;
        for (std::size_t p = 0; p < s.labels.pixels(); ++p) {
            const std::uint16_t l = s.labels.labels[p];
            double* dst = pools[l].row_ptr(fill[l]++);
            const float* src = s.features.values.data() + p * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] = static_cast<double>(src[j]);
        }
    }
    return pools;
}

namespace {

Matrix sample_rows(const Matrix& pool, std::size_t count, RngStream& rng) {
    Matrix out(count, pool.cols);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t idx = rng.uniform_int(pool.rows);
        std::memcpy(out.row_ptr(i), pool.row_ptr(idx), pool.cols * sizeof(double));
    }
    return out;
}

Matrix repeat_row(const Matrix& row, std::size_t count) {
    Matrix out(count, row.cols);
    for (std::size_t i = 0; i < count; ++i)
        std::memcpy(out.row_ptr(i), row.row_ptr(0), row.cols * sizeof(double));
    return out;
}

} // namespace

TrainTrace train_generator(GmmnMlp& gen, const ClassFeaturePools& pools, const ClassCatalog& catalog,
                           const ClassEmbeddingTable& embeddings, const KernelBank& bank,
                           const GmmnConfig& config, RngStream& rng) {
    if (pools.size() != catalog.size()) throw ConfigError("train_generator: pool count != catalog size");
    const std::vector<std::size_t> seen = catalog.seen_ids();
    if (seen.empty()) throw ConfigError("train_generator: no seen classes");
    for (std::size_t c = 0; c < pools.size(); ++c) {
        if (!catalog.seen[c] && pools[c].rows > 0)
            throw DataError("train_generator: unseen class '" + catalog.names[c] + "' has supervision pixels");
        if (catalog.seen[c] && pools[c].rows == 0)
            throw ConfigError("train_generator: seen class '" + catalog.names[c] + "' has zero pixels");
    }

    OptimizerState opt = OptimizerState::adam();
    std::vector<Parameter*> params = gen.parameters();
    TrainTrace trace;
    trace.losses.reserve(config.iterations);
    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        const std::size_t cls = seen[iter % seen.size()];
        Matrix real = sample_rows(pools[cls], config.batch_real, rng);
        Matrix a = repeat_row(embeddings.embedding_of(cls), config.batch_synthetic);
        Matrix z = Matrix::randn(config.batch_synthetic, gen.d_z(), rng);
        Matrix generated = gen.forward(a, z, rng, /*training=*/true);
        MmdResult mmd = mmd_loss(real, generated, bank);
        gen.zero_grad();
        gen.backward(mmd.grad_generated);
        optimizer_step(params, opt, config.learning_rate);
        trace.losses.push_back(mmd.value);
    }
    return trace;
}

Matrix sample_synthetic(GmmnMlp& gen, std::size_t class_id, std::size_t n,
                        const ClassEmbeddingTable& embeddings, RngStream& rng) {
    if (n == 0) throw ValueError("sample_synthetic: need n >= 1");
    Matrix a = repeat_row(embeddings.embedding_of(class_id), n);
    Matrix z = Matrix::randn(n, gen.d_z(), rng);
    return gen.forward(a, z, rng, /*training=*/false);
}

void save_generator(GmmnMlp& gen, const std::string& path) {
    ByteWriter w;
    w.magic("ZS3G");
    w.u16(1); // version
    w.u8(0);  // kind: mlp
    w.u16(static_cast<std::uint16_t>(gen.d_a()));
    w.u16(static_cast<std::uint16_t>(gen.hidden()));
    w.u16(static_cast<std::uint16_t>(gen.d_x()));
    w.f64(gen.leaky_slope());
    w.f64(gen.dropout_rate());
    for (Parameter* p : gen.parameters()) w.matrix(p->value);
    w.to_file(path);
}

GmmnMlp load_generator(const std::string& path) {
    ByteReader r(path);
    r.expect_magic("ZS3G");
    const std::uint16_t version = r.u16();
    if (version != 1) throw FormatError("unsupported generator checkpoint version");
    const std::uint8_t kind = r.u8();
    if (kind != 0) throw FormatError("checkpoint holds a graph generator, not an MLP");
    const std::size_t d_a = r.u16();
    const std::size_t hidden = r.u16();
    const std::size_t d_x = r.u16();
    const double slope = r.f64();
    const double dropout = r.f64();
    RngStream dummy(0);
    GmmnMlp gen(d_a, hidden, d_x, slope, dropout, dummy);
    for (Parameter* p : gen.parameters()) r.matrix_into(p->value);
    r.expect_end();
    return gen;
}

} // namespace zs3
