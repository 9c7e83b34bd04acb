#pragma once

#include <cstddef>
#include <vector>

namespace zs3 {

class RngStream;

/// Dense row-major matrix of 64-bit reals.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row_ptr(std::size_t r) { return data.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }

    void fill(double v) { data.assign(data.size(), v); }

    static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c, 0.0); }
    static Matrix identity(std::size_t n);
    /// Entries i.i.d. N(0, stddev^2).
    static Matrix randn(std::size_t r, std::size_t c, RngStream& rng, double stddev = 1.0);
};

/// a * b. Throws DimensionError on shape mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

void add_inplace(Matrix& a, const Matrix& b);
void sub_inplace(Matrix& a, const Matrix& b);
void scale_inplace(Matrix& a, double s);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);

/// Elementwise product.
Matrix hadamard(const Matrix& a, const Matrix& b);

double squared_distance(const double* a, const double* b, std::size_t n);

/// Throws NumericError if any entry is NaN or infinite.
void check_finite(const Matrix& m, const char* tag);
bool all_finite(const Matrix& m);

} // namespace zs3
