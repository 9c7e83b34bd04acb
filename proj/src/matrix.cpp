#include "zs3/matrix.hpp"

#include "zs3/errors.hpp"
#include "zs3/rng.hpp"

#include <cmath>
#include <string>

namespace zs3 {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::randn(std::size_t r, std::size_t c, RngStream& rng, double stddev) {
    Matrix m(r, c);
    for (double& v : m.data) v = stddev * rng.gaussian();
    return m;
}

namespace {
void require(bool ok, const std::string& msg) {
    if (!ok) throw DimensionError(msg);
}
} // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols == b.rows, "matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                                  " * " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    Matrix out(a.rows, b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    require(a.rows == b.rows, "matmul_tn: row counts differ");
    Matrix out(a.cols, b.cols, 0.0);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.row_ptr(k);
        const double* brow = b.row_ptr(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* orow = out.row_ptr(i);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    require(a.cols == b.cols, "matmul_nt: column counts differ");
    Matrix out(a.rows, b.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            orow[j] = acc;
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

void add_inplace(Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "add: shape mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += b.data[i];
}

void sub_inplace(Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "sub: shape mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a.data[i] -= b.data[i];
}

void scale_inplace(Matrix& a, double s) {
    for (double& v : a.data) v *= s;
}

Matrix add(const Matrix& a, const Matrix& b) {
    Matrix out = a;
    add_inplace(out, b);
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    Matrix out = a;
    sub_inplace(out, b);
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "hadamard: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

bool all_finite(const Matrix& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

void check_finite(const Matrix& m, const char* tag) {
    if (!all_finite(m)) throw NumericError(std::string(tag) + ": non-finite entry");
}

} // namespace zs3
