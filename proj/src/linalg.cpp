#include "imrnn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "imrnn/error.hpp"

namespace imrnn {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw DimensionError("Matrix values", rows * cols, values_.size());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector matvec(const Matrix& m, std::span<const double> v) {
    if (v.size() != m.cols()) throw DimensionError("matvec", m.cols(), v.size());
    Vector out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto row = m.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * v[j];
        out[i] = acc;
    }
    return out;
}

Vector matvec_transposed(const Matrix& m, std::span<const double> v) {
    if (v.size() != m.rows()) throw DimensionError("matvec_transposed", m.rows(), v.size());
    Vector out(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        const auto row = m.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j] * vi;
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("matmul", a.cols(), b.rows());
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out_row = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const auto b_row = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
    return out;
}

void add_outer(Matrix& g, std::span<const double> a, std::span<const double> b, double scale) {
    if (a.size() != g.rows()) throw DimensionError("add_outer rows", g.rows(), a.size());
    if (b.size() != g.cols()) throw DimensionError("add_outer cols", g.cols(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = scale * a[i];
        if (ai == 0.0) continue;
        auto row = g.row(i);
        for (std::size_t j = 0; j < b.size(); ++j) row[j] += ai * b[j];
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("dot", a.size(), b.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("cosine", a.size(), b.size());
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na == 0.0 || nb == 0.0) throw ZeroNormError("cosine of a zero-norm vector");
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

Vector layer_norm(std::span<const double> v, double eps) {
    if (v.size() < 2) throw DimensionError("layer_norm needs at least", 2, v.size());
    const auto k = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= k;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= k;
    const double sigma = std::sqrt(var + eps);
    Vector out(v.size(), 0.0);
    // constant input with eps == 0 stays all-zero instead of 0/0
    if (sigma == 0.0) return out;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / sigma;
    return out;
}

Matrix invert(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("invert requires square", a.rows(), a.cols());
    const std::size_t n = a.rows();
    Matrix work = a;
    Matrix inv = Matrix::identity(n);

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
    const double threshold = kPivotThreshold * scale;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
        if (!(std::abs(work(pivot, col)) > threshold)) throw SingularMatrixError(col);
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(work(col, j), work(pivot, j));
                std::swap(inv(col, j), inv(pivot, j));
            }
        }
        const double inv_pivot = 1.0 / work(col, col);
        for (std::size_t j = 0; j < n; ++j) {
            work(col, j) *= inv_pivot;
            inv(col, j) *= inv_pivot;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = work(r, col);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                work(r, j) -= f * work(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

Matrix pseudoinverse(const Matrix& p) {
    if (p.rows() > p.cols()) {
        throw DimensionError("pseudoinverse requires rows <= cols; cols", p.rows(), p.cols());
    }
    const std::size_t m = p.rows();
    Matrix gram(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            const double g = dot(p.row(i), p.row(j));
            gram(i, j) = g;
            gram(j, i) = g;
        }
    }
    return matmul(transpose(p), invert(gram));
}

bool all_finite(std::span<const double> v) noexcept {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace imrnn
