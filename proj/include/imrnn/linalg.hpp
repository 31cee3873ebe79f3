#pragma once

// Dense 64-bit kernels backing projection, modulation, scoring and the
// pseudoinverse used for back-projection. Everything here is a pure function.

#include <cstddef>
#include <span>
#include <vector>

namespace imrnn {

using Vector = std::vector<double>;

/// Row-major dense matrix.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const {
        return {values_.data() + r * cols_, cols_};
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool operator==(const Matrix&) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

Vector matvec(const Matrix& m, std::span<const double> v);

/// mᵀ·v without materializing the transpose.
Vector matvec_transposed(const Matrix& m, std::span<const double> v);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

/// g += scale · a·bᵀ (rank-one update, used for weight gradients).
void add_outer(Matrix& g, std::span<const double> a, std::span<const double> b,
               double scale = 1.0);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

/// Cosine similarity clamped to [-1, 1]. Throws ZeroNormError on a zero input.
double cosine(std::span<const double> a, std::span<const double> b);

inline constexpr double kDefaultLayerNormEps = 1e-5;

/// (v - mean) / sqrt(popvar + eps); no affine parameters. Requires v.size() >= 2.
Vector layer_norm(std::span<const double> v, double eps = kDefaultLayerNormEps);

/// Relative pivot threshold used by invert() and pseudoinverse().
inline constexpr double kPivotThreshold = 1e-10;

/// Gauss-Jordan inverse with partial pivoting. A pivot smaller than
/// kPivotThreshold times the largest diagonal magnitude raises
/// SingularMatrixError carrying the pivot index.
Matrix invert(const Matrix& a);

/// Moore-Penrose pseudoinverse of a full-row-rank m×n matrix (m <= n),
/// computed as Pᵀ(PPᵀ)⁻¹.
Matrix pseudoinverse(const Matrix& p);

bool all_finite(std::span<const double> v) noexcept;

}  // namespace imrnn
