#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ac::linalg {

// Fixed numeric thresholds; deliberately constants, not configuration.
inline constexpr double kZeroRowThreshold = 1e-12;
inline constexpr double kPivotThreshold = 1e-10;

// Dense row-major matrix of doubles. Small sizes only (a few hundred rows);
// everything downstream builds on this.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const;

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);

// a * b^T without forming the transpose; the workhorse for affinity matrices.
Matrix matmul_bt(const Matrix& a, const Matrix& b);

// Scale every row to unit Euclidean norm. Throws ZeroRowError when a row
// norm is at or below kZeroRowThreshold.
Matrix normalize_rows(const Matrix& m);

// Action of the Jacobian of z -> z/|z| on an upstream gradient g:
// (1/|z|) (I - zz^T / z^T z) g. Components of g parallel to z are
// annihilated, which is the property the zero-gradient checks rely on.
std::vector<double> normalization_jvp(std::span<const double> z_raw, std::span<const double> g);

// Modified Gram-Schmidt with a second re-orthogonalization pass. Requires
// rows <= cols and linearly independent rows (pivot norm > kPivotThreshold).
Matrix orthonormalize(const Matrix& m);

// Singular values, descending, length min(rows, cols). One-sided Jacobi;
// plenty accurate for the tiny matrices used here.
std::vector<double> singular_values(const Matrix& m);

}  // namespace ac::linalg
