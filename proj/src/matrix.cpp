#include "ac/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "ac/errors.hpp"

namespace ac::linalg {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionMismatchError("matrix data length does not match rows*cols");
    }
    if (!all_finite()) {
        throw DimensionMismatchError("matrix data contains non-finite entries");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatchError("dot product of vectors with different lengths");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionMismatchError("matmul inner dimensions disagree");
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionMismatchError("matmul_bt column dimensions disagree");
    }
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = dot(a.row(i), b.row(j));
    return c;
}

Matrix normalize_rows(const Matrix& m) {
    Matrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double n = norm(m.row(i));
        if (n <= kZeroRowThreshold) throw ZeroRowError(i);
        auto r = out.row(i);
        for (double& x : r) x /= n;
    }
    return out;
}

std::vector<double> normalization_jvp(std::span<const double> z_raw, std::span<const double> g) {
    if (z_raw.size() != g.size()) {
        throw DimensionMismatchError("normalization_jvp vector lengths disagree");
    }
    const double n = norm(z_raw);
    if (n <= kZeroRowThreshold) throw ZeroRowError(0);
    const double proj = dot(z_raw, g) / (n * n);  // (u . g)/|z| expressed on raw z
    std::vector<double> out(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) out[j] = (g[j] - proj * z_raw[j]) / n;
    return out;
}

Matrix orthonormalize(const Matrix& m) {
    if (m.rows() > m.cols()) {
        throw DimensionMismatchError("orthonormalize requires rows <= cols");
    }
    Matrix q = m;
    for (std::size_t i = 0; i < q.rows(); ++i) {
        auto qi = q.row(i);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t j = 0; j < i; ++j) {
                const auto qj = q.row(j);
                const double c = dot(qi, qj);
                for (std::size_t t = 0; t < qi.size(); ++t) qi[t] -= c * qj[t];
            }
        }
        const double piv = norm(qi);
        if (piv <= kPivotThreshold) throw RankDeficientError(i);
        for (double& x : qi) x /= piv;
    }
    return q;
}

namespace {

// One-sided Jacobi on the columns of w (cols <= rows assumed by caller).
std::vector<double> jacobi_column_svd(Matrix w) {
    const std::size_t n = w.rows();
    const std::size_t m = w.cols();
    constexpr int kMaxSweeps = 60;
    constexpr double kConvergence = 1e-14;

    auto col_dot = [&](std::size_t p, std::size_t q) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += w(i, p) * w(i, q);
        return s;
    };

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                const double alpha = col_dot(p, p);
                const double beta = col_dot(q, q);
                const double gamma = col_dot(p, q);
                const double scale = std::sqrt(alpha * beta);
                if (scale <= 0.0 || std::abs(gamma) <= kConvergence * scale) continue;
                off = std::max(off, std::abs(gamma) / scale);
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wp = w(i, p);
                    const double wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
            }
        }
        if (off <= kConvergence) break;
    }

    std::vector<double> sv(m);
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += w(i, j) * w(i, j);
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

}  // namespace

std::vector<double> singular_values(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) {
        throw DimensionMismatchError("singular_values of an empty matrix");
    }
    if (m.cols() > m.rows()) return jacobi_column_svd(transpose(m));
    return jacobi_column_svd(m);
}

}  // namespace ac::linalg
