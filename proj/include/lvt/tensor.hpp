#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lvt {

/// Dense order-m tensor of doubles.
///
/// Storage is row-major: the last index varies fastest, so the flat offset
/// of (i_1, ..., i_m) is sum_k i_k * prod_{j>k} d_j. Indices are 0-based.
/// Tensors are filled during construction and treated as immutable
/// afterwards; concurrent reads are safe.
class DenseTensor {
public:
    DenseTensor() = default;

    /// Zero-filled tensor with the given extents.
    explicit DenseTensor(std::vector<std::size_t> dims);

    /// Adopts `values`, which must have length prod(dims).
    DenseTensor(std::vector<std::size_t> dims, std::vector<double> values);

    std::size_t order() const { return dims_.size(); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t dim(std::size_t mode) const { return dims_[mode]; }

    /// Total number of entries (d_*).
    std::size_t size() const { return values_.size(); }

    double operator[](std::size_t flat) const { return values_[flat]; }
    double& operator[](std::size_t flat) { return values_[flat]; }

    std::size_t offset(std::span<const std::size_t> indices) const;
    double at(std::span<const std::size_t> indices) const { return values_[offset(indices)]; }
    double& at(std::span<const std::size_t> indices) { return values_[offset(indices)]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    const double* data() const { return values_.data(); }
    double* data() { return values_.data(); }

private:
    std::vector<std::size_t> dims_;
    std::vector<double> values_;
};

/// Row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double at(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
    double& at(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    const double* data() const { return values_.data(); }
    double* data() { return values_.data(); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

Matrix transpose(const Matrix& a);

/// One factor of a multilinear product: `matrix` applied along `mode`.
struct ModeFactor {
    std::size_t mode;
    const Matrix& matrix;
};

/// Mode-k matricization, 0-based mode.
///
/// Result has d_k rows and d_*/d_k columns. Columns follow the Kolda-Bader
/// convention: among the remaining modes the lowest-numbered one varies
/// fastest, i.e. column index = sum_{l != k} i_l * prod_{m < l, m != k} d_m.
/// With this ordering unfold(C x_1 U_1 ... x_m U_m, k) equals
/// U_k * unfold(C, k) * (U_m kron ... kron U_{k+1} kron U_{k-1} kron ... U_1)^T.
Matrix unfold(const DenseTensor& t, std::size_t mode);

/// Inverse of unfold: fold(unfold(t, k), k, t.dims()) == t exactly.
DenseTensor fold(const Matrix& mat, std::size_t mode, const std::vector<std::size_t>& dims);

/// Tensor-times-matrix along one mode: result extent at `mode` is u.rows().
DenseTensor mode_product(const DenseTensor& t, std::size_t mode, const Matrix& u);

/// Applies each factor along its mode (at most one per mode). Factors are
/// applied in order of increasing intermediate size, which keeps peak
/// memory at the smallest reachable footprint; the result is order
/// independent.
DenseTensor multilinear_multiply(const DenseTensor& t, const std::vector<ModeFactor>& factors);

double frobenius_norm(const DenseTensor& t);
double infinity_norm(const DenseTensor& t);

/// ||a - b||_F without materializing the difference.
double frobenius_distance(const DenseTensor& a, const DenseTensor& b);

/// ||a - b||_F^2 / d_*; shapes must match.
double mse(const DenseTensor& a, const DenseTensor& b);

}  // namespace lvt
