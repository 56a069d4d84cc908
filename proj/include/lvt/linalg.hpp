#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lvt/rng.hpp"
#include "lvt/tensor.hpp"

namespace lvt::linalg {

/// Thin SVD A = U diag(sigma) V^T with n = min(rows, cols) columns in each
/// factor. Singular values are sorted non-increasing; paired U/V column
/// signs are fixed so the largest-magnitude entry of each left vector is
/// positive, which makes the decomposition reproducible.
struct SvdResult {
    Matrix left;
    std::vector<double> singular_values;
    Matrix right;
};

SvdResult svd_full(const Matrix& a);

/// Top-r left singular vectors as a rows x r column-orthonormal matrix.
/// Requires 1 <= r <= min(rows, cols). Column signs are canonicalized as in
/// svd_full; for repeated singular values any orthonormal basis of the
/// invariant subspace may be returned.
Matrix svd_top_left(const Matrix& a, std::size_t r);

/// Top-r eigenvectors of a symmetric PSD matrix, largest eigenvalue first,
/// sign-canonicalized. This is the workhorse behind the Gram-matrix SVD
/// path; requires 1 <= r <= gram.rows().
Matrix sym_top_eigvecs(const Matrix& gram, std::size_t r);

/// Symmetric Gram matrix unfold(t, mode) * unfold(t, mode)^T, computed
/// directly from the tensor layout without materializing the unfolding
/// (column order does not affect the product).
Matrix unfold_gram(const DenseTensor& t, std::size_t mode);

Matrix matmul(const Matrix& a, const Matrix& b);

/// rows x cols matrix with orthonormal columns drawn from the seeded Haar
/// construction (Gaussian entries, then QR with R-diagonal sign fix).
/// Requires cols <= rows.
Matrix random_orthonormal(std::size_t rows, std::size_t cols, SplitMix64& rng);

}  // namespace lvt::linalg
