#include "lvt/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "lvt/errors.hpp"

namespace lvt::linalg {

namespace {

using EMatrix = Eigen::MatrixXd;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

ConstRowMajorMap map_of(const Matrix& a) {
    return ConstRowMajorMap(a.data(), static_cast<Eigen::Index>(a.rows()),
                            static_cast<Eigen::Index>(a.cols()));
}

Matrix from_eigen(const EMatrix& e) {
    Matrix out(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    for (Eigen::Index i = 0; i < e.rows(); ++i)
        for (Eigen::Index j = 0; j < e.cols(); ++j)
            out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = e(i, j);
    return out;
}

void check_finite(const Matrix& a, const char* what) {
    for (double v : a.values()) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string(what) + ": input contains a non-finite entry");
        }
    }
}

// Flips column signs in-place so the largest-magnitude entry of each column
// of `u` is positive (first such entry on magnitude ties). When `v` is given
// its columns are flipped in lockstep to preserve the product u * vT.
void canonicalize_columns(EMatrix& u, EMatrix* v) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            const double mag = std::abs(u(i, j));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (u(arg, j) < 0.0) {
            u.col(j) = -u.col(j);
            if (v) v->col(j) = -v->col(j);
        }
    }
}

// Eigen-decomposition of a symmetric matrix, validated and sorted so the
// caller can take leading columns as the dominant eigenvectors.
EMatrix sym_eigvecs_descending(const EMatrix& g, const char* what) {
    Eigen::SelfAdjointEigenSolver<EMatrix> eig(g);
    if (eig.info() != Eigen::Success) {
        throw NumericalError(std::string(what) + ": eigen-decomposition failed to converge on a " +
                             std::to_string(g.rows()) + "x" + std::to_string(g.cols()) +
                             " matrix with max |entry| " +
                             std::to_string(g.cwiseAbs().maxCoeff()));
    }
    return eig.eigenvectors().rowwise().reverse();
}

constexpr std::size_t kGramPathLimit = 512;

}  // namespace

SvdResult svd_full(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("svd_full: empty matrix");
    check_finite(a, "svd_full");
    EMatrix dense = map_of(a);
    Eigen::BDCSVD<EMatrix> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        throw NumericalError("svd_full: SVD did not converge on a " + std::to_string(a.rows()) +
                             "x" + std::to_string(a.cols()) + " matrix with max |entry| " +
                             std::to_string(dense.cwiseAbs().maxCoeff()));
    }
    EMatrix u = svd.matrixU();
    EMatrix v = svd.matrixV();
    canonicalize_columns(u, &v);
    SvdResult out;
    out.left = from_eigen(u);
    out.right = from_eigen(v);
    const auto& sv = svd.singularValues();
    out.singular_values.assign(sv.data(), sv.data() + sv.size());
    return out;
}

Matrix sym_top_eigvecs(const Matrix& gram, std::size_t r) {
    if (gram.rows() != gram.cols()) throw std::invalid_argument("sym_top_eigvecs: matrix not square");
    if (r < 1 || r > gram.rows()) throw std::invalid_argument("sym_top_eigvecs: r out of range");
    check_finite(gram, "sym_top_eigvecs");
    EMatrix vecs = sym_eigvecs_descending(map_of(gram), "sym_top_eigvecs");
    EMatrix top = vecs.leftCols(static_cast<Eigen::Index>(r));
    canonicalize_columns(top, nullptr);
    return from_eigen(top);
}

Matrix svd_top_left(const Matrix& a, std::size_t r) {
    const std::size_t n = std::min(a.rows(), a.cols());
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("svd_top_left: empty matrix");
    if (r < 1 || r > n) throw std::invalid_argument("svd_top_left: r must be in [1, min(rows, cols)]");
    check_finite(a, "svd_top_left");
    EMatrix dense = map_of(a);

    if (n <= kGramPathLimit) {
        if (a.rows() <= a.cols()) {
            // Short-fat case: left singular vectors are eigenvectors of A A^T,
            // and the eigenbasis is orthonormal even past the numerical rank.
            EMatrix gram = dense * dense.transpose();
            EMatrix top = sym_eigvecs_descending(gram, "svd_top_left").leftCols(static_cast<Eigen::Index>(r));
            canonicalize_columns(top, nullptr);
            return from_eigen(top);
        }
        // Tall case: take right vectors from A^T A, lift through A, and
        // re-orthonormalize the lifted block with QR. The QR step absorbs the
        // scale loss of near-null directions and supplies a deterministic
        // orthonormal completion when A is rank deficient.
        EMatrix gram = dense.transpose() * dense;
        EMatrix v = sym_eigvecs_descending(gram, "svd_top_left").leftCols(static_cast<Eigen::Index>(r));
        EMatrix lifted = dense * v;
        Eigen::HouseholderQR<EMatrix> qr(lifted);
        EMatrix u = qr.householderQ() *
                    EMatrix::Identity(dense.rows(), static_cast<Eigen::Index>(r));
        canonicalize_columns(u, nullptr);
        return from_eigen(u);
    }

    Eigen::BDCSVD<EMatrix> svd(dense, Eigen::ComputeThinU);
    if (svd.info() != Eigen::Success) {
        throw NumericalError("svd_top_left: SVD did not converge on a " + std::to_string(a.rows()) +
                             "x" + std::to_string(a.cols()) + " matrix");
    }
    EMatrix u = svd.matrixU().leftCols(static_cast<Eigen::Index>(r));
    canonicalize_columns(u, nullptr);
    return from_eigen(u);
}

Matrix unfold_gram(const DenseTensor& t, std::size_t mode) {
    if (mode >= t.order()) throw std::invalid_argument("unfold_gram: mode out of range");
    const std::size_t dk = t.dim(mode);
    std::size_t outer = 1, inner = 1;
    for (std::size_t l = 0; l < mode; ++l) outer *= t.dim(l);
    for (std::size_t l = mode + 1; l < t.order(); ++l) inner *= t.dim(l);
    EMatrix gram = EMatrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
    for (std::size_t o = 0; o < outer; ++o) {
        ConstRowMajorMap block(t.data() + o * dk * inner, static_cast<Eigen::Index>(dk),
                               static_cast<Eigen::Index>(inner));
        gram.noalias() += block * block.transpose();
    }
    return from_eigen(gram);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions disagree");
    EMatrix prod = map_of(a) * map_of(b);
    return from_eigen(prod);
}

Matrix random_orthonormal(std::size_t rows, std::size_t cols, SplitMix64& rng) {
    if (cols < 1 || cols > rows) throw std::invalid_argument("random_orthonormal: need 1 <= cols <= rows");
    EMatrix g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.next_gaussian();
    Eigen::HouseholderQR<EMatrix> qr(g);
    EMatrix q = qr.householderQ() * EMatrix::Identity(static_cast<Eigen::Index>(rows),
                                                      static_cast<Eigen::Index>(cols));
    // Fix the QR sign ambiguity with the R diagonal so the draw depends only
    // on the Gaussian sample, not on Householder implementation details.
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        if (qr.matrixQR()(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return from_eigen(q);
}

}  // namespace lvt::linalg
