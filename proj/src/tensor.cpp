#include "lvt/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lvt {

namespace {

using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

std::size_t checked_product(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) {
        if (d == 0) throw std::invalid_argument("tensor extents must be positive");
        n *= d;
    }
    return n;
}

void check_mode(const DenseTensor& t, std::size_t mode) {
    if (mode >= t.order()) {
        throw std::invalid_argument("mode " + std::to_string(mode) + " out of range for order " +
                                    std::to_string(t.order()) + " tensor");
    }
}

// Fills table[idx] = sum_l i_l * weight_l, where idx runs over the row-major
// enumeration of `extents` (last position fastest). Used to translate the
// outer/inner parts of a flat offset into matricization column offsets.
std::vector<std::size_t> column_offsets(const std::vector<std::size_t>& extents,
                                        const std::vector<std::size_t>& weights) {
    std::size_t n = 1;
    for (std::size_t e : extents) n *= e;
    std::vector<std::size_t> table(n);
    std::vector<std::size_t> idx(extents.size(), 0);
    std::size_t cur = 0;
    for (std::size_t flat = 0; flat < n; ++flat) {
        table[flat] = cur;
        for (std::size_t p = extents.size(); p-- > 0;) {
            ++idx[p];
            cur += weights[p];
            if (idx[p] < extents[p]) break;
            cur -= weights[p] * extents[p];
            idx[p] = 0;
        }
    }
    return table;
}

// Shared geometry for unfold/fold along `mode`: the flat buffer factors as
// (outer, d_mode, inner) with column index col_a[o] + col_b[n].
struct UnfoldPlan {
    std::size_t outer = 1;
    std::size_t inner = 1;
    std::vector<std::size_t> col_a;
    std::vector<std::size_t> col_b;
};

UnfoldPlan make_unfold_plan(const std::vector<std::size_t>& dims, std::size_t mode) {
    const std::size_t m = dims.size();
    // Kolda-Bader column weights: J_l = prod_{p < l, p != mode} d_p.
    std::vector<std::size_t> weight(m, 0);
    std::size_t w = 1;
    for (std::size_t l = 0; l < m; ++l) {
        if (l == mode) continue;
        weight[l] = w;
        w *= dims[l];
    }
    UnfoldPlan plan;
    std::vector<std::size_t> before_ext, before_w, after_ext, after_w;
    for (std::size_t l = 0; l < mode; ++l) {
        plan.outer *= dims[l];
        before_ext.push_back(dims[l]);
        before_w.push_back(weight[l]);
    }
    for (std::size_t l = mode + 1; l < m; ++l) {
        plan.inner *= dims[l];
        after_ext.push_back(dims[l]);
        after_w.push_back(weight[l]);
    }
    plan.col_a = column_offsets(before_ext, before_w);
    plan.col_b = column_offsets(after_ext, after_w);
    return plan;
}

}  // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> dims)
    : dims_(std::move(dims)), values_(checked_product(dims_), 0.0) {}

DenseTensor::DenseTensor(std::vector<std::size_t> dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
    if (values_.size() != checked_product(dims_)) {
        throw std::invalid_argument("value count does not match tensor extents");
    }
}

std::size_t DenseTensor::offset(std::span<const std::size_t> indices) const {
    if (indices.size() != dims_.size()) {
        throw std::invalid_argument("index count does not match tensor order");
    }
    std::size_t flat = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        if (indices[k] >= dims_[k]) throw std::invalid_argument("tensor index out of range");
        flat = flat * dims_[k] + indices[k];
    }
    return flat;
}

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
        throw std::invalid_argument("value count does not match matrix shape");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix eye(n, n);
    for (std::size_t i = 0; i < n; ++i) eye.at(i, i) = 1.0;
    return eye;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
    return out;
}

Matrix unfold(const DenseTensor& t, std::size_t mode) {
    check_mode(t, mode);
    const std::size_t dk = t.dim(mode);
    const UnfoldPlan plan = make_unfold_plan(t.dims(), mode);
    Matrix mat(dk, plan.outer * plan.inner);
    const double* src = t.data();
    double* dst = mat.values().data();
    const std::size_t ncols = mat.cols();
    for (std::size_t o = 0; o < plan.outer; ++o) {
        const std::size_t base = plan.col_a[o];
        for (std::size_t i = 0; i < dk; ++i) {
            const double* row = src + (o * dk + i) * plan.inner;
            double* out = dst + i * ncols + base;
            for (std::size_t n = 0; n < plan.inner; ++n) out[plan.col_b[n]] = row[n];
        }
    }
    return mat;
}

DenseTensor fold(const Matrix& mat, std::size_t mode, const std::vector<std::size_t>& dims) {
    if (mode >= dims.size()) throw std::invalid_argument("fold mode out of range");
    const std::size_t total = checked_product(dims);
    if (mat.rows() != dims[mode] || mat.rows() * mat.cols() != total) {
        throw std::invalid_argument("matrix shape does not match fold extents");
    }
    const std::size_t dk = dims[mode];
    const UnfoldPlan plan = make_unfold_plan(dims, mode);
    DenseTensor t(dims);
    const double* src = mat.data();
    double* dst = t.data();
    const std::size_t ncols = mat.cols();
    for (std::size_t o = 0; o < plan.outer; ++o) {
        const std::size_t base = plan.col_a[o];
        for (std::size_t i = 0; i < dk; ++i) {
            const double* in = src + i * ncols + base;
            double* row = dst + (o * dk + i) * plan.inner;
            for (std::size_t n = 0; n < plan.inner; ++n) row[n] = in[plan.col_b[n]];
        }
    }
    return t;
}

DenseTensor mode_product(const DenseTensor& t, std::size_t mode, const Matrix& u) {
    check_mode(t, mode);
    if (u.cols() != t.dim(mode)) {
        throw std::invalid_argument("factor has " + std::to_string(u.cols()) +
                                    " columns but mode extent is " + std::to_string(t.dim(mode)));
    }
    const std::size_t dk = t.dim(mode);
    const std::size_t r = u.rows();
    std::size_t outer = 1, inner = 1;
    for (std::size_t l = 0; l < mode; ++l) outer *= t.dim(l);
    for (std::size_t l = mode + 1; l < t.order(); ++l) inner *= t.dim(l);

    std::vector<std::size_t> out_dims = t.dims();
    out_dims[mode] = r;
    DenseTensor out(out_dims);

    // Each contiguous (d_k x inner) slab maps to an (r x inner) slab; the
    // product is a plain GEMM on row-major views, no unfold copy needed.
    ConstRowMajorMap umap(u.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(dk));
    for (std::size_t o = 0; o < outer; ++o) {
        ConstRowMajorMap block(t.data() + o * dk * inner, static_cast<Eigen::Index>(dk),
                               static_cast<Eigen::Index>(inner));
        RowMajorMap res(out.data() + o * r * inner, static_cast<Eigen::Index>(r),
                        static_cast<Eigen::Index>(inner));
        res.noalias() = umap * block;
    }
    return out;
}

DenseTensor multilinear_multiply(const DenseTensor& t, const std::vector<ModeFactor>& factors) {
    std::vector<bool> seen(t.order(), false);
    for (const ModeFactor& f : factors) {
        check_mode(t, f.mode);
        if (seen[f.mode]) throw std::invalid_argument("duplicate factor for one mode");
        seen[f.mode] = true;
        if (f.matrix.cols() != t.dim(f.mode)) {
            throw std::invalid_argument("factor columns do not match mode extent");
        }
    }
    // Greedy smallest-next-tensor order: apply the factor with the smallest
    // rows/extent ratio first. Ratios are compared by cross multiplication
    // and ties fall back to the lower mode so the order is deterministic.
    std::vector<std::size_t> order(factors.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const std::size_t lhs = factors[a].matrix.rows() * t.dim(factors[b].mode);
        const std::size_t rhs = factors[b].matrix.rows() * t.dim(factors[a].mode);
        if (lhs != rhs) return lhs < rhs;
        return factors[a].mode < factors[b].mode;
    });
    DenseTensor cur = t;
    for (std::size_t id : order) {
        cur = mode_product(cur, factors[id].mode, factors[id].matrix);
    }
    return cur;
}

double frobenius_norm(const DenseTensor& t) {
    double scale = 0.0, sumsq = 1.0;
    // Two-pass-free scaled accumulation, same guard as BLAS nrm2.
    for (double v : t.values()) {
        if (v == 0.0) continue;
        const double a = std::abs(v);
        if (scale < a) {
            sumsq = 1.0 + sumsq * (scale / a) * (scale / a);
            scale = a;
        } else {
            sumsq += (a / scale) * (a / scale);
        }
    }
    return scale * std::sqrt(sumsq);
}

double infinity_norm(const DenseTensor& t) {
    double m = 0.0;
    for (double v : t.values()) m = std::max(m, std::abs(v));
    return m;
}

double frobenius_distance(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims() != b.dims()) throw std::invalid_argument("shape mismatch in frobenius_distance");
    double sumsq = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = pa[i] - pb[i];
        sumsq += d * d;
    }
    return std::sqrt(sumsq);
}

double mse(const DenseTensor& a, const DenseTensor& b) {
    const double dist = frobenius_distance(a, b);
    return dist * dist / static_cast<double>(a.size());
}

}  // namespace lvt
