#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lvt/tensor.hpp"

namespace lvt {

/// Tucker factorization: core of extents (r_1..r_m) plus one d_k x r_k
/// factor per mode with orthonormal columns.
struct TuckerFactorization {
    DenseTensor core;
    std::vector<Matrix> factors;

    /// core x_1 U_1 ... x_m U_m, with the original extents (d_1..d_m).
    DenseTensor reconstruct() const;
};

/// Estimate plus the factorization it came from. The estimate equals
/// factorization.reconstruct() up to roundoff; modes fitted at full rank
/// are left untouched, so fitting every mode at full rank returns y
/// bit-identically.
struct EstimatorResult {
    DenseTensor estimate;
    TuckerFactorization factorization;
};

/// Mode ranks, either given explicitly or through the log rule
/// r = ceil(c * ln(d_max)^s) applied to every mode.
class RankRule {
public:
    static RankRule explicit_ranks(std::vector<std::size_t> ranks);
    static RankRule log_rule(double c, std::size_t exponent);

    bool is_log_rule() const { return log_rule_; }
    double log_constant() const { return c_; }
    std::size_t log_exponent() const { return exponent_; }

    struct Resolved {
        std::vector<std::size_t> ranks;
        /// True when any rank had to be clamped into [1, d_k].
        bool clamped = false;
    };

    /// Concrete per-mode ranks for the given extents, clamped into
    /// [1, d_k]. Explicit ranks must match the order.
    Resolved resolve(const std::vector<std::size_t>& dims) const;

private:
    RankRule() = default;
    bool log_rule_ = false;
    std::vector<std::size_t> ranks_;
    double c_ = 0.0;
    std::size_t exponent_ = 1;
};

/// Single-projection spectral estimate: U_k spans the top r_k left singular
/// vectors of unfold_k(Y), estimate = Y x_k (U_k U_k^T) over all modes.
EstimatorResult hosvd(const DenseTensor& y, const std::vector<std::size_t>& ranks);

/// Double-projection spectral estimate. First pass takes U~_k from
/// unfold_k(Y); second pass re-extracts U^_k from the unfolding of
/// Y x_{j != k} U~_j^T, which sees the noise reduced by the other modes'
/// projections; the estimate projects Y onto the refined subspaces. For
/// order 2 this coincides with the rank-r truncated SVD. Order must be >= 2.
EstimatorResult dse(const DenseTensor& y, const std::vector<std::size_t>& ranks);

struct HooiParams {
    std::size_t max_iters = 50;
    /// Relative change in ||core||_F between sweeps below which iteration
    /// stops.
    double tol = 1e-7;
};

struct HooiResult {
    DenseTensor estimate;
    TuckerFactorization factorization;
    /// Sweeps actually performed.
    std::size_t iterations = 0;
    /// True when the core-norm change dropped below tol before max_iters.
    bool converged = false;
    /// ||core||_F at the initialization and after each sweep; non-decreasing
    /// up to roundoff.
    std::vector<double> fit_history;
};

/// Alternating subspace refinement initialized from the hosvd factors. Each
/// sweep updates U_k from unfold_k(Y x_{j != k} U_j^T) in ascending mode
/// order.
HooiResult hooi(const DenseTensor& y, const std::vector<std::size_t>& ranks,
                const HooiParams& params = {});

/// Same refinement from caller-supplied orthonormal init factors (one d_k x
/// r_k matrix per mode).
HooiResult hooi_from(const DenseTensor& y, const std::vector<std::size_t>& ranks,
                     std::vector<Matrix> init_factors, const HooiParams& params = {});

struct ApproxLseResult {
    DenseTensor estimate;
    TuckerFactorization factorization;
    /// ||y - estimate||_F of the winning candidate.
    double residual = 0.0;
    /// Which restart produced the winner; 0 is the hosvd-initialized run.
    std::size_t best_restart = 0;
};

/// Best-of-restarts surrogate for the rank-constrained least-squares
/// problem, which is NP-hard to solve exactly: restart 0 is hooi from the
/// hosvd init, later restarts use seeded random orthonormal inits, and the
/// candidate with the smallest residual wins (ties go to the earlier
/// restart). Ranks come from the rule resolved against y's extents; a clamp
/// is reported on stderr.
ApproxLseResult approx_lse(const DenseTensor& y, const RankRule& rule, std::size_t restarts,
                           std::uint64_t seed, const HooiParams& params = {});

/// One row of the cross-validation score table.
struct CvEntry {
    double c = 0.0;
    /// Resolved ranks; empty when the candidate was skipped.
    std::vector<std::size_t> ranks;
    /// Mean held-out squared error; NaN when skipped.
    double score = 0.0;
    /// "ok", or the reason the candidate was skipped.
    std::string status;
};

struct CvResult {
    double best_c = 0.0;
    std::vector<std::size_t> ranks;
    std::vector<CvEntry> table;
};

/// Entrywise K-fold cross-validation of the log-rule constant. Entry
/// positions are hashed into folds; held-out entries are replaced by the
/// mean of the retained ones, dse runs at each candidate's resolved ranks,
/// and candidates are scored by squared error on the held-out positions.
/// Candidates whose unclamped rank exceeds an extent are skipped with a
/// warning row; if every candidate is skipped the call fails. Ties within
/// 1e-12 go to the smallest c.
CvResult select_rank_cv(const DenseTensor& y, const std::vector<double>& c_grid,
                        std::size_t s_exponent, std::size_t folds, std::uint64_t seed);

}  // namespace lvt
