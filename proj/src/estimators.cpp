#include "lvt/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "lvt/linalg.hpp"
#include "lvt/rng.hpp"

namespace lvt {

namespace {

void check_ranks(const DenseTensor& y, const std::vector<std::size_t>& ranks) {
    if (ranks.size() != y.order()) {
        throw std::invalid_argument("expected one rank per mode, got " +
                                    std::to_string(ranks.size()) + " for order " +
                                    std::to_string(y.order()));
    }
    for (std::size_t k = 0; k < ranks.size(); ++k) {
        if (ranks[k] < 1 || ranks[k] > y.dim(k)) {
            throw std::invalid_argument("rank " + std::to_string(ranks[k]) + " at mode " +
                                        std::to_string(k + 1) + " is outside [1, " +
                                        std::to_string(y.dim(k)) + "]");
        }
    }
}

// Top-r_k left singular vectors of unfold_k(t) through the Gram matrix; the
// Gram is d_k x d_k, so this never materializes the wide unfolding.
Matrix mode_subspace(const DenseTensor& t, std::size_t mode, std::size_t rank) {
    return linalg::sym_top_eigvecs(linalg::unfold_gram(t, mode), rank);
}

std::vector<Matrix> first_pass_factors(const DenseTensor& y, const std::vector<std::size_t>& ranks) {
    std::vector<Matrix> factors;
    factors.reserve(y.order());
    for (std::size_t k = 0; k < y.order(); ++k) factors.push_back(mode_subspace(y, k, ranks[k]));
    return factors;
}

// Y x_{j != skip} U_j^T. Passing skip >= order projects every mode, which
// yields the core tensor.
DenseTensor project_except(const DenseTensor& y, const std::vector<Matrix>& factors,
                           std::size_t skip) {
    std::vector<Matrix> transposed;
    transposed.reserve(factors.size());
    for (std::size_t k = 0; k < factors.size(); ++k) {
        transposed.push_back(k == skip ? Matrix() : transpose(factors[k]));
    }
    std::vector<ModeFactor> applied;
    applied.reserve(factors.size());
    for (std::size_t k = 0; k < factors.size(); ++k) {
        if (k != skip) applied.push_back({k, transposed[k]});
    }
    return multilinear_multiply(y, applied);
}

// Builds core and estimate from fixed factors. Modes fitted at full rank
// have an identity projector, so the estimate leaves them untouched; with
// no truncating mode at all the estimate is bit-identical to y.
EstimatorResult assemble(const DenseTensor& y, std::vector<Matrix> factors) {
    const std::size_t m = factors.size();
    std::vector<Matrix> transposed(m);
    std::vector<bool> truncating(m);
    for (std::size_t k = 0; k < m; ++k) {
        truncating[k] = factors[k].cols() < y.dim(k);
        transposed[k] = transpose(factors[k]);
    }
    std::vector<ModeFactor> down, rest, up;
    for (std::size_t k = 0; k < m; ++k) {
        if (truncating[k]) {
            down.push_back({k, transposed[k]});
            up.push_back({k, factors[k]});
        } else {
            rest.push_back({k, transposed[k]});
        }
    }
    const DenseTensor partial = multilinear_multiply(y, down);
    TuckerFactorization fac;
    fac.core = multilinear_multiply(partial, rest);
    fac.factors = std::move(factors);
    EstimatorResult out;
    out.estimate = multilinear_multiply(partial, up);
    out.factorization = std::move(fac);
    return out;
}

void check_init_factors(const DenseTensor& y, const std::vector<std::size_t>& ranks,
                        const std::vector<Matrix>& init) {
    if (init.size() != y.order()) {
        throw std::invalid_argument("expected one init factor per mode");
    }
    for (std::size_t k = 0; k < init.size(); ++k) {
        if (init[k].rows() != y.dim(k) || init[k].cols() != ranks[k]) {
            throw std::invalid_argument("init factor at mode " + std::to_string(k + 1) +
                                        " must be " + std::to_string(y.dim(k)) + "x" +
                                        std::to_string(ranks[k]));
        }
    }
}

}  // namespace

DenseTensor TuckerFactorization::reconstruct() const {
    std::vector<ModeFactor> applied;
    applied.reserve(factors.size());
    for (std::size_t k = 0; k < factors.size(); ++k) applied.push_back({k, factors[k]});
    return multilinear_multiply(core, applied);
}

RankRule RankRule::explicit_ranks(std::vector<std::size_t> ranks) {
    if (ranks.empty()) throw std::invalid_argument("explicit rank list must be nonempty");
    RankRule rule;
    rule.ranks_ = std::move(ranks);
    return rule;
}

RankRule RankRule::log_rule(double c, std::size_t exponent) {
    if (!(c > 0.0)) throw std::invalid_argument("log-rule constant must be positive");
    if (exponent < 1) throw std::invalid_argument("log-rule exponent must be at least 1");
    RankRule rule;
    rule.log_rule_ = true;
    rule.c_ = c;
    rule.exponent_ = exponent;
    return rule;
}

RankRule::Resolved RankRule::resolve(const std::vector<std::size_t>& dims) const {
    if (dims.empty()) throw std::invalid_argument("tensor order must be at least 1");
    Resolved out;
    out.ranks.resize(dims.size());
    if (log_rule_) {
        const double d_max = static_cast<double>(*std::max_element(dims.begin(), dims.end()));
        const double raw = c_ * std::pow(std::log(d_max), static_cast<double>(exponent_));
        const double r = std::ceil(raw);
        for (std::size_t k = 0; k < dims.size(); ++k) {
            double clamped = std::clamp(r, 1.0, static_cast<double>(dims[k]));
            out.clamped = out.clamped || clamped != r;
            out.ranks[k] = static_cast<std::size_t>(clamped);
        }
        return out;
    }
    if (ranks_.size() != dims.size()) {
        throw std::invalid_argument("explicit rank list has " + std::to_string(ranks_.size()) +
                                    " entries for an order-" + std::to_string(dims.size()) +
                                    " tensor");
    }
    for (std::size_t k = 0; k < dims.size(); ++k) {
        const std::size_t r = std::clamp<std::size_t>(ranks_[k], 1, dims[k]);
        out.clamped = out.clamped || r != ranks_[k];
        out.ranks[k] = r;
    }
    return out;
}

EstimatorResult hosvd(const DenseTensor& y, const std::vector<std::size_t>& ranks) {
    check_ranks(y, ranks);
    return assemble(y, first_pass_factors(y, ranks));
}

EstimatorResult dse(const DenseTensor& y, const std::vector<std::size_t>& ranks) {
    if (y.order() < 2) throw std::invalid_argument("double projection needs order >= 2");
    check_ranks(y, ranks);
    const std::vector<Matrix> first = first_pass_factors(y, ranks);
    std::vector<Matrix> refined;
    refined.reserve(y.order());
    for (std::size_t k = 0; k < y.order(); ++k) {
        refined.push_back(mode_subspace(project_except(y, first, k), k, ranks[k]));
    }
    return assemble(y, std::move(refined));
}

HooiResult hooi(const DenseTensor& y, const std::vector<std::size_t>& ranks,
                const HooiParams& params) {
    check_ranks(y, ranks);
    return hooi_from(y, ranks, first_pass_factors(y, ranks), params);
}

HooiResult hooi_from(const DenseTensor& y, const std::vector<std::size_t>& ranks,
                     std::vector<Matrix> init_factors, const HooiParams& params) {
    check_ranks(y, ranks);
    check_init_factors(y, ranks, init_factors);
    if (params.max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
    if (!(params.tol > 0.0)) throw std::invalid_argument("tol must be positive");

    std::vector<Matrix> factors = std::move(init_factors);
    HooiResult out;
    double fit = frobenius_norm(project_except(y, factors, factors.size()));
    out.fit_history.push_back(fit);
    for (std::size_t sweep = 0; sweep < params.max_iters; ++sweep) {
        for (std::size_t k = 0; k < y.order(); ++k) {
            factors[k] = mode_subspace(project_except(y, factors, k), k, ranks[k]);
        }
        const double next = frobenius_norm(project_except(y, factors, factors.size()));
        out.fit_history.push_back(next);
        ++out.iterations;
        const double denom = std::max(fit, std::numeric_limits<double>::min());
        if (std::abs(next - fit) <= params.tol * denom) {
            out.converged = true;
            fit = next;
            break;
        }
        fit = next;
    }
    EstimatorResult final = assemble(y, std::move(factors));
    out.estimate = std::move(final.estimate);
    out.factorization = std::move(final.factorization);
    return out;
}

ApproxLseResult approx_lse(const DenseTensor& y, const RankRule& rule, std::size_t restarts,
                           std::uint64_t seed, const HooiParams& params) {
    if (restarts < 1) throw std::invalid_argument("restarts must be at least 1");
    const RankRule::Resolved resolved = rule.resolve(y.dims());
    if (resolved.clamped) {
        std::cerr << "warning: requested ranks clamped to the tensor extents\n";
    }
    ApproxLseResult best;
    best.residual = std::numeric_limits<double>::infinity();
    for (std::size_t restart = 0; restart < restarts; ++restart) {
        HooiResult run;
        if (restart == 0) {
            run = hooi(y, resolved.ranks, params);
        } else {
            SplitMix64 rng(derive_seed(seed, {restart}));
            std::vector<Matrix> init;
            init.reserve(y.order());
            for (std::size_t k = 0; k < y.order(); ++k) {
                init.push_back(linalg::random_orthonormal(y.dim(k), resolved.ranks[k], rng));
            }
            run = hooi_from(y, resolved.ranks, std::move(init), params);
        }
        const double residual = frobenius_distance(y, run.estimate);
        if (residual < best.residual) {
            best.estimate = std::move(run.estimate);
            best.factorization = std::move(run.factorization);
            best.residual = residual;
            best.best_restart = restart;
        }
    }
    return best;
}

CvResult select_rank_cv(const DenseTensor& y, const std::vector<double>& c_grid,
                        std::size_t s_exponent, std::size_t folds, std::uint64_t seed) {
    if (c_grid.empty()) throw std::invalid_argument("candidate grid must be nonempty");
    if (folds < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
    if (s_exponent < 1) throw std::invalid_argument("rank-rule exponent must be at least 1");

    // Resolve every candidate first; candidates that would exceed an extent
    // are reported but excluded from scoring.
    struct Candidate {
        double c;
        std::vector<std::size_t> ranks;
        bool usable;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(c_grid.size());
    for (double c : c_grid) {
        const RankRule::Resolved r = RankRule::log_rule(c, s_exponent).resolve(y.dims());
        candidates.push_back({c, r.ranks, !r.clamped});
    }
    if (std::none_of(candidates.begin(), candidates.end(),
                     [](const Candidate& cand) { return cand.usable; })) {
        throw std::invalid_argument("every candidate rank exceeds the tensor extents");
    }

    // Fold membership by position hash: deterministic in (seed, position)
    // and independent of the grid.
    std::vector<std::uint8_t> fold_of(y.size());
    std::vector<std::size_t> fold_count(folds, 0);
    std::vector<double> fold_sum(folds, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        fold_of[i] = static_cast<std::uint8_t>(derive_seed(seed, {i}) % folds);
        fold_count[fold_of[i]] += 1;
        fold_sum[fold_of[i]] += y[i];
        total += y[i];
    }

    // Distinct resolved ranks are scored once per fold and shared by every
    // candidate that maps to them.
    std::map<std::vector<std::size_t>, double> score_sum;
    std::map<std::vector<std::size_t>, std::size_t> score_folds;
    for (const Candidate& cand : candidates) {
        if (cand.usable) score_sum.emplace(cand.ranks, 0.0);
    }
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t held = fold_count[f];
        const std::size_t kept = y.size() - held;
        if (held == 0 || kept == 0) continue;
        const double impute = (total - fold_sum[f]) / static_cast<double>(kept);
        DenseTensor train = y;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (fold_of[i] == f) train[i] = impute;
        }
        for (auto& [ranks, sum] : score_sum) {
            const DenseTensor est = dse(train, ranks).estimate;
            double err = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                if (fold_of[i] == f) {
                    const double diff = est[i] - y[i];
                    err += diff * diff;
                }
            }
            sum += err / static_cast<double>(held);
            score_folds[ranks] += 1;
        }
    }

    CvResult out;
    for (const Candidate& cand : candidates) {
        CvEntry entry;
        entry.c = cand.c;
        if (!cand.usable) {
            entry.score = std::numeric_limits<double>::quiet_NaN();
            entry.status = "skipped: resolved rank exceeds a tensor extent";
            out.table.push_back(std::move(entry));
            continue;
        }
        const std::size_t n_folds = score_folds[cand.ranks];
        if (n_folds == 0) {
            throw std::invalid_argument("every fold was empty; tensor too small for " +
                                        std::to_string(folds) + " folds");
        }
        entry.ranks = cand.ranks;
        entry.score = score_sum[cand.ranks] / static_cast<double>(n_folds);
        entry.status = "ok";
        out.table.push_back(std::move(entry));
    }

    // Winner: minimum mean score, with ties within 1e-12 broken toward the
    // smallest c so near-equal fits prefer the smaller rank.
    double min_score = std::numeric_limits<double>::infinity();
    for (const CvEntry& entry : out.table) {
        if (entry.status == "ok") min_score = std::min(min_score, entry.score);
    }
    const CvEntry* winner = nullptr;
    for (const CvEntry& entry : out.table) {
        if (entry.status != "ok" || entry.score > min_score + 1e-12) continue;
        if (winner == nullptr || entry.c < winner->c) winner = &entry;
    }
    out.best_c = winner->c;
    out.ranks = winner->ranks;
    return out;
}

}  // namespace lvt
