#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lvt/estimators.hpp"
#include "lvt/generators.hpp"
#include "lvt/io.hpp"
#include "lvt/tensor.hpp"

namespace lvt {

struct EpsilonRankResult {
    /// True when some scanned rank reached the threshold.
    bool found = false;
    /// Smallest r whose (running-minimum) relative error is <= epsilon.
    std::size_t rank = 0;
    /// Relative error at that rank; when not found, the best error seen.
    double err_at_rank = 0.0;
    /// Raw relative error ||theta - X_r||_F / ||theta||_F per scanned r. The
    /// scan stops at the first threshold crossing, so the last entry is the
    /// accepted rank's error.
    std::vector<std::pair<std::size_t, double>> error_curve;
};

/// Numerical epsilon-rank: scans r = 1..r_max (capped at the smallest
/// extent), projecting theta onto rank (r..r) with alternating subspace
/// refinement, and returns the smallest r whose relative error is at or
/// below epsilon. The refinement is a local method, so the raw curve can
/// blip upward; thresholding uses the running minimum. A zero tensor has no
/// relative error and is rejected.
EpsilonRankResult epsilon_rank(const DenseTensor& theta, double epsilon, std::size_t r_max,
                               const HooiParams& params = {});

/// Grid scan of the epsilon-rank over analytic models, latent dimensions,
/// extents, and seeds.
struct RankScanConfig {
    /// Analytic models only (model1..model3); the structured families have
    /// their rank by construction, so scanning them is not meaningful.
    std::vector<ModelId> models{ModelId::model1};
    std::vector<std::size_t> s_grid;
    std::vector<std::size_t> d_grid;
    std::vector<std::uint64_t> seeds;
    double epsilon = 0.01;
    std::size_t r_max = 1;
    HooiParams hooi;
    /// 0 picks the hardware concurrency.
    std::size_t threads = 0;
};

struct RankScanRow {
    ModelId model = ModelId::model1;
    std::size_t s = 0;
    std::size_t d = 0;
    std::uint64_t seed = 0;
    double epsilon = 0.0;
    bool found = false;
    std::size_t rank = 0;
    /// Relative error at the found rank, best error seen when not found,
    /// NaN when the cell failed outright.
    double rel_err = 0.0;
    /// "ok", "not-found", or "failed: <reason>".
    std::string status;
};

/// One row per (model, s, d, seed) cell, sorted by those coordinates
/// regardless of execution order. Each cell generates a d x d x d signal
/// from a seed derived from its coordinates, so results do not depend on
/// which other cells are in the scan. Failing cells are recorded, never
/// propagated.
std::vector<RankScanRow> logrank_scan(const RankScanConfig& config);

/// Columns: model,s,d,seed,epsilon,rank,rel_err. Rank is NA when not found;
/// rel_err is NA when the cell failed.
io::CsvTable rank_scan_csv(const std::vector<RankScanRow>& rows);

}  // namespace lvt
