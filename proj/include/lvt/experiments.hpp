#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lvt/estimators.hpp"
#include "lvt/generators.hpp"
#include "lvt/io.hpp"
#include "lvt/tensor.hpp"

namespace lvt {

/// Monte-Carlo campaign families. logrank_scan wraps the rank-analysis
/// grid scan; the other three estimate signals under noise and report
/// per-entry mean squared error.
enum class ExperimentKind {
    logrank_scan,
    mse_vs_d,
    estimator_compare,
    denoise_rank_sweep,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

/// Cross-validated choice of the rank-rule constant.
struct CvSelection {
    std::vector<double> c_grid{0.5, 1.0, 2.0, 4.0};
    std::size_t folds = 5;
};

/// Declarative description of one campaign. Only analytic models run here:
/// the structured families have their rank by construction, so sweeping
/// them against the log rule is not meaningful. Grids a kind does not
/// consume are ignored.
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::mse_vs_d;
    ModelId model = ModelId::model1;
    /// Cubic extent grid; each cell works on a d x d x d tensor.
    std::vector<std::size_t> d_grid{20, 40, 60};
    /// Latent dimensions; each doubles as the log-rule exponent.
    std::vector<std::size_t> s_grid{2};
    /// Noise levels relative to the signal norm (denoise_rank_sweep only;
    /// the estimation kinds add unit gaussian noise).
    std::vector<double> gamma_grid{0.0, 0.5, 1.0};
    /// Approximation ranks swept by denoise_rank_sweep.
    std::vector<std::size_t> rank_grid{3, 6, 9, 12};
    /// Explicit extents for denoise_rank_sweep's fixed signal; empty means
    /// cubic from d_grid.front().
    std::vector<std::size_t> sweep_dims;
    /// Rank-rule constant used when cv_rank is off.
    double rank_constant = 1.0;
    /// Select the constant per cell by cross-validation instead.
    bool cv_rank = false;
    CvSelection cv;
    /// logrank_scan controls; r_max 0 means half the smallest extent.
    double scan_epsilon = 0.01;
    std::size_t scan_r_max = 0;
    std::size_t replicates = 5;
    std::uint64_t seed = 0;
    HooiParams hooi;
    /// Restarts for the approx-lse arm of estimator_compare.
    std::size_t lse_restarts = 3;
    /// 0 picks the hardware concurrency.
    std::size_t threads = 0;
};

/// One tidy observation. Coordinates that do not apply to the row are left
/// at their sentinel (0 extents, NaN doubles, empty strings, replicate -1)
/// and render as NA in the CSV.
struct ExperimentRow {
    ExperimentKind kind = ExperimentKind::mse_vs_d;
    std::string model;
    std::size_t s = 0;
    std::size_t d = 0;
    double gamma = 0.0;
    /// Cell rank coordinate: the swept rank for denoise_rank_sweep, the
    /// resolved per-mode ranks ("4" or "4x4x3") for the rule-driven kinds.
    std::string rank;
    double c = 0.0;
    std::string estimator;
    long replicate = -1;
    std::string metric;
    double value = 0.0;
    /// "raw" for per-replicate observations, "mean"/"se" for summaries.
    std::string stat;
    /// "ok", "not-found" (scan rows), or "failed: <reason>".
    std::string status;
};

struct ExperimentResult {
    /// Raw rows in deterministic grid order, then one mean and one se row
    /// per (cell, estimator, metric) group in the same order.
    std::vector<ExperimentRow> rows;
};

/// Runs the campaign described by spec. Cells are seeded from the base
/// seed and their own coordinates, so adding or removing grid points does
/// not change the values of the remaining cells. A failing replicate
/// yields a status row and the campaign continues. Per-cell runtimes go to
/// stderr, never into the result, so reruns stay byte-identical.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Schema: kind,model,s,d,gamma,rank,c,estimator,replicate,metric,stat,
/// value,status.
io::CsvTable experiment_csv(const ExperimentResult& result);

/// Report of one file-to-file denoising pass.
struct DenoiseReport {
    std::vector<std::size_t> dims;
    std::vector<std::size_t> ranks;
    /// Constant selected by cross-validation; NaN when ranks were explicit.
    double cv_constant = 0.0;
    /// ||input - estimate||_F.
    double residual = 0.0;
    double runtime_seconds = 0.0;
    std::string render() const;
};

/// Reads a DTF1 tensor, estimates at the rule's resolved ranks (or at
/// cross-validated ranks when cv is set), and writes the estimate as DTF1
/// next to a plain-text report at report_path. The report carries the
/// wall-clock time; the tensor output is deterministic.
DenoiseReport denoise_file(const std::string& input_path, const std::string& output_path,
                           const RankRule& rule, const std::string& report_path);
DenoiseReport denoise_file_cv(const std::string& input_path, const std::string& output_path,
                              const CvSelection& cv, std::size_t s_exponent, std::uint64_t seed,
                              const std::string& report_path);

}  // namespace lvt
