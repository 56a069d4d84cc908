#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lvt/estimators.hpp"
#include "lvt/io.hpp"
#include "lvt/tensor.hpp"

namespace lvt {

struct ClusterAssignment {
    /// Cluster index in [0, k) per data row. Labels are canonical: clusters
    /// are numbered by decreasing size, ties broken by smallest member row.
    std::vector<std::size_t> labels;
    /// k x dim centroid matrix, rows aligned with the label numbering.
    Matrix centroids;
    /// Sum over rows of the squared distance to the assigned centroid.
    double wcss = 0.0;
    std::size_t k = 0;
    /// Objective after each Lloyd assignment step of the winning restart;
    /// non-increasing up to roundoff.
    std::vector<double> wcss_history;
};

/// Scores of the mode's indices in the factorization's component space:
/// factors[mode] * unfold(core, mode), one row per index of that mode. The
/// remaining factors form an orthonormal axis system, so row distances in
/// this matrix equal distances between the corresponding mode slices of the
/// reconstruction.
Matrix mode_principal_components(const TuckerFactorization& fact, std::size_t mode);

/// Lloyd iterations from k-means++ seeding, best of `restarts` seeded runs
/// by (wcss, restart index). A cluster that empties out is reseeded at the
/// row farthest from its current centroid. Deterministic given the seed.
ClusterAssignment kmeans(const Matrix& data, std::size_t k, std::size_t restarts,
                         std::size_t max_iters, std::uint64_t seed);

/// (k, wcss) per grid value, ascending in k with duplicates dropped. Each k
/// additionally seeds one candidate by extending the previous k's winning
/// centroids with farthest-point rows, which makes the curve non-increasing
/// by construction.
std::vector<std::pair<std::size_t, double>> elbow_curve(const Matrix& data,
                                                        const std::vector<std::size_t>& k_grid,
                                                        std::size_t restarts, std::uint64_t seed);

struct ClusterModeParams {
    std::size_t kmeans_restarts = 8;
    std::size_t kmeans_max_iters = 100;
    /// Refine the double-projection factors by alternating sweeps before
    /// extracting components.
    bool hooi_refine = true;
    HooiParams hooi;
    std::uint64_t seed = 0;
};

struct ClusterModeResult {
    ClusterAssignment assignment;
    /// Run record: the resolved ranks, the seed, whether the factors were
    /// refined past the double projection, and how many sweeps that took.
    std::vector<std::size_t> ranks;
    std::uint64_t seed = 0;
    bool hooi_refined = false;
    std::size_t hooi_iterations = 0;
};

/// Full pipeline: estimate the signal subspaces (double projection, then
/// optional refinement), extract the mode's principal components, cluster
/// their rows into k groups.
ClusterModeResult cluster_mode(const DenseTensor& y, const RankRule& rule, std::size_t mode,
                               std::size_t k, const ClusterModeParams& params = {});

/// Columns: row_index,label.
io::CsvTable assignment_csv(const ClusterAssignment& assignment);

/// Columns: k,wcss.
io::CsvTable elbow_csv(const std::vector<std::pair<std::size_t, double>>& curve);

}  // namespace lvt
