#include "lvt/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "lvt/linalg.hpp"
#include "lvt/rng.hpp"

namespace lvt {

namespace {

double row_dist2(const Matrix& data, std::size_t row, const Matrix& centroids, std::size_t c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < data.cols(); ++j) {
        const double diff = data.at(row, j) - centroids.at(c, j);
        acc += diff * diff;
    }
    return acc;
}

// k-means++ seeding: first center uniform, then rows drawn proportionally
// to their squared distance from the chosen set. Zero-weight rows (exact
// duplicates of a center) are skipped; if nothing has weight left the
// lowest unchosen row index is taken.
Matrix seed_centroids(const Matrix& data, std::size_t k, SplitMix64& rng) {
    const std::size_t rows = data.rows();
    std::vector<std::size_t> centers;
    centers.push_back(rng.next_u64() % rows);
    std::vector<double> d2(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < data.cols(); ++j) {
            const double diff = data.at(i, j) - data.at(centers[0], j);
            acc += diff * diff;
        }
        d2[i] = acc;
    }
    while (centers.size() < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = rows;
        if (total > 0.0) {
            const double target = rng.next_double() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < rows; ++i) {
                if (d2[i] <= 0.0) continue;
                acc += d2[i];
                pick = i;
                if (acc >= target) break;
            }
        } else {
            for (std::size_t i = 0; i < rows; ++i) {
                if (std::find(centers.begin(), centers.end(), i) == centers.end()) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(pick);
        for (std::size_t i = 0; i < rows; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < data.cols(); ++j) {
                const double diff = data.at(i, j) - data.at(pick, j);
                acc += diff * diff;
            }
            d2[i] = std::min(d2[i], acc);
        }
    }
    Matrix out(k, data.cols());
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < data.cols(); ++j) out.at(c, j) = data.at(centers[c], j);
    return out;
}

struct LloydRun {
    std::vector<std::size_t> labels;
    Matrix centroids;
    double wcss = 0.0;
    std::vector<double> history;
};

LloydRun lloyd(const Matrix& data, Matrix centroids, std::size_t max_iters) {
    const std::size_t rows = data.rows();
    const std::size_t k = centroids.rows();
    LloydRun run;
    run.labels.assign(rows, 0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        bool changed = iter == 0;
        double wcss = 0.0;
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < rows; ++i) {
            std::size_t best = 0;
            double best_d = row_dist2(data, i, centroids, 0);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = row_dist2(data, i, centroids, c);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (run.labels[i] != best) changed = true;
            run.labels[i] = best;
            counts[best] += 1;
            wcss += best_d;
        }
        // A cluster that lost every row restarts at the worst-served point,
        // which strictly lowers the objective and keeps k clusters alive.
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t far = rows;
            double far_d = -1.0;
            for (std::size_t i = 0; i < rows; ++i) {
                if (counts[run.labels[i]] <= 1) continue;
                const double d = row_dist2(data, i, centroids, run.labels[i]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far == rows) continue;
            wcss -= far_d;
            counts[run.labels[far]] -= 1;
            run.labels[far] = c;
            counts[c] = 1;
            for (std::size_t j = 0; j < data.cols(); ++j) centroids.at(c, j) = data.at(far, j);
            changed = true;
        }
        run.history.push_back(wcss);
        if (!changed) break;
        // Update step: each centroid moves to its cluster's mean.
        Matrix next(k, data.cols());
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < data.cols(); ++j)
                next.at(run.labels[i], j) += data.at(i, j);
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t j = 0; j < data.cols(); ++j)
                next.at(c, j) /= static_cast<double>(counts[c]);
        centroids = std::move(next);
    }
    run.centroids = std::move(centroids);
    run.wcss = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        run.wcss += row_dist2(data, i, run.centroids, run.labels[i]);
    }
    return run;
}

// Renumber clusters by decreasing size, ties toward the cluster whose
// smallest member row comes first, and reorder centroids to match.
ClusterAssignment canonicalize(LloydRun run, std::size_t k) {
    const std::size_t rows = run.labels.size();
    std::vector<std::size_t> size(k, 0), first(k, rows);
    for (std::size_t i = 0; i < rows; ++i) {
        size[run.labels[i]] += 1;
        first[run.labels[i]] = std::min(first[run.labels[i]], i);
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (size[a] != size[b]) return size[a] > size[b];
        return first[a] < first[b];
    });
    std::vector<std::size_t> rename(k);
    for (std::size_t pos = 0; pos < k; ++pos) rename[order[pos]] = pos;

    ClusterAssignment out;
    out.k = k;
    out.wcss = run.wcss;
    out.wcss_history = std::move(run.history);
    out.labels.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) out.labels[i] = rename[run.labels[i]];
    out.centroids = Matrix(k, run.centroids.cols());
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < run.centroids.cols(); ++j)
            out.centroids.at(rename[c], j) = run.centroids.at(c, j);
    return out;
}

void check_kmeans_args(const Matrix& data, std::size_t k, std::size_t restarts,
                       std::size_t max_iters) {
    if (data.rows() < 1 || data.cols() < 1) {
        throw std::invalid_argument("clustering needs a nonempty data matrix");
    }
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    if (k > data.rows()) {
        throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the " +
                                    std::to_string(data.rows()) + " data rows");
    }
    if (restarts < 1) throw std::invalid_argument("restarts must be at least 1");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
}

// Best run over k-means++ restarts plus optional extra initial centroid
// sets (evaluated after the restarts, so they win only by strict
// improvement).
LloydRun best_run(const Matrix& data, std::size_t k, std::size_t restarts, std::size_t max_iters,
                  std::uint64_t seed, const std::vector<Matrix>& extra_inits) {
    LloydRun best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < restarts; ++r) {
        SplitMix64 rng(derive_seed(seed, {r}));
        LloydRun run = lloyd(data, seed_centroids(data, k, rng), max_iters);
        if (run.wcss < best.wcss) best = std::move(run);
    }
    for (const Matrix& init : extra_inits) {
        LloydRun run = lloyd(data, init, max_iters);
        if (run.wcss < best.wcss) best = std::move(run);
    }
    return best;
}

}  // namespace

Matrix mode_principal_components(const TuckerFactorization& fact, std::size_t mode) {
    if (mode >= fact.factors.size()) {
        throw std::invalid_argument("mode " + std::to_string(mode + 1) + " is out of range for an "
                                    "order-" + std::to_string(fact.factors.size()) +
                                    " factorization");
    }
    return linalg::matmul(fact.factors[mode], unfold(fact.core, mode));
}

ClusterAssignment kmeans(const Matrix& data, std::size_t k, std::size_t restarts,
                         std::size_t max_iters, std::uint64_t seed) {
    check_kmeans_args(data, k, restarts, max_iters);
    return canonicalize(best_run(data, k, restarts, max_iters, seed, {}), k);
}

std::vector<std::pair<std::size_t, double>> elbow_curve(const Matrix& data,
                                                        const std::vector<std::size_t>& k_grid,
                                                        std::size_t restarts, std::uint64_t seed) {
    if (k_grid.empty()) throw std::invalid_argument("k grid must be nonempty");
    std::vector<std::size_t> ks = k_grid;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (std::size_t k : ks) check_kmeans_args(data, k, restarts, 100);

    std::vector<std::pair<std::size_t, double>> curve;
    Matrix prev_centroids;
    for (std::size_t k : ks) {
        std::vector<Matrix> extra;
        if (prev_centroids.rows() > 0 && prev_centroids.rows() < k) {
            // Grow the previous winner by farthest-point centroids; running
            // Lloyd from this start can only improve on the previous wcss,
            // which keeps the curve monotone.
            Matrix grown(k, data.cols());
            for (std::size_t c = 0; c < prev_centroids.rows(); ++c)
                for (std::size_t j = 0; j < data.cols(); ++j)
                    grown.at(c, j) = prev_centroids.at(c, j);
            for (std::size_t c = prev_centroids.rows(); c < k; ++c) {
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < data.rows(); ++i) {
                    double nearest = std::numeric_limits<double>::infinity();
                    for (std::size_t cc = 0; cc < c; ++cc) {
                        nearest = std::min(nearest, row_dist2(data, i, grown, cc));
                    }
                    if (nearest > far_d) {
                        far_d = nearest;
                        far = i;
                    }
                }
                for (std::size_t j = 0; j < data.cols(); ++j) grown.at(c, j) = data.at(far, j);
            }
            extra.push_back(std::move(grown));
        }
        LloydRun run = best_run(data, k, restarts, 100, derive_seed(seed, {k}), extra);
        curve.emplace_back(k, run.wcss);
        prev_centroids = std::move(run.centroids);
    }
    return curve;
}

ClusterModeResult cluster_mode(const DenseTensor& y, const RankRule& rule, std::size_t mode,
                               std::size_t k, const ClusterModeParams& params) {
    if (mode >= y.order()) {
        throw std::invalid_argument("mode " + std::to_string(mode + 1) +
                                    " is out of range for an order-" + std::to_string(y.order()) +
                                    " tensor");
    }
    const RankRule::Resolved resolved = rule.resolve(y.dims());
    if (resolved.clamped) {
        std::cerr << "warning: requested ranks clamped to the tensor extents\n";
    }
    EstimatorResult est = dse(y, resolved.ranks);
    ClusterModeResult out;
    out.ranks = resolved.ranks;
    out.seed = params.seed;
    out.hooi_refined = params.hooi_refine;
    TuckerFactorization fact;
    if (params.hooi_refine) {
        HooiResult refined =
            hooi_from(y, resolved.ranks, std::move(est.factorization.factors), params.hooi);
        out.hooi_iterations = refined.iterations;
        fact = std::move(refined.factorization);
    } else {
        fact = std::move(est.factorization);
    }
    const Matrix components = mode_principal_components(fact, mode);
    out.assignment =
        kmeans(components, k, params.kmeans_restarts, params.kmeans_max_iters, params.seed);
    return out;
}

io::CsvTable assignment_csv(const ClusterAssignment& assignment) {
    io::CsvTable table;
    table.columns = {"row_index", "label"};
    for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
        table.rows.push_back({std::to_string(i), std::to_string(assignment.labels[i])});
    }
    return table;
}

io::CsvTable elbow_csv(const std::vector<std::pair<std::size_t, double>>& curve) {
    io::CsvTable table;
    table.columns = {"k", "wcss"};
    for (const auto& [k, wcss] : curve) {
        table.rows.push_back({std::to_string(k), io::format_double(wcss)});
    }
    return table;
}

}  // namespace lvt
