#include "lvt/rank_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>

#include "lvt/linalg.hpp"
#include "lvt/parallel.hpp"
#include "lvt/rng.hpp"

namespace lvt {

namespace {

Matrix leading_columns(const Matrix& m, std::size_t cols) {
    Matrix out(m.rows(), cols);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < cols; ++j) out.at(i, j) = m.at(i, j);
    return out;
}

void check_scan_config(const RankScanConfig& config) {
    if (config.models.empty()) throw std::invalid_argument("scan needs at least one model");
    for (ModelId id : config.models) {
        if (id != ModelId::model1 && id != ModelId::model2 && id != ModelId::model3) {
            throw std::invalid_argument("rank scans cover the analytic models only");
        }
    }
    if (config.s_grid.empty()) throw std::invalid_argument("scan needs at least one latent dim");
    if (config.d_grid.empty()) throw std::invalid_argument("scan needs at least one extent");
    if (config.seeds.empty()) throw std::invalid_argument("scan needs at least one seed");
    for (std::size_t s : config.s_grid) {
        if (s < 1) throw std::invalid_argument("latent dims must be at least 1");
    }
    if (!(config.epsilon > 0.0 && config.epsilon < 1.0)) {
        throw std::invalid_argument("epsilon must lie in (0, 1)");
    }
    if (config.r_max < 1) throw std::invalid_argument("r_max must be at least 1");
    const std::size_t d_min = *std::min_element(config.d_grid.begin(), config.d_grid.end());
    if (d_min < 2) throw std::invalid_argument("extents below 2 have no rank to scan");
    if (config.r_max > d_min) {
        throw std::invalid_argument("r_max " + std::to_string(config.r_max) +
                                    " exceeds the smallest extent " + std::to_string(d_min));
    }
}

}  // namespace

EpsilonRankResult epsilon_rank(const DenseTensor& theta, double epsilon, std::size_t r_max,
                               const HooiParams& params) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw std::invalid_argument("epsilon must lie in (0, 1)");
    }
    if (r_max < 1) throw std::invalid_argument("r_max must be at least 1");
    const double norm = frobenius_norm(theta);
    if (norm == 0.0) {
        throw std::invalid_argument("zero tensor has no relative approximation error");
    }

    const std::size_t cap =
        std::min(r_max, *std::min_element(theta.dims().begin(), theta.dims().end()));

    // One spectral basis per mode, computed once; its leading r columns are
    // exactly the rank-r initialization, so the per-rank scans skip the
    // expensive Gram/eigen stage.
    std::vector<Matrix> basis;
    basis.reserve(theta.order());
    for (std::size_t k = 0; k < theta.order(); ++k) {
        basis.push_back(linalg::sym_top_eigvecs(linalg::unfold_gram(theta, k), cap));
    }

    EpsilonRankResult out;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 1; r <= cap; ++r) {
        std::vector<Matrix> init;
        init.reserve(theta.order());
        for (const Matrix& b : basis) init.push_back(leading_columns(b, r));
        const std::vector<std::size_t> ranks(theta.order(), r);
        const HooiResult fit = hooi_from(theta, ranks, std::move(init), params);
        const double rel = frobenius_distance(theta, fit.estimate) / norm;
        out.error_curve.emplace_back(r, rel);
        best = std::min(best, rel);
        if (best <= epsilon) {
            out.found = true;
            out.rank = r;
            out.err_at_rank = rel;
            return out;
        }
    }
    out.err_at_rank = best;
    return out;
}

std::vector<RankScanRow> logrank_scan(const RankScanConfig& config) {
    check_scan_config(config);

    struct Cell {
        ModelId model;
        std::size_t s, d;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (ModelId model : config.models)
        for (std::size_t s : config.s_grid)
            for (std::size_t d : config.d_grid)
                for (std::uint64_t seed : config.seeds) cells.push_back({model, s, d, seed});

    std::vector<RankScanRow> rows(cells.size());
    const unsigned threads =
        config.threads == 0 ? default_thread_count() : static_cast<unsigned>(config.threads);
    parallel_for(cells.size(), threads, [&](std::size_t i) {
        const Cell& cell = cells[i];
        RankScanRow& row = rows[i];
        row.model = cell.model;
        row.s = cell.s;
        row.d = cell.d;
        row.seed = cell.seed;
        row.epsilon = config.epsilon;
        try {
            const std::uint64_t cell_seed = derive_seed(
                cell.seed, {static_cast<std::uint64_t>(cell.model), cell.s, cell.d});
            const DenseTensor theta = generate_signal(make_analytic_model(cell.model, cell.s),
                                                      {cell.d, cell.d, cell.d}, cell_seed);
            const EpsilonRankResult res =
                epsilon_rank(theta, config.epsilon, config.r_max, config.hooi);
            row.found = res.found;
            row.rank = res.rank;
            row.rel_err = res.err_at_rank;
            row.status = res.found ? "ok" : "not-found";
        } catch (const std::exception& e) {
            row.found = false;
            row.rel_err = std::numeric_limits<double>::quiet_NaN();
            row.status = std::string("failed: ") + e.what();
        }
    });

    std::sort(rows.begin(), rows.end(), [](const RankScanRow& a, const RankScanRow& b) {
        return std::make_tuple(static_cast<int>(a.model), a.s, a.d, a.seed) <
               std::make_tuple(static_cast<int>(b.model), b.s, b.d, b.seed);
    });
    return rows;
}

io::CsvTable rank_scan_csv(const std::vector<RankScanRow>& rows) {
    io::CsvTable table;
    table.columns = {"model", "s", "d", "seed", "epsilon", "rank", "rel_err"};
    for (const RankScanRow& row : rows) {
        table.rows.push_back({to_string(row.model), std::to_string(row.s), std::to_string(row.d),
                              std::to_string(row.seed), io::format_double(row.epsilon),
                              row.found ? std::to_string(row.rank) : "NA",
                              std::isnan(row.rel_err) ? "NA" : io::format_double(row.rel_err)});
    }
    return table;
}

}  // namespace lvt
