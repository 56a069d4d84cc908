#include "lvt/experiments.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lvt/errors.hpp"
#include "lvt/parallel.hpp"
#include "lvt/rank_analysis.hpp"
#include "lvt/rng.hpp"

namespace lvt {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string rank_coordinate(const std::vector<std::size_t>& ranks) {
    if (ranks.empty()) return "";
    const bool uniform = std::all_of(ranks.begin(), ranks.end(),
                                     [&](std::size_t r) { return r == ranks.front(); });
    if (uniform) return std::to_string(ranks.front());
    std::string out;
    for (std::size_t k = 0; k < ranks.size(); ++k) {
        if (k > 0) out += 'x';
        out += std::to_string(ranks[k]);
    }
    return out;
}

std::uint64_t gamma_bits(double gamma) { return std::bit_cast<std::uint64_t>(gamma); }

void check_spec(const ExperimentSpec& spec) {
    if (spec.model != ModelId::model1 && spec.model != ModelId::model2 &&
        spec.model != ModelId::model3) {
        throw std::invalid_argument("experiments run analytic models only");
    }
    if (spec.replicates < 1) throw std::invalid_argument("replicates must be at least 1");
    if (spec.s_grid.empty()) throw std::invalid_argument("s grid must be nonempty");
    const bool sweep = spec.kind == ExperimentKind::denoise_rank_sweep;
    if (!sweep || spec.sweep_dims.empty()) {
        if (spec.d_grid.empty()) throw std::invalid_argument("d grid must be nonempty");
        for (std::size_t d : spec.d_grid) {
            if (d < 2) throw std::invalid_argument("extents must be at least 2");
        }
    }
    if (sweep) {
        if (spec.gamma_grid.empty()) throw std::invalid_argument("gamma grid must be nonempty");
        for (double g : spec.gamma_grid) {
            if (!(g >= 0.0)) throw std::invalid_argument("noise levels must be nonnegative");
        }
        if (spec.rank_grid.empty()) throw std::invalid_argument("rank grid must be nonempty");
        for (std::size_t r : spec.rank_grid) {
            if (r < 1) throw std::invalid_argument("swept ranks must be at least 1");
        }
        for (std::size_t d : spec.sweep_dims) {
            if (d < 2) throw std::invalid_argument("extents must be at least 2");
        }
    }
    if (spec.cv_rank && spec.cv.c_grid.empty()) {
        throw std::invalid_argument("cv constant grid must be nonempty");
    }
}

/// Everything a cell campaign produces: rows in grid order plus a wall
/// clock reading that goes to stderr only.
struct CellOutput {
    std::vector<ExperimentRow> rows;
    double seconds = 0.0;
    std::string note;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ExperimentRow base_row(const ExperimentSpec& spec) {
    ExperimentRow row;
    row.kind = spec.kind;
    row.model = to_string(spec.model);
    row.gamma = kNan;
    row.c = kNan;
    row.value = kNan;
    row.stat = "raw";
    row.status = "ok";
    return row;
}

/// Scan cells reuse the rank-analysis module and remap its rows onto the
/// tidy schema, two metrics per scan cell.
std::vector<ExperimentRow> run_scan(const ExperimentSpec& spec) {
    RankScanConfig config;
    config.models = {spec.model};
    config.s_grid = spec.s_grid;
    config.d_grid = spec.d_grid;
    config.epsilon = spec.scan_epsilon;
    config.hooi = spec.hooi;
    config.threads = spec.threads;
    const std::size_t d_min = *std::min_element(spec.d_grid.begin(), spec.d_grid.end());
    config.r_max = spec.scan_r_max > 0 ? spec.scan_r_max : std::max<std::size_t>(d_min / 2, 1);
    for (std::size_t rep = 0; rep < spec.replicates; ++rep) {
        config.seeds.push_back(derive_seed(spec.seed, {static_cast<std::uint64_t>(rep)}));
    }

    std::vector<ExperimentRow> rows;
    for (const RankScanRow& scan : logrank_scan(config)) {
        const auto at = std::find(config.seeds.begin(), config.seeds.end(), scan.seed);
        ExperimentRow row = base_row(spec);
        row.s = scan.s;
        row.d = scan.d;
        row.replicate = static_cast<long>(at - config.seeds.begin());
        row.status = scan.status;

        row.metric = "rank";
        row.value = scan.found ? static_cast<double>(scan.rank) : kNan;
        rows.push_back(row);

        row.metric = "rel_err";
        row.value = scan.rel_err;
        rows.push_back(row);
    }
    return rows;
}

/// Shared cell body for the two unit-noise estimation kinds. Draws are
/// paired across estimators: every arm sees the same signal and noise.
CellOutput run_estimation_cell(const ExperimentSpec& spec, std::size_t s, std::size_t d) {
    const Stopwatch clock;
    CellOutput out;
    // Seeded by coordinates only, so the compare kind sees the very draws
    // the single-estimator kind would, replicate by replicate.
    const std::uint64_t cell_seed = derive_seed(spec.seed, {s, d});
    const LatentModel model = make_analytic_model(spec.model, s);
    const std::vector<std::size_t> dims{d, d, d};

    const bool compare = spec.kind == ExperimentKind::estimator_compare;
    const std::vector<std::string> arms =
        compare ? std::vector<std::string>{"hosvd", "dse", "approx-lse"}
                : std::vector<std::string>{"dse"};

    ExperimentRow proto = base_row(spec);
    proto.s = s;
    proto.d = d;
    proto.metric = "mse";

    try {
        double c = spec.rank_constant;
        RankRule rule = RankRule::log_rule(c, static_cast<double>(s));
        if (spec.cv_rank) {
            const DenseTensor theta = generate_signal(model, dims, derive_seed(cell_seed, {0, 0}));
            DenseTensor y = add_noise(theta, {1.0, derive_seed(cell_seed, {0, 1})});
            const CvResult cv = select_rank_cv(y, spec.cv.c_grid, s, spec.cv.folds,
                                               derive_seed(cell_seed, {~std::uint64_t{0}}));
            c = cv.best_c;
            rule = RankRule::log_rule(c, static_cast<double>(s));
        }
        proto.c = c;
        const RankRule::Resolved resolved = rule.resolve(dims);
        proto.rank = rank_coordinate(resolved.ranks);
        out.note = "c=" + io::format_double(c) + " rank=" + proto.rank;

        for (std::size_t rep = 0; rep < spec.replicates; ++rep) {
            const DenseTensor theta =
                generate_signal(model, dims, derive_seed(cell_seed, {rep, 0}));
            const DenseTensor y = add_noise(theta, {1.0, derive_seed(cell_seed, {rep, 1})});
            for (const std::string& arm : arms) {
                ExperimentRow row = proto;
                row.estimator = arm;
                row.replicate = static_cast<long>(rep);
                try {
                    if (arm == "hosvd") {
                        row.value = mse(hosvd(y, resolved.ranks).estimate, theta);
                    } else if (arm == "dse") {
                        row.value = mse(dse(y, resolved.ranks).estimate, theta);
                    } else {
                        row.value = mse(approx_lse(y, rule, spec.lse_restarts,
                                                   derive_seed(cell_seed, {rep, 2}), spec.hooi)
                                            .estimate,
                                        theta);
                    }
                } catch (const std::exception& fail) {
                    row.value = kNan;
                    row.status = std::string("failed: ") + fail.what();
                }
                out.rows.push_back(row);
            }
        }
    } catch (const std::exception& fail) {
        // Cell-level failures (rank selection, generation) mark every arm.
        for (const std::string& arm : arms) {
            ExperimentRow row = proto;
            row.estimator = arm;
            row.value = kNan;
            row.status = std::string("failed: ") + fail.what();
            out.rows.push_back(row);
        }
    }
    out.seconds = clock.seconds();
    return out;
}

/// Rank sweep over a fixed signal: one clean tensor per latent dimension,
/// contaminated at each noise level, estimated at each swept rank.
CellOutput run_sweep_cell(const ExperimentSpec& spec, const std::vector<std::size_t>& dims,
                          std::size_t s, double gamma, std::size_t rank) {
    const Stopwatch clock;
    CellOutput out;
    ExperimentRow proto = base_row(spec);
    proto.s = s;
    proto.d = dims.front();
    proto.gamma = gamma;
    proto.rank = std::to_string(rank);
    proto.estimator = "dse";
    proto.metric = "mse";

    try {
        const LatentModel model = make_analytic_model(spec.model, s);
        const DenseTensor theta = generate_signal(model, dims, derive_seed(spec.seed, {s}));
        const double sigma = noise_sigma_for_level(theta, gamma);
        std::vector<std::size_t> ranks(dims.size(), rank);
        for (std::size_t k = 0; k < dims.size(); ++k) ranks[k] = std::min(rank, dims[k]);
        for (std::size_t rep = 0; rep < spec.replicates; ++rep) {
            const DenseTensor y =
                add_noise(theta, {sigma, derive_seed(spec.seed, {s, gamma_bits(gamma), rep})});
            ExperimentRow row = proto;
            row.replicate = static_cast<long>(rep);
            try {
                row.value = mse(dse(y, ranks).estimate, theta);
            } catch (const std::exception& fail) {
                row.value = kNan;
                row.status = std::string("failed: ") + fail.what();
            }
            out.rows.push_back(row);
        }
    } catch (const std::exception& fail) {
        ExperimentRow row = proto;
        row.value = kNan;
        row.status = std::string("failed: ") + fail.what();
        out.rows.push_back(row);
    }
    out.seconds = clock.seconds();
    return out;
}

/// Appends one mean and one se row per (coordinates, metric) group, in
/// first-appearance order. Only finite raw values enter the aggregates; a
/// single observation has no spread, so its se renders as NA.
void append_summaries(std::vector<ExperimentRow>& rows) {
    struct Group {
        ExperimentRow proto;
        std::vector<double> values;
    };
    std::vector<Group> groups;
    std::map<std::string, std::size_t> index;
    const std::size_t raw_count = rows.size();
    for (std::size_t i = 0; i < raw_count; ++i) {
        const ExperimentRow& row = rows[i];
        std::string key = row.model;
        for (const std::string& part :
             {std::to_string(row.s), std::to_string(row.d), io::format_double(row.gamma), row.rank,
              io::format_double(row.c), row.estimator, row.metric}) {
            key += '\x1f';
            key += part;
        }
        auto [at, fresh] = index.emplace(key, groups.size());
        if (fresh) {
            Group group;
            group.proto = row;
            group.proto.replicate = -1;
            group.proto.status = "ok";
            groups.push_back(std::move(group));
        }
        if (std::isfinite(row.value)) groups[at->second].values.push_back(row.value);
    }
    for (const Group& group : groups) {
        const std::size_t n = group.values.size();
        double mean = kNan;
        double se = kNan;
        if (n > 0) {
            mean = 0.0;
            for (double v : group.values) mean += v;
            mean /= static_cast<double>(n);
            if (n > 1) {
                double ss = 0.0;
                for (double v : group.values) ss += (v - mean) * (v - mean);
                se = std::sqrt(ss / static_cast<double>(n - 1)) /
                     std::sqrt(static_cast<double>(n));
            }
        }
        ExperimentRow row = group.proto;
        row.status = n > 0 ? "ok" : "failed: no finite observations";
        row.stat = "mean";
        row.value = mean;
        rows.push_back(row);
        row.stat = "se";
        row.value = se;
        rows.push_back(row);
    }
}

std::string na_or(const std::string& value) { return value.empty() ? "NA" : value; }

std::string na_or(double value) { return std::isfinite(value) ? io::format_double(value) : "NA"; }

}  // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::logrank_scan: return "logrank-scan";
        case ExperimentKind::mse_vs_d: return "mse-vs-d";
        case ExperimentKind::estimator_compare: return "estimator-compare";
        case ExperimentKind::denoise_rank_sweep: return "denoise-rank-sweep";
    }
    throw std::invalid_argument("unknown experiment kind");
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
    if (name == "logrank-scan") return ExperimentKind::logrank_scan;
    if (name == "mse-vs-d") return ExperimentKind::mse_vs_d;
    if (name == "estimator-compare") return ExperimentKind::estimator_compare;
    if (name == "denoise-rank-sweep") return ExperimentKind::denoise_rank_sweep;
    throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    check_spec(spec);
    ExperimentResult result;
    if (spec.kind == ExperimentKind::logrank_scan) {
        // The scan does its own cell scheduling and failure capture.
        result.rows = run_scan(spec);
        append_summaries(result.rows);
        return result;
    }

    // Enumerate cells in grid order, run them on the pool, then flatten in
    // that same order so thread count never changes the output.
    std::vector<CellOutput> cells;
    if (spec.kind == ExperimentKind::denoise_rank_sweep) {
        std::vector<std::size_t> dims = spec.sweep_dims;
        if (dims.empty()) dims.assign(3, spec.d_grid.front());
        struct Coord {
            std::size_t s;
            double gamma;
            std::size_t rank;
        };
        std::vector<Coord> coords;
        for (std::size_t s : spec.s_grid)
            for (double gamma : spec.gamma_grid)
                for (std::size_t rank : spec.rank_grid) coords.push_back({s, gamma, rank});
        cells.resize(coords.size());
        parallel_for(coords.size(), spec.threads, [&](std::size_t i) {
            cells[i] = run_sweep_cell(spec, dims, coords[i].s, coords[i].gamma, coords[i].rank);
        });
        for (std::size_t i = 0; i < coords.size(); ++i) {
            std::fprintf(stderr, "[experiment] %s s=%zu gamma=%g rank=%zu: %.2fs\n",
                         to_string(spec.kind).c_str(), coords[i].s, coords[i].gamma,
                         coords[i].rank, cells[i].seconds);
        }
    } else {
        struct Coord {
            std::size_t s;
            std::size_t d;
        };
        std::vector<Coord> coords;
        for (std::size_t s : spec.s_grid)
            for (std::size_t d : spec.d_grid) coords.push_back({s, d});
        cells.resize(coords.size());
        parallel_for(coords.size(), spec.threads, [&](std::size_t i) {
            cells[i] = run_estimation_cell(spec, coords[i].s, coords[i].d);
        });
        for (std::size_t i = 0; i < coords.size(); ++i) {
            std::fprintf(stderr, "[experiment] %s s=%zu d=%zu %s: %.2fs\n",
                         to_string(spec.kind).c_str(), coords[i].s, coords[i].d,
                         cells[i].note.c_str(), cells[i].seconds);
        }
    }
    for (CellOutput& cell : cells) {
        for (ExperimentRow& row : cell.rows) result.rows.push_back(std::move(row));
    }
    append_summaries(result.rows);
    return result;
}

io::CsvTable experiment_csv(const ExperimentResult& result) {
    io::CsvTable table;
    table.columns = {"kind", "model",     "s",         "d",      "gamma", "rank", "c",
                     "estimator", "replicate", "metric", "stat",  "value", "status"};
    for (const ExperimentRow& row : result.rows) {
        table.rows.push_back({to_string(row.kind), row.model,
                              row.s > 0 ? std::to_string(row.s) : "NA",
                              row.d > 0 ? std::to_string(row.d) : "NA", na_or(row.gamma),
                              na_or(row.rank), na_or(row.c), na_or(row.estimator),
                              row.replicate >= 0 ? std::to_string(row.replicate) : "NA",
                              row.metric, row.stat, na_or(row.value), row.status});
    }
    return table;
}

namespace {

DenoiseReport denoise_common(const std::string& input_path, const std::string& output_path,
                             const DenseTensor& y, const RankRule& rule, double cv_constant,
                             const Stopwatch& clock, const std::string& report_path) {
    const RankRule::Resolved resolved = rule.resolve(y.dims());
    if (resolved.clamped) {
        // The log rule overshooting a small extent is routine; explicitly
        // requested ranks beyond the extents are a caller mistake.
        if (!rule.is_log_rule()) {
            throw std::invalid_argument("requested ranks exceed the extents of '" + input_path +
                                        "'");
        }
        std::fprintf(stderr, "warning: ranks for '%s' clamped to the tensor extents\n",
                     input_path.c_str());
    }
    const EstimatorResult est = dse(y, resolved.ranks);
    io::write_dtf1(est.estimate, output_path);

    DenoiseReport report;
    report.dims = y.dims();
    report.ranks = resolved.ranks;
    report.cv_constant = cv_constant;
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double diff = y[i] - est.estimate[i];
        ss += diff * diff;
    }
    report.residual = std::sqrt(ss);
    report.runtime_seconds = clock.seconds();

    std::ofstream out(report_path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + report_path + "' for writing", 0);
    out << report.render();
    if (!out) throw IoError("write failure on '" + report_path + "'", 0);
    return report;
}

std::string join_dims(const std::vector<std::size_t>& dims) {
    std::string out;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (k > 0) out += 'x';
        out += std::to_string(dims[k]);
    }
    return out;
}

}  // namespace

std::string DenoiseReport::render() const {
    std::ostringstream out;
    out << "dims: " << join_dims(dims) << '\n';
    out << "ranks: " << join_dims(ranks) << '\n';
    out << "cv_constant: " << na_or(cv_constant) << '\n';
    out << "residual: " << io::format_double(residual) << '\n';
    out << "runtime_seconds: " << io::format_double(runtime_seconds) << '\n';
    return out.str();
}

DenoiseReport denoise_file(const std::string& input_path, const std::string& output_path,
                           const RankRule& rule, const std::string& report_path) {
    const Stopwatch clock;
    const DenseTensor y = io::read_dtf1(input_path);
    return denoise_common(input_path, output_path, y, rule, kNan, clock, report_path);
}

DenoiseReport denoise_file_cv(const std::string& input_path, const std::string& output_path,
                              const CvSelection& cv, std::size_t s_exponent, std::uint64_t seed,
                              const std::string& report_path) {
    const Stopwatch clock;
    const DenseTensor y = io::read_dtf1(input_path);
    const CvResult choice = select_rank_cv(y, cv.c_grid, s_exponent, cv.folds, seed);
    const RankRule rule = RankRule::log_rule(choice.best_c, static_cast<double>(s_exponent));
    return denoise_common(input_path, output_path, y, rule, choice.best_c, clock, report_path);
}

}  // namespace lvt
