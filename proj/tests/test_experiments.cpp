#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lvt/errors.hpp"
#include "lvt/experiments.hpp"
#include "lvt/generators.hpp"
#include "lvt/io.hpp"
#include "lvt/linalg.hpp"
#include "lvt/rng.hpp"

using lvt::DenseTensor;
using lvt::ExperimentKind;
using lvt::ExperimentRow;
using lvt::ExperimentSpec;
using lvt::RankRule;
namespace io = lvt::io;

namespace {

std::string temp_path(const std::string& name) {
    return std::string("lvt_experiments_test_") + name;
}

struct FileGuard {
    std::string path;
    ~FileGuard() { std::remove(path.c_str()); }
};

ExperimentSpec tiny_compare_spec() {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::estimator_compare;
    spec.d_grid = {20};
    spec.s_grid = {2};
    spec.rank_constant = 0.5;
    spec.replicates = 3;
    spec.lse_restarts = 1;
    spec.hooi.max_iters = 10;
    spec.seed = 41;
    return spec;
}

const ExperimentRow* find_row(const lvt::ExperimentResult& result, const std::string& stat,
                              const std::string& estimator, const std::string& metric,
                              std::size_t d, long replicate) {
    for (const ExperimentRow& row : result.rows) {
        if (row.stat == stat && row.estimator == estimator && row.metric == metric &&
            row.d == d && row.replicate == replicate) {
            return &row;
        }
    }
    return nullptr;
}

double rel_change(const DenseTensor& a, const DenseTensor& b) {
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        ref += b[i] * b[i];
    }
    return std::sqrt(diff / ref);
}

double mse_between(const DenseTensor& a, const DenseTensor& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

// An exactly low-rank signal: gaussian core stretched by latent factors.
DenseTensor low_rank_signal(const std::vector<std::size_t>& dims,
                            const std::vector<std::size_t>& ranks, std::uint64_t seed) {
    DenseTensor core(ranks);
    lvt::SplitMix64 rng(seed);
    for (std::size_t i = 0; i < core.size(); ++i) core[i] = rng.next_gaussian();
    return lvt::generate_signal(lvt::make_tucker_model(core), dims, seed + 1);
}

}  // namespace

TEST_CASE("a single-cell single-replicate campaign yields one raw row per metric") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::mse_vs_d;
    spec.d_grid = {15};
    spec.s_grid = {1};
    spec.replicates = 1;
    spec.seed = 3;
    const lvt::ExperimentResult result = lvt::run_experiment(spec);
    std::size_t raw = 0, mean = 0, se = 0;
    for (const ExperimentRow& row : result.rows) {
        raw += row.stat == "raw";
        mean += row.stat == "mean";
        se += row.stat == "se";
        CHECK(row.metric == "mse");
    }
    CHECK(raw == 1);
    CHECK(mean == 1);
    CHECK(se == 1);
    // One observation has a mean but no spread.
    CHECK(std::isfinite(find_row(result, "mean", "dse", "mse", 15, -1)->value));
    CHECK(!std::isfinite(find_row(result, "se", "dse", "mse", 15, -1)->value));
}

TEST_CASE("campaigns are deterministic across runs") {
    const ExperimentSpec spec = tiny_compare_spec();
    const std::string a = io::render_csv(lvt::experiment_csv(lvt::run_experiment(spec)));
    const std::string b = io::render_csv(lvt::experiment_csv(lvt::run_experiment(spec)));
    CHECK(a == b);
}

TEST_CASE("removing a grid point leaves the other cells' draws unchanged") {
    ExperimentSpec wide = tiny_compare_spec();
    wide.kind = ExperimentKind::mse_vs_d;
    wide.d_grid = {20, 24};
    ExperimentSpec narrow = wide;
    narrow.d_grid = {20};
    const lvt::ExperimentResult from_wide = lvt::run_experiment(wide);
    const lvt::ExperimentResult from_narrow = lvt::run_experiment(narrow);
    for (long rep = 0; rep < 3; ++rep) {
        const ExperimentRow* a = find_row(from_wide, "raw", "dse", "mse", 20, rep);
        const ExperimentRow* b = find_row(from_narrow, "raw", "dse", "mse", 20, rep);
        REQUIRE(a != nullptr);
        REQUIRE(b != nullptr);
        CHECK(a->value == b->value);
    }
}

TEST_CASE("summary rows are recomputable from the raw rows") {
    ExperimentSpec spec = tiny_compare_spec();
    spec.replicates = 4;
    const lvt::ExperimentResult result = lvt::run_experiment(spec);
    for (const std::string arm : {"hosvd", "dse", "approx-lse"}) {
        std::vector<double> values;
        for (long rep = 0; rep < 4; ++rep) {
            const ExperimentRow* row = find_row(result, "raw", arm, "mse", 20, rep);
            REQUIRE(row != nullptr);
            REQUIRE(row->status == "ok");
            values.push_back(row->value);
        }
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= 4.0;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double se = std::sqrt(ss / 3.0) / 2.0;
        CHECK(find_row(result, "mean", arm, "mse", 20, -1)->value ==
              doctest::Approx(mean).epsilon(1e-12));
        CHECK(find_row(result, "se", arm, "mse", 20, -1)->value ==
              doctest::Approx(se).epsilon(1e-12));
    }
}

TEST_CASE("estimator comparison pairs the draws across its arms") {
    ExperimentSpec spec = tiny_compare_spec();
    spec.d_grid = {30};
    spec.replicates = 5;
    const lvt::ExperimentResult result = lvt::run_experiment(spec);
    for (const std::string arm : {"hosvd", "dse", "approx-lse"}) {
        for (long rep = 0; rep < 5; ++rep) {
            const ExperimentRow* row = find_row(result, "raw", arm, "mse", 30, rep);
            REQUIRE(row != nullptr);
            CHECK(row->status == "ok");
            CHECK(std::isfinite(row->value));
        }
    }
    // Paired draws: every arm of a replicate sees the same noisy tensor,
    // so the dse arm reproduces a dse-only campaign exactly.
    ExperimentSpec solo = spec;
    solo.kind = ExperimentKind::mse_vs_d;
    const lvt::ExperimentResult alone = lvt::run_experiment(solo);
    for (long rep = 0; rep < 5; ++rep) {
        CHECK(find_row(result, "raw", "dse", "mse", 30, rep)->value ==
              find_row(alone, "raw", "dse", "mse", 30, rep)->value);
    }
}

TEST_CASE("estimation error drops as the extent grows") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::mse_vs_d;
    spec.d_grid = {20, 40};
    spec.s_grid = {2};
    spec.rank_constant = 0.5;
    spec.replicates = 3;
    spec.seed = 11;
    const lvt::ExperimentResult result = lvt::run_experiment(spec);
    CHECK(find_row(result, "mean", "dse", "mse", 40, -1)->value <
          find_row(result, "mean", "dse", "mse", 20, -1)->value);
}

TEST_CASE("noiseless rank sweep error is non-increasing in rank") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::denoise_rank_sweep;
    spec.d_grid = {20};
    spec.s_grid = {2};
    spec.gamma_grid = {0.0};
    spec.rank_grid = {2, 4, 6};
    spec.replicates = 1;
    spec.seed = 9;
    const lvt::ExperimentResult result = lvt::run_experiment(spec);
    std::map<std::string, double> by_rank;
    for (const ExperimentRow& row : result.rows) {
        if (row.stat == "mean") {
            CHECK(row.gamma == 0.0);
            by_rank[row.rank] = row.value;
        }
    }
    REQUIRE(by_rank.size() == 3);
    CHECK(by_rank["4"] <= by_rank["2"]);
    CHECK(by_rank["6"] <= by_rank["4"]);
}

TEST_CASE("rank sweep accepts explicit non-cubic extents") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::denoise_rank_sweep;
    spec.sweep_dims = {14, 12, 8};
    spec.s_grid = {2};
    spec.gamma_grid = {0.5};
    spec.rank_grid = {3};
    spec.replicates = 2;
    spec.seed = 4;
    const lvt::ExperimentResult result = lvt::run_experiment(spec);
    for (const ExperimentRow& row : result.rows) {
        CHECK(row.d == 14);
        CHECK(row.rank == "3");
        CHECK(row.status == "ok");
    }
}

TEST_CASE("scan campaigns remap the rank-analysis rows onto the tidy schema") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::logrank_scan;
    spec.d_grid = {12};
    spec.s_grid = {2};
    spec.scan_epsilon = 0.05;
    spec.replicates = 2;
    spec.seed = 7;
    const lvt::ExperimentResult result = lvt::run_experiment(spec);
    std::size_t rank_rows = 0, err_rows = 0;
    for (const ExperimentRow& row : result.rows) {
        if (row.stat != "raw") continue;
        CHECK(row.estimator.empty());
        CHECK(row.d == 12);
        CHECK((row.replicate == 0 || row.replicate == 1));
        rank_rows += row.metric == "rank";
        err_rows += row.metric == "rel_err";
    }
    CHECK(rank_rows == 2);
    CHECK(err_rows == 2);
    const std::string a = io::render_csv(lvt::experiment_csv(result));
    const std::string b = io::render_csv(lvt::experiment_csv(lvt::run_experiment(spec)));
    CHECK(a == b);
}

TEST_CASE("a failing cell is recorded and does not abort the campaign") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::mse_vs_d;
    spec.d_grid = {12};
    spec.s_grid = {2};
    spec.replicates = 2;
    spec.cv_rank = true;
    // Every candidate's rank overshoots the extent, so selection fails.
    spec.cv.c_grid = {1000.0};
    const lvt::ExperimentResult result = lvt::run_experiment(spec);
    REQUIRE(!result.rows.empty());
    for (const ExperimentRow& row : result.rows) {
        if (row.stat == "raw") CHECK(row.status.rfind("failed: ", 0) == 0);
        if (row.stat == "mean") CHECK(row.status == "failed: no finite observations");
        CHECK(!std::isfinite(row.value));
    }
}

TEST_CASE("experiment specs are validated") {
    ExperimentSpec spec;
    spec.model = lvt::ModelId::cp;
    CHECK_THROWS_AS(lvt::run_experiment(spec), std::invalid_argument);
    spec = ExperimentSpec{};
    spec.replicates = 0;
    CHECK_THROWS_AS(lvt::run_experiment(spec), std::invalid_argument);
    spec = ExperimentSpec{};
    spec.d_grid = {};
    CHECK_THROWS_AS(lvt::run_experiment(spec), std::invalid_argument);
    spec = ExperimentSpec{};
    spec.kind = ExperimentKind::denoise_rank_sweep;
    spec.rank_grid = {};
    CHECK_THROWS_AS(lvt::run_experiment(spec), std::invalid_argument);
    CHECK_THROWS_AS(lvt::experiment_kind_from_string("sweep"), std::invalid_argument);
    CHECK(lvt::experiment_kind_from_string("mse-vs-d") == ExperimentKind::mse_vs_d);
    CHECK(lvt::to_string(ExperimentKind::denoise_rank_sweep) == "denoise-rank-sweep");
}

TEST_CASE("experiment csv uses the documented columns and NA sentinels") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::logrank_scan;
    spec.d_grid = {10};
    spec.s_grid = {1};
    spec.scan_epsilon = 0.05;
    spec.replicates = 1;
    const io::CsvTable table = lvt::experiment_csv(lvt::run_experiment(spec));
    CHECK(table.columns ==
          std::vector<std::string>{"kind", "model", "s", "d", "gamma", "rank", "c", "estimator",
                                   "replicate", "metric", "stat", "value", "status"});
    REQUIRE(!table.rows.empty());
    for (const auto& row : table.rows) {
        REQUIRE(row.size() == table.columns.size());
        CHECK(row[0] == "logrank-scan");
        CHECK(row[4] == "NA");
        CHECK(row[7] == "NA");
    }
}

TEST_CASE("denoising a noiseless low-rank file is a near-identity") {
    const std::string in = temp_path("clean.dtf1");
    const std::string out = temp_path("clean_denoised.dtf1");
    const std::string report = temp_path("clean_report.txt");
    const std::string out2 = temp_path("clean_denoised_again.dtf1");
    const std::string report2 = temp_path("clean_report2.txt");
    FileGuard g1{in}, g2{out}, g3{report}, g4{out2}, g5{report2};

    const DenseTensor theta = low_rank_signal({10, 9, 8}, {2, 2, 2}, 5);
    io::write_dtf1(theta, in);
    const lvt::DenoiseReport rep =
        lvt::denoise_file(in, out, RankRule::explicit_ranks({2, 2, 2}), report);
    CHECK(rep.dims == std::vector<std::size_t>{10, 9, 8});
    CHECK(rep.ranks == std::vector<std::size_t>{2, 2, 2});
    CHECK(!std::isfinite(rep.cv_constant));
    const DenseTensor recovered = io::read_dtf1(out);
    CHECK(rel_change(recovered, theta) < 1e-6);
    CHECK(rep.residual < 1e-6 * lvt::frobenius_norm(theta));

    // Denoising the denoised file barely changes it.
    lvt::denoise_file(out, out2, RankRule::explicit_ranks({2, 2, 2}), report2);
    const DenseTensor twice = io::read_dtf1(out2);
    CHECK(rel_change(twice, recovered) < 1e-6);

    std::ifstream report_in(report);
    std::ostringstream report_text;
    report_text << report_in.rdbuf();
    CHECK(report_text.str().find("dims: 10x9x8\n") != std::string::npos);
    CHECK(report_text.str().find("ranks: 2x2x2\n") != std::string::npos);
    CHECK(report_text.str().find("cv_constant: NA\n") != std::string::npos);
    CHECK(report_text.str().find("runtime_seconds: ") != std::string::npos);
}

TEST_CASE("denoising a contaminated tensor beats leaving it alone") {
    const std::string in = temp_path("noisy.dtf1");
    const std::string out = temp_path("noisy_denoised.dtf1");
    const std::string report = temp_path("noisy_report.txt");
    FileGuard g1{in}, g2{out}, g3{report};

    const DenseTensor theta =
        lvt::generate_signal(lvt::make_analytic_model(lvt::ModelId::model1, 2), {20, 20, 20}, 8);
    const double sigma = lvt::noise_sigma_for_level(theta, 1.0);
    const DenseTensor y = lvt::add_noise(theta, {sigma, 13});
    io::write_dtf1(y, in);
    lvt::denoise_file(in, out, RankRule::log_rule(0.5, 2.0), report);
    const DenseTensor denoised = io::read_dtf1(out);
    CHECK(mse_between(denoised, theta) < mse_between(y, theta));
}

TEST_CASE("cross-validated denoising picks a constant from the grid") {
    const std::string in = temp_path("cv.dtf1");
    const std::string out = temp_path("cv_denoised.dtf1");
    const std::string report = temp_path("cv_report.txt");
    FileGuard g1{in}, g2{out}, g3{report};

    const DenseTensor theta = low_rank_signal({16, 16, 16}, {3, 3, 3}, 2);
    const double sigma = lvt::noise_sigma_for_level(theta, 0.3);
    io::write_dtf1(lvt::add_noise(theta, {sigma, 21}), in);
    lvt::CvSelection cv;
    const lvt::DenoiseReport rep = lvt::denoise_file_cv(in, out, cv, 1, 17, report);
    CHECK(std::find(cv.c_grid.begin(), cv.c_grid.end(), rep.cv_constant) != cv.c_grid.end());
    CHECK(io::read_dtf1(out).dims() == theta.dims());
}

TEST_CASE("denoise rejects missing inputs and infeasible explicit ranks") {
    CHECK_THROWS_AS(lvt::denoise_file(temp_path("absent.dtf1"), temp_path("na.dtf1"),
                                      RankRule::explicit_ranks({1, 1, 1}), temp_path("na.txt")),
                    lvt::IoError);

    const std::string in = temp_path("small.dtf1");
    FileGuard g1{in};
    io::write_dtf1(low_rank_signal({6, 6, 6}, {2, 2, 2}, 1), in);
    CHECK_THROWS_AS(lvt::denoise_file(in, temp_path("never.dtf1"),
                                      RankRule::explicit_ranks({9, 9, 9}), temp_path("never.txt")),
                    std::invalid_argument);
}
