#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "lvt/estimators.hpp"
#include "lvt/generators.hpp"
#include "lvt/rank_analysis.hpp"
#include "lvt/rng.hpp"
#include "lvt/tensor.hpp"

using lvt::DenseTensor;
using lvt::EpsilonRankResult;
using lvt::ModelId;
using lvt::RankScanConfig;
using lvt::RankScanRow;
using lvt::SplitMix64;

namespace {

DenseTensor analytic_signal(ModelId id, std::size_t s, std::size_t d, std::uint64_t seed) {
    return lvt::generate_signal(lvt::make_analytic_model(id, s), {d, d, d}, seed);
}

DenseTensor tucker_signal(std::size_t d, std::size_t rank, std::uint64_t seed) {
    SplitMix64 rng(seed);
    DenseTensor core({rank, rank, rank});
    for (std::size_t i = 0; i < core.size(); ++i) core[i] = rng.next_gaussian();
    return lvt::generate_signal(lvt::make_tucker_model(core), {d, d, d}, seed);
}

}  // namespace

TEST_CASE("a rank-one signal has epsilon-rank one at any threshold") {
    const DenseTensor theta = lvt::generate_signal(lvt::make_cp_model({1.5}), {12, 12, 12}, 2);
    for (double eps : {0.5, 1e-6}) {
        const EpsilonRankResult res = lvt::epsilon_rank(theta, eps, 6);
        CHECK(res.found);
        CHECK(res.rank == 1);
        CHECK(res.err_at_rank < 1e-8);
        CHECK(res.error_curve.size() == 1);
    }
}

TEST_CASE("an exact rank-3 signal has epsilon-rank three") {
    const DenseTensor theta = tucker_signal(15, 3, 7);
    const EpsilonRankResult res = lvt::epsilon_rank(theta, 0.01, 10);
    CHECK(res.found);
    CHECK(res.rank == 3);
    CHECK(res.err_at_rank < 1e-8);
    // The scan stops at the crossing, so exactly ranks 1..3 were visited and
    // the earlier fits stay above the threshold.
    REQUIRE(res.error_curve.size() == 3);
    CHECK(res.error_curve[0].second > 0.01);
    CHECK(res.error_curve[1].second > 0.01);
}

TEST_CASE("epsilon-rank input validation") {
    const DenseTensor zero({5, 5, 5});
    CHECK_THROWS_AS(lvt::epsilon_rank(zero, 0.01, 3), std::invalid_argument);
    const DenseTensor theta = tucker_signal(6, 2, 1);
    CHECK_THROWS_AS(lvt::epsilon_rank(theta, 0.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(lvt::epsilon_rank(theta, 1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(lvt::epsilon_rank(theta, -0.5, 3), std::invalid_argument);
    CHECK_THROWS_AS(lvt::epsilon_rank(theta, 0.01, 0), std::invalid_argument);
}

TEST_CASE("the error curve points are the direct rank-r projections") {
    const DenseTensor theta = analytic_signal(ModelId::model1, 2, 12, 3);
    const double norm = lvt::frobenius_norm(theta);
    const EpsilonRankResult res = lvt::epsilon_rank(theta, 1e-10, 5);
    for (const auto& [r, rel] : res.error_curve) {
        const lvt::HooiResult direct = lvt::hooi(theta, {r, r, r});
        const double want = lvt::frobenius_distance(theta, direct.estimate) / norm;
        CHECK(rel == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("the error curve is non-increasing up to solver slack") {
    const DenseTensor theta = analytic_signal(ModelId::model3, 3, 20, 9);
    const EpsilonRankResult res = lvt::epsilon_rank(theta, 1e-13, 8);
    REQUIRE(res.error_curve.size() >= 2);
    for (std::size_t i = 1; i < res.error_curve.size(); ++i) {
        CHECK(res.error_curve[i].second <= res.error_curve[i - 1].second + 1e-6);
    }
}

TEST_CASE("smaller epsilon never yields a smaller rank") {
    const DenseTensor theta = analytic_signal(ModelId::model1, 3, 25, 5);
    std::size_t prev = 0;
    for (double eps : {0.3, 0.1, 0.03, 0.01}) {
        const EpsilonRankResult res = lvt::epsilon_rank(theta, eps, 20);
        REQUIRE(res.found);
        CHECK(res.rank >= prev);
        prev = res.rank;
    }
}

TEST_CASE("an unstructured tensor stays above a tight threshold") {
    DenseTensor y({10, 10, 10});
    SplitMix64 rng(17);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = rng.next_gaussian();
    const EpsilonRankResult res = lvt::epsilon_rank(y, 0.001, 3);
    CHECK_FALSE(res.found);
    CHECK(res.error_curve.size() == 3);
    CHECK(res.err_at_rank > 0.001);
}

TEST_CASE("epsilon-rank is robust to a larger iteration budget") {
    const DenseTensor theta = analytic_signal(ModelId::model1, 5, 100, 13);
    const EpsilonRankResult base = lvt::epsilon_rank(theta, 0.01, 30, {50, 1e-7});
    const EpsilonRankResult hard = lvt::epsilon_rank(theta, 0.01, 30, {100, 1e-7});
    REQUIRE(base.found);
    REQUIRE(hard.found);
    CHECK(base.rank == hard.rank);
    CHECK(base.rank < 25);
}

TEST_CASE("a single-cell scan yields a single ok row") {
    RankScanConfig config;
    config.models = {ModelId::model1};
    config.s_grid = {1};
    config.d_grid = {20};
    config.seeds = {5};
    config.epsilon = 0.01;
    config.r_max = 10;
    const std::vector<RankScanRow> rows = lvt::logrank_scan(config);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].status == "ok");
    CHECK(rows[0].rank >= 1);
    CHECK(rows[0].d == 20);
    CHECK(rows[0].s == 1);
    CHECK(rows[0].seed == 5);
    CHECK(rows[0].rel_err <= 0.01);
}

TEST_CASE("scan rows come back sorted and deterministic") {
    RankScanConfig config;
    config.models = {ModelId::model2, ModelId::model1};
    config.s_grid = {2, 1};
    config.d_grid = {12, 8};
    config.seeds = {3, 1};
    config.epsilon = 0.05;
    config.r_max = 8;
    config.threads = 3;
    const std::vector<RankScanRow> a = lvt::logrank_scan(config);
    REQUIRE(a.size() == 16);
    for (std::size_t i = 1; i < a.size(); ++i) {
        const auto key = [](const RankScanRow& r) {
            return std::make_tuple(static_cast<int>(r.model), r.s, r.d, r.seed);
        };
        CHECK(key(a[i - 1]) < key(a[i]));
    }
    config.threads = 1;
    const std::vector<RankScanRow> b = lvt::logrank_scan(config);
    REQUIRE(b.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].rank == b[i].rank);
        CHECK(a[i].rel_err == b[i].rel_err);
        CHECK(a[i].status == b[i].status);
    }
}

TEST_CASE("scan cells are independent of the surrounding grid") {
    RankScanConfig wide;
    wide.models = {ModelId::model1};
    wide.s_grid = {1, 2};
    wide.d_grid = {10, 14};
    wide.seeds = {9};
    wide.epsilon = 0.05;
    wide.r_max = 8;
    RankScanConfig narrow = wide;
    narrow.s_grid = {2};
    narrow.d_grid = {14};
    const std::vector<RankScanRow> all = lvt::logrank_scan(wide);
    const std::vector<RankScanRow> one = lvt::logrank_scan(narrow);
    REQUIRE(one.size() == 1);
    bool matched = false;
    for (const RankScanRow& row : all) {
        if (row.s == 2 && row.d == 14) {
            CHECK(row.rank == one[0].rank);
            CHECK(row.rel_err == one[0].rel_err);
            matched = true;
        }
    }
    CHECK(matched);
}

TEST_CASE("scan config validation") {
    RankScanConfig config;
    config.s_grid = {1};
    config.d_grid = {10};
    config.seeds = {1};
    config.r_max = 11;
    CHECK_THROWS_AS(lvt::logrank_scan(config), std::invalid_argument);
    config.r_max = 5;
    config.epsilon = 1.5;
    CHECK_THROWS_AS(lvt::logrank_scan(config), std::invalid_argument);
    config.epsilon = 0.01;
    config.models = {ModelId::cp};
    CHECK_THROWS_AS(lvt::logrank_scan(config), std::invalid_argument);
    config.models = {ModelId::model1};
    config.seeds = {};
    CHECK_THROWS_AS(lvt::logrank_scan(config), std::invalid_argument);
}

TEST_CASE("rank scan csv uses the fixed schema with NA for missing ranks") {
    RankScanRow ok;
    ok.model = ModelId::model1;
    ok.s = 5;
    ok.d = 20;
    ok.seed = 1;
    ok.epsilon = 0.01;
    ok.found = true;
    ok.rank = 4;
    ok.rel_err = 0.0075;
    ok.status = "ok";
    RankScanRow missing = ok;
    missing.found = false;
    missing.rank = 0;
    missing.status = "not-found";
    RankScanRow failed = ok;
    failed.found = false;
    failed.rel_err = std::nan("");
    failed.status = "failed: boom";

    const lvt::io::CsvTable table = lvt::rank_scan_csv({ok, missing, failed});
    CHECK(table.columns ==
          std::vector<std::string>{"model", "s", "d", "seed", "epsilon", "rank", "rel_err"});
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0][0] == "model1");
    CHECK(table.rows[0][5] == "4");
    CHECK(table.rows[0][6] == lvt::io::format_double(0.0075));
    CHECK(table.rows[1][5] == "NA");
    CHECK(table.rows[1][6] == lvt::io::format_double(0.0075));
    CHECK(table.rows[2][5] == "NA");
    CHECK(table.rows[2][6] == "NA");
}
