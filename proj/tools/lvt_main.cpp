#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "lvt/clustering.hpp"
#include "lvt/errors.hpp"
#include "lvt/estimators.hpp"
#include "lvt/experiments.hpp"
#include "lvt/generators.hpp"
#include "lvt/io.hpp"
#include "lvt/rank_analysis.hpp"
#include "lvt/rng.hpp"
#include "lvt/tensor.hpp"

namespace {

namespace io = lvt::io;

/// Resolves a knob against the precedence chain: explicit flag beats config
/// file beats built-in default.
template <typename T, typename Load>
void config_override(bool flag_given, const io::KeyValueConfig& config, const std::string& key,
                     T& value, Load load) {
    if (!flag_given && config.has(key)) value = load(key);
}

io::KeyValueConfig load_config(const std::string& path) {
    if (path.empty()) return io::KeyValueConfig::parse_string("");
    return io::KeyValueConfig::parse_file(path);
}

std::vector<std::size_t> even_grid(std::size_t from, std::size_t to, std::size_t step) {
    std::vector<std::size_t> grid;
    for (std::size_t v = from; v <= to; v += step) grid.push_back(v);
    return grid;
}

/// The ci profile bounds runtime for automated runs: extents above 60 are
/// dropped and replicates are capped at 5. The full profile runs grids as
/// given, with figure-scale defaults.
void apply_profile(const std::string& profile, std::vector<std::size_t>& d_grid,
                   std::size_t& replicates) {
    if (profile == "full") return;
    if (profile != "ci") throw std::invalid_argument("profile must be ci or full");
    std::vector<std::size_t> kept;
    for (std::size_t d : d_grid) {
        if (d <= 60) kept.push_back(d);
    }
    if (kept.empty()) {
        throw std::invalid_argument("the ci profile caps extents at 60; pass --profile full");
    }
    if (kept.size() != d_grid.size()) {
        std::fprintf(stderr, "note: ci profile dropped extents above 60\n");
    }
    d_grid = std::move(kept);
    if (replicates > 5) {
        std::fprintf(stderr, "note: ci profile capped replicates at 5\n");
        replicates = 5;
    }
}

/// Builds the rank rule from the two mutually exclusive flag families:
/// explicit per-mode ranks, or the log rule with constant c and exponent s.
lvt::RankRule make_rule(const std::vector<std::size_t>& ranks, bool c_given, double c,
                        double exponent) {
    if (!ranks.empty() && c_given) {
        throw std::invalid_argument("--rank and --rank-c are mutually exclusive");
    }
    if (!ranks.empty()) return lvt::RankRule::explicit_ranks(ranks);
    return lvt::RankRule::log_rule(c_given ? c : 1.0, exponent);
}

std::string join_sizes(const std::vector<std::size_t>& values, char sep) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += sep;
        out += std::to_string(values[i]);
    }
    return out;
}

int run_generate(const std::string& config_path, bool model_given, std::string model_name,
                 bool d_given, std::vector<std::size_t> dims, bool s_given, std::size_t s,
                 bool gamma_given, double gamma, bool link_given, std::string link,
                 bool seed_given, std::uint64_t seed, bool out_given, std::string out) {
    const io::KeyValueConfig config = load_config(config_path);
    config_override(model_given, config, "model", model_name,
                    [&](const std::string& k) { return config.get_string(k); });
    config_override(d_given, config, "d", dims,
                    [&](const std::string& k) { return config.get_size_list(k); });
    config_override(s_given, config, "s", s,
                    [&](const std::string& k) { return static_cast<std::size_t>(config.get_int(k)); });
    config_override(gamma_given, config, "gamma", gamma,
                    [&](const std::string& k) { return config.get_double(k); });
    config_override(link_given, config, "link", link,
                    [&](const std::string& k) { return config.get_string(k); });
    config_override(seed_given, config, "seed", seed,
                    [&](const std::string& k) { return static_cast<std::uint64_t>(config.get_int(k)); });
    config_override(out_given, config, "out", out,
                    [&](const std::string& k) { return config.get_string(k); });
    if (out.empty()) throw std::invalid_argument("an output path is required (--out or config)");
    if (dims.size() == 1) dims.assign(3, dims.front());

    lvt::LatentModel model = lvt::make_analytic_model(lvt::model_from_string(model_name), s);
    if (link == "logistic") {
        model.link = lvt::LinkKind::logistic;
    } else if (link != "identity") {
        throw std::invalid_argument("link must be identity or logistic");
    }
    lvt::DenseTensor tensor = lvt::generate_signal(model, dims, seed);
    if (gamma > 0.0) {
        const double sigma = lvt::noise_sigma_for_level(tensor, gamma);
        tensor = lvt::add_noise(tensor, {sigma, lvt::derive_seed(seed, {1})});
    }
    io::write_dtf1(tensor, out);
    std::fprintf(stderr, "wrote %s tensor %s to %s\n", model_name.c_str(),
                 join_sizes(dims, 'x').c_str(), out.c_str());
    return 0;
}

int run_bench(const std::string& config_path, bool kind_given, std::string kind_name,
              bool model_given, std::string model_name, bool d_given,
              std::vector<std::size_t> d_grid, bool s_given, std::vector<std::size_t> s_grid,
              bool gamma_given, std::vector<double> gamma_grid, bool rank_given,
              std::vector<std::size_t> rank_grid, bool c_given, double rank_c, bool cv,
              bool replicates_given, std::size_t replicates, bool seed_given, std::uint64_t seed,
              bool profile_given, std::string profile, bool out_given, std::string out) {
    const io::KeyValueConfig config = load_config(config_path);
    config_override(kind_given, config, "kind", kind_name,
                    [&](const std::string& k) { return config.get_string(k); });
    config_override(model_given, config, "model", model_name,
                    [&](const std::string& k) { return config.get_string(k); });
    config_override(d_given, config, "d", d_grid,
                    [&](const std::string& k) { return config.get_size_list(k); });
    d_given = d_given || config.has("d");
    config_override(s_given, config, "s", s_grid,
                    [&](const std::string& k) { return config.get_size_list(k); });
    config_override(gamma_given, config, "gamma", gamma_grid,
                    [&](const std::string& k) { return config.get_double_list(k); });
    config_override(rank_given, config, "rank", rank_grid,
                    [&](const std::string& k) { return config.get_size_list(k); });
    rank_given = rank_given || config.has("rank");
    if (!c_given && config.has("rank_c")) {
        rank_c = config.get_double("rank_c");
        c_given = true;
    }
    cv = cv || (config.has("cv") && config.get_int("cv") != 0);
    config_override(replicates_given, config, "replicates", replicates, [&](const std::string& k) {
        return static_cast<std::size_t>(config.get_int(k));
    });
    replicates_given = replicates_given || config.has("replicates");
    config_override(seed_given, config, "seed", seed, [&](const std::string& k) {
        return static_cast<std::uint64_t>(config.get_int(k));
    });
    config_override(profile_given, config, "profile", profile,
                    [&](const std::string& k) { return config.get_string(k); });
    config_override(out_given, config, "out", out,
                    [&](const std::string& k) { return config.get_string(k); });
    if (out.empty()) throw std::invalid_argument("an output path is required (--out or config)");

    const bool full = profile == "full";
    if (!replicates_given) replicates = full ? 20 : 5;
    if (!d_given) d_grid = full ? even_grid(20, 200, 20) : std::vector<std::size_t>{20, 40, 60};
    if (!rank_given) rank_grid = full ? even_grid(3, 60, 3) : even_grid(3, 15, 3);
    apply_profile(profile, d_grid, replicates);

    std::vector<lvt::ExperimentKind> kinds;
    if (kind_name == "all") {
        kinds = {lvt::ExperimentKind::mse_vs_d, lvt::ExperimentKind::estimator_compare,
                 lvt::ExperimentKind::denoise_rank_sweep};
    } else {
        kinds = {lvt::experiment_kind_from_string(kind_name)};
    }

    lvt::ExperimentResult combined;
    for (lvt::ExperimentKind kind : kinds) {
        lvt::ExperimentSpec spec;
        spec.kind = kind;
        spec.model = lvt::model_from_string(model_name);
        spec.s_grid = s_grid;
        spec.gamma_grid = gamma_grid;
        spec.rank_grid = rank_grid;
        spec.rank_constant = c_given ? rank_c : 1.0;
        spec.cv_rank = cv;
        spec.replicates = replicates;
        spec.seed = seed;
        if (kind == lvt::ExperimentKind::denoise_rank_sweep) {
            // The sweep works on one fixed signal: a single --d value means
            // a cubic tensor, three values are the exact extents.
            if (d_grid.size() == 3) {
                spec.sweep_dims = d_grid;
            } else if (d_grid.size() == 1) {
                spec.sweep_dims.assign(3, d_grid.front());
            } else {
                spec.sweep_dims.assign(3, d_grid.front());
                std::fprintf(stderr, "note: rank sweep uses the first extent %zu cubically\n",
                             d_grid.front());
            }
        } else {
            spec.d_grid = d_grid;
        }
        lvt::ExperimentResult result = lvt::run_experiment(spec);
        for (lvt::ExperimentRow& row : result.rows) combined.rows.push_back(std::move(row));
    }
    io::write_csv(lvt::experiment_csv(combined), out);
    std::fprintf(stderr, "wrote %zu rows to %s\n", combined.rows.size(), out.c_str());
    return 0;
}

int run_rank_scan(std::vector<std::string> model_names, std::vector<std::size_t> s_grid,
                  std::vector<std::size_t> d_grid, bool d_given, double epsilon,
                  std::size_t r_max, std::size_t replicates, bool replicates_given,
                  std::uint64_t seed, const std::string& profile, const std::string& out) {
    const bool full = profile == "full";
    if (!d_given) d_grid = full ? even_grid(20, 200, 20) : std::vector<std::size_t>{12, 24, 36};
    if (!replicates_given) replicates = 3;
    apply_profile(profile, d_grid, replicates);

    lvt::RankScanConfig config;
    config.models.clear();
    for (const std::string& name : model_names) {
        config.models.push_back(lvt::model_from_string(name));
    }
    config.s_grid = s_grid;
    config.d_grid = d_grid;
    config.epsilon = epsilon;
    const std::size_t d_min = *std::min_element(d_grid.begin(), d_grid.end());
    config.r_max = r_max > 0 ? r_max : std::max<std::size_t>(d_min / 2, 1);
    for (std::size_t rep = 0; rep < replicates; ++rep) {
        config.seeds.push_back(lvt::derive_seed(seed, {rep}));
    }
    io::write_csv(lvt::rank_scan_csv(lvt::logrank_scan(config)), out);
    std::fprintf(stderr, "wrote scan of %zu cells to %s\n",
                 config.models.size() * s_grid.size() * d_grid.size() * replicates, out.c_str());
    return 0;
}

int run_denoise(const std::string& input, const std::vector<std::size_t>& ranks, bool c_given,
                double rank_c, double exponent, bool cv, std::size_t folds, std::uint64_t seed,
                const std::string& out, std::string report_path) {
    if (report_path.empty()) report_path = out + ".report.txt";
    lvt::DenoiseReport report;
    if (cv) {
        if (!ranks.empty() || c_given) {
            throw std::invalid_argument("--cv replaces --rank/--rank-c");
        }
        lvt::CvSelection cv_params;
        cv_params.folds = folds;
        report = lvt::denoise_file_cv(input, out, cv_params,
                                      static_cast<std::size_t>(exponent), seed, report_path);
    } else {
        report = lvt::denoise_file(input, out, make_rule(ranks, c_given, rank_c, exponent),
                                   report_path);
    }
    std::fprintf(stderr, "denoised %s at ranks %s in %.2fs; report at %s\n", input.c_str(),
                 join_sizes(report.ranks, 'x').c_str(), report.runtime_seconds,
                 report_path.c_str());
    return 0;
}

int run_cluster(const std::string& input, std::size_t mode_1based, std::size_t k,
                const std::vector<std::size_t>& ranks, bool c_given, double rank_c,
                double exponent, std::size_t restarts, bool no_refine, std::uint64_t seed,
                const std::string& out) {
    if (mode_1based < 1) throw std::invalid_argument("modes are numbered from 1");
    const lvt::DenseTensor y = io::read_dtf1(input);
    lvt::ClusterModeParams params;
    params.kmeans_restarts = restarts;
    params.hooi_refine = !no_refine;
    params.seed = seed;
    const lvt::ClusterModeResult result =
        lvt::cluster_mode(y, make_rule(ranks, c_given, rank_c, exponent), mode_1based - 1, k,
                          params);
    io::write_csv(lvt::assignment_csv(result.assignment), out);
    std::fprintf(stderr, "clustered mode %zu into %zu groups (wcss %.6g) at ranks %s; wrote %s\n",
                 mode_1based, k, result.assignment.wcss, join_sizes(result.ranks, 'x').c_str(),
                 out.c_str());
    return 0;
}

int run_cv_rank(const std::string& input, const std::vector<double>& c_grid, std::size_t exponent,
                std::size_t folds, std::uint64_t seed, const std::string& out) {
    const lvt::DenseTensor y = io::read_dtf1(input);
    const lvt::CvResult result = lvt::select_rank_cv(y, c_grid, exponent, folds, seed);
    io::CsvTable table;
    table.columns = {"c", "ranks", "score", "status"};
    for (const lvt::CvEntry& entry : result.table) {
        table.rows.push_back({io::format_double(entry.c),
                              entry.ranks.empty() ? "NA" : join_sizes(entry.ranks, 'x'),
                              std::isfinite(entry.score) ? io::format_double(entry.score) : "NA",
                              entry.status});
    }
    io::write_csv(table, out);
    std::fprintf(stderr, "selected c=%g (ranks %s); wrote %s\n", result.best_c,
                 join_sizes(result.ranks, 'x').c_str(), out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-variable tensor estimation toolkit"};
    app.require_subcommand(1);
    int status = 0;

    // generate: analytic model to DTF1, optionally noise-contaminated.
    auto* gen = app.add_subcommand("generate", "Generate a model tensor as a DTF1 file");
    std::string gen_config, gen_model = "model1", gen_link = "identity", gen_out;
    std::vector<std::size_t> gen_dims{20, 20, 20};
    std::size_t gen_s = 2;
    double gen_gamma = 0.0;
    std::uint64_t gen_seed = 0;
    gen->add_option("--config", gen_config, "Key-value config file; flags override it");
    gen->add_option("--model", gen_model, "Analytic model: model1, model2, or model3");
    gen->add_option("--d", gen_dims, "Extents: one value (cubic) or one per mode");
    gen->add_option("--s", gen_s, "Latent dimension");
    gen->add_option("--gamma", gen_gamma, "Relative noise level; 0 writes the clean signal");
    gen->add_option("--link", gen_link, "Entrywise link: identity or logistic");
    gen->add_option("--seed", gen_seed, "Base seed");
    gen->add_option("--out", gen_out, "Output DTF1 path");
    gen->callback([&] {
        status = run_generate(gen_config, gen->count("--model") > 0, gen_model,
                              gen->count("--d") > 0, gen_dims, gen->count("--s") > 0, gen_s,
                              gen->count("--gamma") > 0, gen_gamma, gen->count("--link") > 0,
                              gen_link, gen->count("--seed") > 0, gen_seed,
                              gen->count("--out") > 0, gen_out);
    });

    // bench: Monte-Carlo campaigns to tidy CSV.
    auto* bench = app.add_subcommand("bench", "Run an estimation campaign and write tidy CSV");
    std::string bench_config, bench_kind = "mse-vs-d", bench_model = "model1";
    std::string bench_profile = "ci", bench_out;
    std::vector<std::size_t> bench_d, bench_s{2}, bench_ranks;
    std::vector<double> bench_gammas{0.0, 0.5, 1.0};
    double bench_c = 1.0;
    bool bench_cv = false;
    std::size_t bench_replicates = 5;
    std::uint64_t bench_seed = 0;
    bench->add_option("--config", bench_config, "Key-value config file; flags override it");
    bench->add_option("--kind", bench_kind,
                      "mse-vs-d, estimator-compare, denoise-rank-sweep, logrank-scan, or all");
    bench->add_option("--model", bench_model, "Analytic model: model1, model2, or model3");
    bench->add_option("--d", bench_d, "Extent grid (rank sweeps: 1 cubic or 3 exact extents)");
    bench->add_option("--s", bench_s, "Latent dimension grid");
    bench->add_option("--gamma", bench_gammas, "Noise level grid for rank sweeps");
    bench->add_option("--rank", bench_ranks, "Swept approximation ranks");
    bench->add_option("--rank-c", bench_c, "Rank rule constant c in ceil(c ln^s d)");
    bench->add_flag("--cv", bench_cv, "Select the constant per cell by cross-validation");
    bench->add_option("--replicates", bench_replicates, "Monte-Carlo replicates per cell");
    bench->add_option("--seed", bench_seed, "Base seed");
    bench->add_option("--profile", bench_profile, "ci (bounded grids) or full (figure scale)");
    bench->add_option("--out", bench_out, "Output CSV path");
    bench->callback([&] {
        status = run_bench(bench_config, bench->count("--kind") > 0, bench_kind,
                           bench->count("--model") > 0, bench_model, bench->count("--d") > 0,
                           bench_d, bench->count("--s") > 0, bench_s,
                           bench->count("--gamma") > 0, bench_gammas,
                           bench->count("--rank") > 0, bench_ranks,
                           bench->count("--rank-c") > 0, bench_c, bench_cv,
                           bench->count("--replicates") > 0, bench_replicates,
                           bench->count("--seed") > 0, bench_seed,
                           bench->count("--profile") > 0, bench_profile,
                           bench->count("--out") > 0, bench_out);
    });

    // rank-scan: epsilon-rank growth curves.
    auto* scan = app.add_subcommand("rank-scan", "Scan the epsilon-rank over a model grid");
    std::vector<std::string> scan_models{"model1"};
    std::vector<std::size_t> scan_s{2}, scan_d;
    double scan_epsilon = 0.01;
    std::size_t scan_r_max = 0, scan_replicates = 3;
    std::uint64_t scan_seed = 0;
    std::string scan_profile = "ci", scan_out;
    scan->add_option("--model", scan_models, "Analytic models to scan");
    scan->add_option("--s", scan_s, "Latent dimension grid");
    scan->add_option("--d", scan_d, "Extent grid");
    scan->add_option("--epsilon", scan_epsilon, "Relative-error threshold in (0,1)");
    scan->add_option("--r-max", scan_r_max, "Largest rank to scan; 0 means half the extent");
    scan->add_option("--replicates", scan_replicates, "Seeds per cell");
    scan->add_option("--seed", scan_seed, "Base seed");
    scan->add_option("--profile", scan_profile, "ci (bounded grids) or full (figure scale)");
    scan->add_option("--out", scan_out, "Output CSV path")->required();
    scan->callback([&] {
        status = run_rank_scan(scan_models, scan_s, scan_d, scan->count("--d") > 0, scan_epsilon,
                               scan_r_max, scan_replicates, scan->count("--replicates") > 0,
                               scan_seed, scan_profile, scan_out);
    });

    // denoise: DTF1 in, DTF1 plus report out.
    auto* den = app.add_subcommand("denoise", "Estimate the signal in a DTF1 tensor");
    std::string den_input, den_out, den_report;
    std::vector<std::size_t> den_ranks;
    double den_c = 1.0, den_s = 1.0;
    bool den_cv = false;
    std::size_t den_folds = 5;
    std::uint64_t den_seed = 0;
    den->add_option("input", den_input, "Input DTF1 path")->required();
    den->add_option("--rank", den_ranks, "Explicit ranks: one value or one per mode");
    den->add_option("--rank-c", den_c, "Rank rule constant c in ceil(c ln^s d)");
    den->add_option("--s", den_s, "Rank rule exponent s");
    den->add_flag("--cv", den_cv, "Cross-validate the constant instead");
    den->add_option("--folds", den_folds, "Cross-validation folds");
    den->add_option("--seed", den_seed, "Seed for cross-validation folds");
    den->add_option("--out", den_out, "Output DTF1 path")->required();
    den->add_option("--report", den_report, "Report path; default <out>.report.txt");
    den->callback([&] {
        std::vector<std::size_t> ranks = den_ranks;
        if (ranks.size() == 1) ranks.assign(3, ranks.front());
        status = run_denoise(den_input, ranks, den->count("--rank-c") > 0, den_c, den_s, den_cv,
                             den_folds, den_seed, den_out, den_report);
    });

    // cluster: group one mode's indices by their estimated components.
    auto* clu = app.add_subcommand("cluster", "Cluster one mode of a DTF1 tensor");
    std::string clu_input, clu_out;
    std::size_t clu_mode = 1, clu_k = 2, clu_restarts = 8;
    std::vector<std::size_t> clu_ranks;
    double clu_c = 1.0, clu_s = 1.0;
    bool clu_no_refine = false;
    std::uint64_t clu_seed = 0;
    clu->add_option("input", clu_input, "Input DTF1 path")->required();
    clu->add_option("--mode", clu_mode, "Mode to cluster, numbered from 1");
    clu->add_option("--k", clu_k, "Number of clusters")->required();
    clu->add_option("--rank", clu_ranks, "Explicit ranks: one value or one per mode");
    clu->add_option("--rank-c", clu_c, "Rank rule constant c in ceil(c ln^s d)");
    clu->add_option("--s", clu_s, "Rank rule exponent s");
    clu->add_option("--restarts", clu_restarts, "k-means restarts");
    clu->add_flag("--no-refine", clu_no_refine, "Skip the alternating refinement sweeps");
    clu->add_option("--seed", clu_seed, "Clustering seed");
    clu->add_option("--out", clu_out, "Output labels CSV path")->required();
    clu->callback([&] {
        std::vector<std::size_t> ranks = clu_ranks;
        if (ranks.size() == 1) ranks.assign(3, ranks.front());
        status = run_cluster(clu_input, clu_mode, clu_k, ranks, clu->count("--rank-c") > 0,
                             clu_c, clu_s, clu_restarts, clu_no_refine, clu_seed, clu_out);
    });

    // cv-rank: the cross-validation table for the rank-rule constant.
    auto* cvr = app.add_subcommand("cv-rank", "Cross-validate the rank rule constant");
    std::string cvr_input, cvr_out;
    std::vector<double> cvr_grid{0.5, 1.0, 2.0, 4.0};
    std::size_t cvr_s = 1, cvr_folds = 5;
    std::uint64_t cvr_seed = 0;
    cvr->add_option("input", cvr_input, "Input DTF1 path")->required();
    cvr->add_option("--c", cvr_grid, "Candidate constants");
    cvr->add_option("--s", cvr_s, "Rank rule exponent s");
    cvr->add_option("--folds", cvr_folds, "Cross-validation folds");
    cvr->add_option("--seed", cvr_seed, "Seed for fold assignment");
    cvr->add_option("--out", cvr_out, "Output CSV path")->required();
    cvr->callback([&] {
        status = run_cv_rank(cvr_input, cvr_grid, cvr_s, cvr_folds, cvr_seed, cvr_out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const lvt::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const lvt::NumericalError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return status;
}
