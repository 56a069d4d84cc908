#include "lvt/generators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lvt/rng.hpp"

namespace lvt {

namespace {

using LatentList = std::vector<std::vector<double>>;

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Dense pairwise squared-distance table between two latent lists, row index
// from `a`, column index from `b`.
std::vector<double> distance_table(const LatentList& a, const LatentList& b) {
    std::vector<double> table(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            table[i * b.size() + j] = squared_distance(a[i], b[j]);
        }
    }
    return table;
}

void check_latent_shape(const LatentModel& model, const std::vector<std::size_t>& dims,
                        const std::vector<std::size_t>& latent_dims) {
    if (model.latent_vectors.size() != dims.size()) {
        throw std::invalid_argument("latent vector lists do not cover every mode");
    }
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (model.latent_vectors[k].size() != dims[k]) {
            throw std::invalid_argument("mode " + std::to_string(k + 1) + " has " +
                                        std::to_string(model.latent_vectors[k].size()) +
                                        " latent vectors but extent " + std::to_string(dims[k]));
        }
        for (const auto& vec : model.latent_vectors[k]) {
            if (vec.size() != latent_dims[k]) {
                throw std::invalid_argument("latent vector length does not match the declared "
                                            "latent dimension at mode " +
                                            std::to_string(k + 1));
            }
        }
    }
}

// Supplies latent vectors for every mode: the model's own when present,
// otherwise Unif[0,1]^s draws from the seed. Equal-extent analytic models
// share one draw across modes, matching the single-index sampling scheme.
std::vector<LatentList> resolve_latents(const LatentModel& model,
                                        const std::vector<std::size_t>& dims,
                                        const std::vector<std::size_t>& latent_dims,
                                        std::uint64_t seed, bool share_across_modes) {
    if (!model.latent_vectors.empty()) {
        check_latent_shape(model, dims, latent_dims);
        return model.latent_vectors;
    }
    std::vector<LatentList> out(dims.size());
    bool all_equal = share_across_modes;
    for (std::size_t k = 1; k < dims.size() && all_equal; ++k) {
        all_equal = dims[k] == dims[0] && latent_dims[k] == latent_dims[0];
    }
    if (all_equal && share_across_modes) {
        const LatentList shared =
            sample_latents(dims[0], latent_dims[0], LatentDistribution::unif01, seed);
        for (auto& list : out) list = shared;
        return out;
    }
    for (std::size_t k = 0; k < dims.size(); ++k) {
        out[k] = sample_latents(dims[k], latent_dims[k], LatentDistribution::unif01,
                                derive_seed(seed, {k}));
    }
    return out;
}

DenseTensor generate_analytic(const LatentModel& model, const std::vector<std::size_t>& dims,
                              std::uint64_t seed) {
    if (dims.size() != 3) {
        throw std::invalid_argument("analytic models are defined for order-3 tensors");
    }
    const std::size_t s = model.latent_dim;
    const std::vector<std::size_t> latent_dims(3, s);
    const std::vector<LatentList> latents = resolve_latents(model, dims, latent_dims, seed, true);

    const std::vector<double> d01 = distance_table(latents[0], latents[1]);
    const std::vector<double> d12 = distance_table(latents[1], latents[2]);
    const std::vector<double> d02 = distance_table(latents[0], latents[2]);

    DenseTensor theta(dims);
    double* out = theta.data();
    const std::size_t n1 = dims[1], n2 = dims[2];
    for (std::size_t i0 = 0; i0 < dims[0]; ++i0) {
        const double* row01 = d01.data() + i0 * n1;
        const double* row02 = d02.data() + i0 * n2;
        for (std::size_t i1 = 0; i1 < n1; ++i1) {
            const double* row12 = d12.data() + i1 * n2;
            const double base = row01[i1];
            for (std::size_t i2 = 0; i2 < n2; ++i2) {
                const double g = (base + row12[i2] + row02[i2]) / 3.0;
                double v = 0.0;
                switch (model.function_id) {
                    case ModelId::model1: v = std::exp(-g); break;
                    case ModelId::model2: v = std::cos(g); break;
                    default: v = std::log1p(g); break;
                }
                *out++ = v;
            }
        }
    }
    return theta;
}

DenseTensor generate_cp(const LatentModel& model, const std::vector<std::size_t>& dims,
                        std::uint64_t seed) {
    const std::size_t s = model.cp_weights.size();
    if (s == 0) throw std::invalid_argument("cp model needs at least one weight");
    for (double w : model.cp_weights) {
        if (!(w > 0.0)) throw std::invalid_argument("cp weights must be positive");
    }
    const std::vector<std::size_t> latent_dims(dims.size(), s);
    const std::vector<LatentList> latents = resolve_latents(model, dims, latent_dims, seed, false);

    DenseTensor theta(dims);
    std::vector<std::size_t> idx(dims.size(), 0);
    for (std::size_t flat = 0; flat < theta.size(); ++flat) {
        double acc = 0.0;
        for (std::size_t r = 0; r < s; ++r) {
            double prod = model.cp_weights[r];
            for (std::size_t k = 0; k < dims.size(); ++k) prod *= latents[k][idx[k]][r];
            acc += prod;
        }
        theta[flat] = acc;
        for (std::size_t p = dims.size(); p-- > 0;) {
            if (++idx[p] < dims[p]) break;
            idx[p] = 0;
        }
    }
    return theta;
}

DenseTensor generate_tucker(const LatentModel& model, const std::vector<std::size_t>& dims,
                            std::uint64_t seed) {
    const DenseTensor& core = model.tucker_core;
    if (core.order() != dims.size()) {
        throw std::invalid_argument("tucker core order does not match the requested extents");
    }
    const std::vector<LatentList> latents = resolve_latents(model, dims, core.dims(), seed, false);
    std::vector<Matrix> factors;
    factors.reserve(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
        Matrix a(dims[k], core.dim(k));
        for (std::size_t i = 0; i < dims[k]; ++i)
            for (std::size_t j = 0; j < core.dim(k); ++j) a.at(i, j) = latents[k][i][j];
        factors.push_back(std::move(a));
    }
    std::vector<ModeFactor> mode_factors;
    mode_factors.reserve(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) mode_factors.push_back({k, factors[k]});
    return multilinear_multiply(core, mode_factors);
}

DenseTensor generate_chc(const LatentModel& model, const std::vector<std::size_t>& dims) {
    if (model.chc_index_sets.size() != dims.size()) {
        throw std::invalid_argument("chc model needs one index set per mode");
    }
    for (std::size_t k = 0; k < dims.size(); ++k) {
        const auto& set = model.chc_index_sets[k];
        if (set.empty()) throw std::invalid_argument("chc index sets must be nonempty");
        for (std::size_t i : set) {
            if (i >= dims[k]) {
                throw std::invalid_argument("chc index out of range at mode " + std::to_string(k + 1));
            }
        }
    }
    DenseTensor theta(dims);
    std::vector<std::size_t> pick(dims.size(), 0);
    for (;;) {
        std::vector<std::size_t> idx(dims.size());
        for (std::size_t k = 0; k < dims.size(); ++k) idx[k] = model.chc_index_sets[k][pick[k]];
        theta.at(idx) = model.chc_amplitude;
        std::size_t p = dims.size();
        while (p-- > 0) {
            if (++pick[p] < model.chc_index_sets[p].size()) break;
            pick[p] = 0;
            if (p == 0) return theta;
        }
    }
}

}  // namespace

ModelId model_from_string(const std::string& name) {
    if (name == "model1") return ModelId::model1;
    if (name == "model2") return ModelId::model2;
    if (name == "model3") return ModelId::model3;
    if (name == "cp") return ModelId::cp;
    if (name == "tucker") return ModelId::tucker;
    if (name == "chc") return ModelId::chc;
    throw std::invalid_argument("unknown model '" + name +
                                "' (expected model1, model2, model3, cp, tucker, or chc)");
}

std::string to_string(ModelId id) {
    switch (id) {
        case ModelId::model1: return "model1";
        case ModelId::model2: return "model2";
        case ModelId::model3: return "model3";
        case ModelId::cp: return "cp";
        case ModelId::tucker: return "tucker";
        case ModelId::chc: return "chc";
    }
    throw std::invalid_argument("unknown model id");
}

LatentModel make_analytic_model(ModelId id, std::size_t latent_dim) {
    if (id != ModelId::model1 && id != ModelId::model2 && id != ModelId::model3) {
        throw std::invalid_argument("make_analytic_model expects model1, model2, or model3");
    }
    if (latent_dim < 1) throw std::invalid_argument("latent dimension must be at least 1");
    LatentModel m;
    m.function_id = id;
    m.latent_dim = latent_dim;
    return m;
}

LatentModel make_cp_model(std::vector<double> weights) {
    LatentModel m;
    m.function_id = ModelId::cp;
    m.latent_dim = weights.size();
    m.cp_weights = std::move(weights);
    if (m.cp_weights.empty()) throw std::invalid_argument("cp model needs at least one weight");
    for (double w : m.cp_weights) {
        if (!(w > 0.0)) throw std::invalid_argument("cp weights must be positive");
    }
    return m;
}

LatentModel make_tucker_model(DenseTensor core) {
    LatentModel m;
    m.function_id = ModelId::tucker;
    m.latent_dim = core.order() > 0 ? core.dim(0) : 1;
    double peak = 0.0;
    for (std::size_t i = 0; i < core.size(); ++i) peak = std::max(peak, std::abs(core[i]));
    m.regularity = std::max(peak, 1.0);
    m.tucker_core = std::move(core);
    return m;
}

LatentModel make_chc_model(double amplitude, std::vector<std::vector<std::size_t>> index_sets) {
    LatentModel m;
    m.function_id = ModelId::chc;
    m.chc_amplitude = amplitude;
    m.chc_index_sets = std::move(index_sets);
    m.regularity = std::max(std::abs(amplitude), 1.0);
    return m;
}

DenseTensor generate_signal(const LatentModel& model, const std::vector<std::size_t>& dims,
                            std::uint64_t seed) {
    if (dims.empty()) throw std::invalid_argument("tensor order must be at least 1");
    for (std::size_t d : dims) {
        if (d == 0) throw std::invalid_argument("tensor extents must be positive");
    }
    DenseTensor theta;
    switch (model.function_id) {
        case ModelId::model1:
        case ModelId::model2:
        case ModelId::model3: theta = generate_analytic(model, dims, seed); break;
        case ModelId::cp: theta = generate_cp(model, dims, seed); break;
        case ModelId::tucker: theta = generate_tucker(model, dims, seed); break;
        case ModelId::chc: theta = generate_chc(model, dims); break;
    }
    if (model.link == LinkKind::logistic) {
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = 1.0 / (1.0 + std::exp(-theta[i]));
    }
    return theta;
}

DenseTensor add_noise(const DenseTensor& theta, const NoiseSpec& noise) {
    if (noise.sigma < 0.0) throw std::invalid_argument("noise sigma must be nonnegative");
    DenseTensor y = theta;
    if (noise.sigma == 0.0) return y;
    SplitMix64 rng(noise.seed);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += noise.sigma * rng.next_gaussian();
    return y;
}

double noise_sigma_for_level(const DenseTensor& theta, double gamma) {
    if (gamma < 0.0) throw std::invalid_argument("noise level gamma must be nonnegative");
    return gamma * frobenius_norm(theta) / std::sqrt(static_cast<double>(theta.size()));
}

std::vector<std::vector<double>> sample_latents(std::size_t d, std::size_t s,
                                                LatentDistribution distribution,
                                                std::uint64_t seed) {
    if (d < 1 || s < 1) throw std::invalid_argument("latent counts must be at least 1");
    SplitMix64 rng(seed);
    std::vector<std::vector<double>> out(d, std::vector<double>(s));
    for (auto& vec : out) {
        for (double& v : vec) {
            v = distribution == LatentDistribution::unif01 ? rng.next_double()
                                                           : rng.next_symmetric();
        }
    }
    return out;
}

}  // namespace lvt
