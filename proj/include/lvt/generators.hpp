#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lvt/tensor.hpp"

namespace lvt {

/// Signal families. model1..model3 are the analytic pairwise-distance
/// functions (order 3, one latent dimension s shared by all modes); cp,
/// tucker, and chc are the structured low-rank families.
enum class ModelId { model1, model2, model3, cp, tucker, chc };

ModelId model_from_string(const std::string& name);
std::string to_string(ModelId id);

/// Optional scalar link applied entrywise after the base signal; `logistic`
/// is 1/(1+exp(-x)). This realizes the link-function variants of the model
/// family as a composition on top of the structured generators.
enum class LinkKind { identity, logistic };

/// Declarative signal description. `latent_vectors[k]` lists one length-s_k
/// vector per index of mode k; leave it empty to have generate_signal sample
/// latents from its seed (Unif[0,1]^s, shared across modes for the analytic
/// models when the extents are equal).
///
/// Family payloads: cp uses `cp_weights` (lambda_r > 0, latent length s =
/// weight count, f = <lambda, x_1 o ... o x_m>); tucker uses `tucker_core`
/// (f = core x_1 x_1^T ... x_m x_m^T, latent length s_k = core extent k);
/// chc uses `chc_amplitude` and `chc_index_sets` (0-based index subsets, one
/// per mode) and needs no latents.
struct LatentModel {
    ModelId function_id = ModelId::model1;
    std::size_t latent_dim = 1;
    std::vector<std::vector<std::vector<double>>> latent_vectors;
    std::vector<double> cp_weights;
    DenseTensor tucker_core;
    double chc_amplitude = 0.0;
    std::vector<std::vector<std::size_t>> chc_index_sets;
    LinkKind link = LinkKind::identity;
    double regularity = 1.0;
};

LatentModel make_analytic_model(ModelId id, std::size_t latent_dim);
LatentModel make_cp_model(std::vector<double> weights);
LatentModel make_tucker_model(DenseTensor core);
LatentModel make_chc_model(double amplitude, std::vector<std::vector<std::size_t>> index_sets);

/// i.i.d. Gaussian noise description for add_noise.
struct NoiseSpec {
    double sigma = 1.0;
    std::uint64_t seed = 0;
};

/// Evaluates the signal tensor entrywise from the latent description. When
/// the model carries explicit latent vectors their per-mode counts must
/// match `dims`; otherwise latents are drawn from `seed`. The same (model,
/// dims, seed) triple always produces the same tensor.
DenseTensor generate_signal(const LatentModel& model, const std::vector<std::size_t>& dims,
                            std::uint64_t seed);

/// Y = theta + sigma * Z with Z i.i.d. standard normal from the seeded
/// generator; bit-identical for identical (theta, spec).
DenseTensor add_noise(const DenseTensor& theta, const NoiseSpec& noise);

/// sigma_gamma = gamma * sqrt(||theta||_F^2 / entry count): the noise scale
/// that makes gamma the noise-to-signal RMS ratio.
double noise_sigma_for_level(const DenseTensor& theta, double gamma);

enum class LatentDistribution { unif01, unif_sym };

/// d i.i.d. latent vectors of length s, uniform on [0,1]^s or [-1,1]^s.
std::vector<std::vector<double>> sample_latents(std::size_t d, std::size_t s,
                                                LatentDistribution distribution, std::uint64_t seed);

}  // namespace lvt
