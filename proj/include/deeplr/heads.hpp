#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>

namespace deeplr {

enum class HeadKind { homoscedastic_gaussian, mean_variance_gaussian, bernoulli_logit };

// Coordinates in which base and perturbed distribution parameters are mixed.
// `natural` mixes mean/variance/probability directly; `logit` mixes Bernoulli logits.
enum class CombineSpace { natural, logit };

inline constexpr double kVarianceFloor = 1e-6;
inline constexpr double kProbClamp = 1e-7;

struct Head {
    HeadKind kind = HeadKind::mean_variance_gaussian;
    // Homoscedastic head only: a known noise variance. Unset means the variance is
    // profiled (mean squared residual) wherever likelihoods are compared.
    std::optional<double> fixed_variance;
    CombineSpace combine_space = CombineSpace::natural;

    static Head homoscedastic(std::optional<double> fixed_variance = std::nullopt);
    static Head mean_variance();
    static Head bernoulli();

    std::size_t output_count() const noexcept {
        return kind == HeadKind::mean_variance_gaussian ? 2 : 1;
    }
    bool is_gaussian() const noexcept { return kind != HeadKind::bernoulli_logit; }
};

std::string to_string(HeadKind kind);
HeadKind head_kind_from_string(const std::string& name);
std::string to_string(CombineSpace space);
CombineSpace combine_space_from_string(const std::string& name);

struct GaussianParams {
    double mean = 0.0;
    double variance = 1.0;
};

struct BernoulliParams {
    double prob = 0.5;
};

using DistParams = std::variant<GaussianParams, BernoulliParams>;

double softplus(double x);
double sigmoid(double x);
double logit(double p);
double clamp_prob(double p);

/// Maps raw network outputs to distribution parameters. The homoscedastic head
/// reports `fixed_variance` (or 1 when profiled; the caller substitutes the profile).
DistParams params_from_outputs(const Head& head, std::span<const double> raw);

double log_likelihood(const DistParams& params, double y);

/// (1 - lambda) * base + lambda * perturbed, parameter by parameter, followed by the
/// variance floor / probability clamp. Logit-space mixing applies to Bernoulli only.
DistParams combine_params(const DistParams& base, const DistParams& perturbed, double lambda,
                          CombineSpace space = CombineSpace::natural);

/// Regression mean or class-1 probability.
double output_of_interest(const DistParams& params);

// Per-example training loss and its derivative with respect to the raw outputs. The
// Bernoulli loss is the cross-entropy of the unclamped logit.
struct NllGrad {
    double nll = 0.0;
    double d_raw[2] = {0.0, 0.0};
};

NllGrad nll_and_grad(const Head& head, std::span<const double> raw, double y);

}  // namespace deeplr
