#include "deeplr/heads.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "deeplr/errors.hpp"

namespace deeplr {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double gaussian_ll(double mean, double variance, double y) {
    const double r = y - mean;
    return -0.5 * (kLog2Pi + std::log(variance)) - r * r / (2.0 * variance);
}

void require_outputs(const Head& head, std::span<const double> raw) {
    if (raw.size() != head.output_count()) {
        throw DomainError(to_string(head.kind) + " head expects " +
                          std::to_string(head.output_count()) + " raw outputs, got " +
                          std::to_string(raw.size()));
    }
}

}  // namespace

Head Head::homoscedastic(std::optional<double> fixed_variance) {
    if (fixed_variance && !(*fixed_variance > 0.0)) {
        throw DomainError("fixed variance must be positive");
    }
    return Head{HeadKind::homoscedastic_gaussian, fixed_variance, CombineSpace::natural};
}

Head Head::mean_variance() { return Head{HeadKind::mean_variance_gaussian, std::nullopt, CombineSpace::natural}; }

Head Head::bernoulli() { return Head{HeadKind::bernoulli_logit, std::nullopt, CombineSpace::natural}; }

std::string to_string(HeadKind kind) {
    switch (kind) {
        case HeadKind::homoscedastic_gaussian: return "homoscedastic_gaussian";
        case HeadKind::mean_variance_gaussian: return "mean_variance_gaussian";
        case HeadKind::bernoulli_logit: return "bernoulli_logit";
    }
    return "unknown";
}

HeadKind head_kind_from_string(const std::string& name) {
    if (name == "homoscedastic_gaussian") return HeadKind::homoscedastic_gaussian;
    if (name == "mean_variance_gaussian") return HeadKind::mean_variance_gaussian;
    if (name == "bernoulli_logit") return HeadKind::bernoulli_logit;
    throw DomainError("unknown head kind '" + name + "'");
}

std::string to_string(CombineSpace space) {
    return space == CombineSpace::natural ? "natural" : "logit";
}

CombineSpace combine_space_from_string(const std::string& name) {
    if (name == "natural") return CombineSpace::natural;
    if (name == "logit") return CombineSpace::logit;
    throw DomainError("unknown combination space '" + name + "'");
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

DistParams params_from_outputs(const Head& head, std::span<const double> raw) {
    require_outputs(head, raw);
    switch (head.kind) {
        case HeadKind::homoscedastic_gaussian:
            return GaussianParams{raw[0], head.fixed_variance.value_or(1.0)};
        case HeadKind::mean_variance_gaussian:
            return GaussianParams{raw[0], softplus(raw[1]) + kVarianceFloor};
        case HeadKind::bernoulli_logit:
            return BernoulliParams{clamp_prob(sigmoid(raw[0]))};
    }
    throw DomainError("unknown head kind");
}

double log_likelihood(const DistParams& params, double y) {
    if (const auto* g = std::get_if<GaussianParams>(&params)) {
        return gaussian_ll(g->mean, g->variance, y);
    }
    const double p = std::get<BernoulliParams>(params).prob;
    return y * std::log(p) + (1.0 - y) * std::log1p(-p);
}

DistParams combine_params(const DistParams& base, const DistParams& perturbed, double lambda,
                          CombineSpace space) {
    if (base.index() != perturbed.index()) {
        throw DomainError("cannot combine parameters of different distribution families");
    }
    if (const auto* g = std::get_if<GaussianParams>(&base)) {
        const auto& h = std::get<GaussianParams>(perturbed);
        return GaussianParams{(1.0 - lambda) * g->mean + lambda * h.mean,
                              std::max((1.0 - lambda) * g->variance + lambda * h.variance,
                                       kVarianceFloor)};
    }
    const double p0 = std::get<BernoulliParams>(base).prob;
    const double p1 = std::get<BernoulliParams>(perturbed).prob;
    if (space == CombineSpace::logit) {
        return BernoulliParams{clamp_prob(sigmoid((1.0 - lambda) * logit(p0) + lambda * logit(p1)))};
    }
    return BernoulliParams{clamp_prob((1.0 - lambda) * p0 + lambda * p1)};
}

double output_of_interest(const DistParams& params) {
    if (const auto* g = std::get_if<GaussianParams>(&params)) return g->mean;
    return std::get<BernoulliParams>(params).prob;
}

NllGrad nll_and_grad(const Head& head, std::span<const double> raw, double y) {
    require_outputs(head, raw);
    NllGrad out;
    switch (head.kind) {
        case HeadKind::homoscedastic_gaussian: {
            const double v = head.fixed_variance.value_or(1.0);
            out.nll = -gaussian_ll(raw[0], v, y);
            out.d_raw[0] = (raw[0] - y) / v;
            break;
        }
        case HeadKind::mean_variance_gaussian: {
            const double v = softplus(raw[1]) + kVarianceFloor;
            const double r = y - raw[0];
            out.nll = -gaussian_ll(raw[0], v, y);
            out.d_raw[0] = -r / v;
            out.d_raw[1] = (0.5 / v - 0.5 * r * r / (v * v)) * sigmoid(raw[1]);
            break;
        }
        case HeadKind::bernoulli_logit: {
            // Cross-entropy on the logit, unclamped so saturated outputs keep a gradient.
            out.nll = softplus(raw[0]) - y * raw[0];
            out.d_raw[0] = sigmoid(raw[0]) - y;
            break;
        }
    }
    return out;
}

}  // namespace deeplr
