#include "deeplr/deeplr.hpp"

#include <algorithm>
#include <cmath>

#include "deeplr/errors.hpp"
#include "deeplr/stats.hpp"

namespace deeplr {

namespace {

constexpr std::uint64_t kPlusTag = 0x2b;   // '+'
constexpr std::uint64_t kMinusTag = 0x2d;  // '-'

void add_flag(std::vector<std::string>& flags, const std::string& flag) {
    if (std::find(flags.begin(), flags.end(), flag) == flags.end()) flags.push_back(flag);
}

}  // namespace

std::size_t n_extra_for(std::size_t n, std::size_t batch_size) {
    if (batch_size == 0) throw DomainError("batch size must be positive");
    return std::max<std::size_t>(1, (2 * n + batch_size - 1) / batch_size);
}

WeightedDataset build_augmented_dataset(const WeightedDataset& data, const MlpSpec& spec,
                                        const ParamVector& base, const Head& head,
                                        std::span<const double> x0, double c_target,
                                        std::size_t n_extra) {
    if (n_extra < 1) throw DomainError("n_extra must be at least 1");
    if (x0.size() != spec.input_dim) throw DomainError("x0 has the wrong input dimension");
    WeightedDataset out(spec.input_dim);
    for (const Record& r : data) {
        out.add(r.x, output_of_interest(predict(spec, base, head, r.x)), 1.0);
    }
    const double w = 1.0 / static_cast<double>(n_extra);
    for (std::size_t k = 0; k < n_extra; ++k) {
        out.add(std::vector<double>(x0.begin(), x0.end()), c_target, w);
    }
    return out;
}

PerturbedPair train_perturbed_pair(const MlpSpec& spec, const ParamVector& base,
                                   const WeightedDataset& data, const Head& head,
                                   const TrainConfig& config, std::span<const double> x0,
                                   double delta, bool freeze_variance) {
    validate_compatible(spec, head);
    if (data.empty()) throw DomainError("train_perturbed_pair: empty dataset");
    PerturbedPair pair;
    pair.base = base;
    pair.x0.assign(x0.begin(), x0.end());
    pair.f_base = output_of_interest(predict(spec, base, head, x0));
    if (head.is_gaussian()) {
        if (!(delta > 0.0) || !std::isfinite(delta)) {
            throw DegenerateRequestError("perturbation size delta must be positive");
        }
        pair.c_max = pair.f_base + delta;
        pair.c_min = pair.f_base - delta;
    } else {
        pair.c_max = 1.0;
        pair.c_min = 0.0;
    }

    const std::size_t n_extra = n_extra_for(data.size(), config.batch_size);
    auto retrain = [&](double target, std::uint64_t tag) {
        const auto augmented = build_augmented_dataset(data, spec, base, head, x0, target, n_extra);
        TrainConfig cfg = config;
        cfg.seed = derive_seed(config.seed, tag);
        if (freeze_variance && head.kind == HeadKind::mean_variance_gaussian) {
            cfg.variance_warmup_epochs = cfg.epochs;
        }
        return train(spec, base, augmented, head, cfg);
    };
    pair.plus = retrain(pair.c_max, kPlusTag);
    pair.minus = retrain(pair.c_min, kMinusTag);
    pair.f_plus = output_of_interest(predict(spec, pair.plus, head, x0));
    pair.f_minus = output_of_interest(predict(spec, pair.minus, head, x0));
    if (!(pair.f_plus > pair.f_base)) add_flag(pair.diagnostics, flags::kPlusWrongDirection);
    if (!(pair.f_minus < pair.f_base)) add_flag(pair.diagnostics, flags::kMinusWrongDirection);
    return pair;
}

LikelihoodProfile::LikelihoodProfile(const PerturbedPair& pair, const WeightedDataset& data,
                                     const MlpSpec& spec, const Head& head)
    : head_(head), f_base_(pair.f_base), f_plus_(pair.f_plus), f_minus_(pair.f_minus) {
    validate_compatible(spec, head);
    if (data.empty()) throw DomainError("likelihood profile needs training data");
    if (head.combine_space == CombineSpace::logit && head.is_gaussian()) {
        throw DomainError("logit-space combination applies to the Bernoulli head only");
    }
    targets_.reserve(data.size());
    for (const Record& r : data) {
        targets_.push_back(r.y);
        base_.push_back(predict(spec, pair.base, head, r.x));
        plus_.push_back(predict(spec, pair.plus, head, r.x));
        minus_.push_back(predict(spec, pair.minus, head, r.x));
    }
    base_ll_ = log_likelihood_sum(base_);
}

double LikelihoodProfile::coordinate(double c) const {
    return head_.combine_space == CombineSpace::logit ? logit(clamp_prob(c)) : c;
}

double LikelihoodProfile::lambda_for(double c) const {
    if (c == f_base_) return 0.0;
    const double f_dir = c > f_base_ ? f_plus_ : f_minus_;
    const double denom = coordinate(f_dir) - coordinate(f_base_);
    if (denom == 0.0) {
        throw UnreachableDirectionError(std::string(c > f_base_ ? "positive" : "negative") +
                                        " perturbation left the output of interest unchanged");
    }
    return (coordinate(c) - coordinate(f_base_)) / denom;
}

double LikelihoodProfile::log_likelihood_sum(const std::vector<DistParams>& params) const {
    double sum = 0.0;
    if (head_.kind == HeadKind::homoscedastic_gaussian && !head_.fixed_variance) {
        // Profile the noise variance: its maximum-likelihood value is the mean squared residual.
        double ss = 0.0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double r = targets_[i] - output_of_interest(params[i]);
            ss += r * r;
        }
        const double variance = std::max(ss / static_cast<double>(params.size()), kVarianceFloor);
        for (std::size_t i = 0; i < params.size(); ++i) {
            sum += log_likelihood(GaussianParams{output_of_interest(params[i]), variance}, targets_[i]);
        }
        return sum;
    }
    for (std::size_t i = 0; i < params.size(); ++i) sum += log_likelihood(params[i], targets_[i]);
    return sum;
}

LikelihoodProfile::Evaluation LikelihoodProfile::evaluate(double c) const {
    Evaluation e;
    e.lambda = lambda_for(c);
    if (e.lambda == 0.0) return e;
    const auto& other = c > f_base_ ? plus_ : minus_;
    std::vector<DistParams> mixed;
    mixed.reserve(base_.size());
    for (std::size_t i = 0; i < base_.size(); ++i) {
        mixed.push_back(combine_params(base_[i], other[i], e.lambda, head_.combine_space));
    }
    e.raw = 2.0 * (base_ll_ - log_likelihood_sum(mixed));
    e.t = std::max(0.0, e.raw);
    return e;
}

double test_statistic(double c, const PerturbedPair& pair, const WeightedDataset& data,
                      const MlpSpec& spec, const Head& head) {
    return LikelihoodProfile(pair, data, spec, head).evaluate(c).t;
}

void SearchOptions::validate() const {
    if (dof != 1 && dof != 2) throw DomainError("degrees of freedom must be 1 or 2");
    if (!(delta > 0.0)) throw DegenerateRequestError("perturbation size delta must be positive");
    if (!(lambda_max >= 1.0) || !std::isfinite(lambda_max)) {
        throw DomainError("lambda_max must be finite and at least 1");
    }
    if (tolerance && !(*tolerance > 0.0)) throw DomainError("search tolerance must be positive");
    if (grid_points < 2) throw DomainError("probe grid needs at least two points");
    if (max_iterations < 1) throw DomainError("max_iterations must be positive");
}

ConfidenceInterval interval_from_pair(const PerturbedPair& pair, const WeightedDataset& data,
                                      const MlpSpec& spec, const Head& head, double alpha,
                                      const SearchOptions& options) {
    options.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    const LikelihoodProfile profile(pair, data, spec, head);
    const double threshold = stats::chi2_quantile(1.0 - alpha, options.dof);
    const double tol = options.tolerance.value_or(head.is_gaussian() ? 1e-3 * options.delta : 1e-3);

    ConfidenceInterval ci;
    ci.x0 = pair.x0;
    ci.alpha = alpha;
    ci.dof = options.dof;
    ci.f_base = pair.f_base;
    ci.f_plus = pair.f_plus;
    ci.f_minus = pair.f_minus;
    ci.diagnostics = pair.diagnostics;

    bool floored = false;
    auto g = [&](double c) {
        const auto e = profile.evaluate(c);
        ci.profile.push_back({c, e.t});
        floored = floored || e.raw < 0.0;
        return e.t - threshold;
    };

    auto search = [&](double f_dir, double sign, const char* name) {
        if (!((f_dir - pair.f_base) * sign > 0.0)) {
            if (options.collapse_unreachable) return pair.f_base;
            throw UnreachableDirectionError(std::string(name) +
                                            " perturbation did not move the output of interest");
        }
        double extreme;
        if (head.combine_space == CombineSpace::logit) {
            const double u = logit(clamp_prob(pair.f_base));
            extreme = sigmoid(u + options.lambda_max * (logit(clamp_prob(f_dir)) - u));
        } else {
            extreme = pair.f_base + options.lambda_max * (f_dir - pair.f_base);
        }
        if (!head.is_gaussian()) extreme = std::clamp(extreme, 0.0, 1.0);

        const std::size_t n = options.grid_points;
        std::vector<double> grid(n), values(n);
        for (std::size_t k = 0; k < n; ++k) {
            grid[k] = k + 1 == n ? extreme
                                 : pair.f_base + (extreme - pair.f_base) * static_cast<double>(k) /
                                                     static_cast<double>(n - 1);
            values[k] = g(grid[k]);
        }
        std::size_t crossings = 0;
        for (std::size_t k = 1; k < n; ++k) crossings += (values[k] > 0.0) != (values[k - 1] > 0.0);
        if (crossings > 1) add_flag(ci.diagnostics, flags::kNonmonotoneProfile);

        if (values.back() <= 0.0) {
            add_flag(ci.diagnostics, flags::kEndpointClamped);
            return extreme;
        }
        std::size_t inner = 0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            if (values[k] <= 0.0) inner = k;
        }
        double a = grid[inner];
        double b = grid[inner + 1];
        for (std::size_t it = 0; it < options.max_iterations && std::abs(b - a) >= tol; ++it) {
            const double m = 0.5 * (a + b);
            (g(m) <= 0.0 ? a : b) = m;
        }
        return a;
    };

    ci.hi = search(pair.f_plus, 1.0, "positive");
    ci.lo = search(pair.f_minus, -1.0, "negative");
    ci.lambda_hi = profile.lambda_for(ci.hi);
    ci.lambda_lo = profile.lambda_for(ci.lo);
    if (ci.lambda_hi > 1.0 || ci.lambda_lo > 1.0) add_flag(ci.diagnostics, flags::kLambdaExtrapolated);
    if (floored) add_flag(ci.diagnostics, flags::kNegativeTFloored);

    std::sort(ci.profile.begin(), ci.profile.end(),
              [](const ProfilePoint& p, const ProfilePoint& q) { return p.c < q.c; });
    ci.profile.erase(std::unique(ci.profile.begin(), ci.profile.end(),
                                 [](const ProfilePoint& p, const ProfilePoint& q) { return p.c == q.c; }),
                     ci.profile.end());
    std::sort(ci.diagnostics.begin(), ci.diagnostics.end());
    return ci;
}

ConfidenceInterval confidence_interval(std::span<const double> x0, double alpha,
                                       const WeightedDataset& data, const MlpSpec& spec,
                                       const ParamVector& base, const Head& head,
                                       const TrainConfig& config, const SearchOptions& options) {
    options.validate();
    const auto pair = train_perturbed_pair(spec, base, data, head, config, x0, options.delta,
                                           options.freeze_variance);
    return interval_from_pair(pair, data, spec, head, alpha, options);
}

}  // namespace deeplr
