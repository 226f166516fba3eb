#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deeplr/dataset.hpp"
#include "deeplr/heads.hpp"
#include "deeplr/mlp.hpp"
#include "deeplr/optim.hpp"

namespace deeplr {

// Diagnostic flags attached to pairs and intervals.
namespace flags {
inline constexpr const char* kEndpointClamped = "endpoint-clamped";
inline constexpr const char* kNonmonotoneProfile = "nonmonotone-profile";
inline constexpr const char* kNegativeTFloored = "negative-T-floored";
inline constexpr const char* kLambdaExtrapolated = "lambda-extrapolated";
inline constexpr const char* kPlusWrongDirection = "plus-wrong-direction";
inline constexpr const char* kMinusWrongDirection = "minus-wrong-direction";
inline constexpr const char* kNormalApproximation = "normal-approximation";
}  // namespace flags

/// Number of anchor copies: ceil(2n / batch_size), at least 1.
std::size_t n_extra_for(std::size_t n, std::size_t batch_size);

/// Training inputs relabelled with the base network's predicted output of interest
/// (weight 1 each), followed by `n_extra` copies of (x0, c_target) with weight 1/n_extra.
WeightedDataset build_augmented_dataset(const WeightedDataset& data, const MlpSpec& spec,
                                        const ParamVector& base, const Head& head,
                                        std::span<const double> x0, double c_target,
                                        std::size_t n_extra);

struct PerturbedPair {
    ParamVector base;
    ParamVector plus;
    ParamVector minus;
    std::vector<double> x0;
    double f_base = 0.0;
    double f_plus = 0.0;
    double f_minus = 0.0;
    double c_max = 0.0;
    double c_min = 0.0;
    std::vector<std::string> diagnostics;
};

/// Retrains two copies of `base`, one pulled toward c_max and one toward c_min at x0,
/// with the original training configuration. Gaussian heads use c = f(x0) +- delta;
/// the Bernoulli head uses c_max = 1 and c_min = 0. With `freeze_variance` the
/// mean-variance head keeps the base network's variance branch during retraining.
PerturbedPair train_perturbed_pair(const MlpSpec& spec, const ParamVector& base,
                                   const WeightedDataset& data, const Head& head,
                                   const TrainConfig& config, std::span<const double> x0,
                                   double delta = 1.0, bool freeze_variance = true);

/// Evaluates the likelihood-ratio statistic T(c) for a trained pair. Predictions of
/// the three networks on the training inputs are computed once at construction.
class LikelihoodProfile {
public:
    LikelihoodProfile(const PerturbedPair& pair, const WeightedDataset& data,
                      const MlpSpec& spec, const Head& head);

    struct Evaluation {
        double lambda = 0.0;
        double raw = 0.0;  // before flooring at zero
        double t = 0.0;
    };

    /// Throws UnreachableDirectionError when the perturbed network on c's side of
    /// f_base predicts exactly f_base.
    Evaluation evaluate(double c) const;

    /// Mixing weight that puts the output of interest at c (direction chosen by sign).
    double lambda_for(double c) const;

    double f_base() const noexcept { return f_base_; }
    double base_log_likelihood() const noexcept { return base_ll_; }

private:
    double coordinate(double c) const;
    double log_likelihood_sum(const std::vector<DistParams>& params) const;

    Head head_;
    std::vector<double> targets_;
    std::vector<DistParams> base_;
    std::vector<DistParams> plus_;
    std::vector<DistParams> minus_;
    double f_base_;
    double f_plus_;
    double f_minus_;
    double base_ll_;
};

double test_statistic(double c, const PerturbedPair& pair, const WeightedDataset& data,
                      const MlpSpec& spec, const Head& head);

struct ProfilePoint {
    double c = 0.0;
    double t = 0.0;
};

struct ConfidenceInterval {
    std::string method = "deeplr";
    std::vector<double> x0;
    double alpha = 0.05;
    int dof = 1;
    double lo = 0.0;
    double hi = 0.0;
    double f_base = 0.0;
    double f_plus = 0.0;
    double f_minus = 0.0;
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    std::vector<ProfilePoint> profile;
    std::vector<std::string> diagnostics;

    double width() const noexcept { return hi - lo; }
    bool contains(double v) const noexcept { return lo <= v && v <= hi; }
};

struct SearchOptions {
    int dof = 1;
    double delta = 1.0;
    double lambda_max = 1.25;
    std::optional<double> tolerance;  // default 1e-3 (Bernoulli) or 1e-3 * delta
    std::size_t max_iterations = 60;
    std::size_t grid_points = 11;
    // Mean-variance head: relabelled targets carry no noise, so by default the
    // perturbed networks inherit the base variance branch unchanged.
    bool freeze_variance = true;
    // A side whose perturbed network moved the wrong way (or not at all) ends at f_base
    // instead of raising UnreachableDirectionError; the pair's direction flag remains.
    bool collapse_unreachable = true;

    void validate() const;
};

/// Cuts the profile of a trained pair at chi2_quantile(1 - alpha, dof).
ConfidenceInterval interval_from_pair(const PerturbedPair& pair, const WeightedDataset& data,
                                      const MlpSpec& spec, const Head& head, double alpha,
                                      const SearchOptions& options = {});

/// Full procedure: perturbation training followed by the profile search.
ConfidenceInterval confidence_interval(std::span<const double> x0, double alpha,
                                       const WeightedDataset& data, const MlpSpec& spec,
                                       const ParamVector& base, const Head& head,
                                       const TrainConfig& config,
                                       const SearchOptions& options = {});

}  // namespace deeplr
