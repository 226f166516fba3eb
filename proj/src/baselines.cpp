#include "deeplr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "deeplr/errors.hpp"
#include "deeplr/stats.hpp"

namespace deeplr {

Ensemble train_ensemble(const MlpSpec& spec, const WeightedDataset& data, const Head& head,
                        const TrainConfig& config, std::size_t members) {
    if (members < 2) throw DomainError("an ensemble needs at least two members");
    Ensemble ensemble{spec, {}, {}};
    for (std::size_t j = 0; j < members; ++j) {
        TrainConfig cfg = config;
        cfg.seed = config.seed + j;
        ensemble.seeds.push_back(cfg.seed);
        try {
            ensemble.members.push_back(train(spec, init_params(spec, cfg.seed), data, head, cfg));
        } catch (const TrainingDivergedError& e) {
            throw TrainingDivergedError(e.epoch(), e.batch(),
                                        "ensemble member " + std::to_string(j) + ": " + e.what());
        }
    }
    if (std::set<std::uint64_t>(ensemble.seeds.begin(), ensemble.seeds.end()).size() != members) {
        throw DomainError("ensemble member seeds must be distinct");
    }
    return ensemble;
}

ConfidenceInterval ensemble_interval_from_outputs(std::span<const double> outputs,
                                                  std::span<const double> x0, double alpha,
                                                  bool clamp_unit) {
    if (outputs.size() < 2) throw DomainError("an ensemble needs at least two members");
    const double n = static_cast<double>(outputs.size());
    double mean = 0.0;
    for (double v : outputs) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : outputs) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const double half = stats::normal_quantile(1.0 - alpha / 2.0) * sd;

    ConfidenceInterval ci;
    ci.method = "ensemble";
    ci.x0.assign(x0.begin(), x0.end());
    ci.alpha = alpha;
    ci.dof = 0;
    ci.f_base = mean;
    ci.f_plus = std::numeric_limits<double>::quiet_NaN();
    ci.f_minus = std::numeric_limits<double>::quiet_NaN();
    ci.lambda_lo = ci.lambda_hi = std::numeric_limits<double>::quiet_NaN();
    ci.lo = mean - half;
    ci.hi = mean + half;
    if (clamp_unit) {
        ci.lo = std::clamp(ci.lo, 0.0, 1.0);
        ci.hi = std::clamp(ci.hi, 0.0, 1.0);
    }
    ci.diagnostics.push_back(flags::kNormalApproximation);
    return ci;
}

ConfidenceInterval ensemble_interval(const Ensemble& ensemble, std::span<const double> x0,
                                     double alpha, const Head& head) {
    std::vector<double> outputs;
    outputs.reserve(ensemble.size());
    for (const auto& member : ensemble.members) {
        outputs.push_back(output_of_interest(predict(ensemble.spec, member, head, x0)));
    }
    return ensemble_interval_from_outputs(outputs, x0, alpha, !head.is_gaussian());
}

}  // namespace deeplr
