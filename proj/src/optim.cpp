#include "deeplr/optim.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "deeplr/errors.hpp"

namespace deeplr {

namespace {

constexpr double kDivergenceLimit = 1e12;

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw DomainError("epochs must be at least 1");
    if (batch_size < 1) throw DomainError("batch size must be at least 1");
    if (!(optimizer.lr >= 0.0) || !std::isfinite(optimizer.lr)) {
        throw DomainError("learning rate must be finite and nonnegative");
    }
    if (optimizer.kind == OptimizerKind::adam &&
        !(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 &&
          optimizer.beta2 < 1.0 && optimizer.eps > 0.0)) {
        throw DomainError("Adam needs beta1, beta2 in [0, 1) and eps > 0");
    }
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind optimizer_kind_from_string(const std::string& name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd") return OptimizerKind::sgd;
    throw DomainError("unknown optimizer '" + name + "'");
}

void AdamState::apply(const OptimizerConfig& config, std::vector<double>& params,
                      const std::vector<double>& grad) {
    ++step;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad[k];
        v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad[k] * grad[k];
        params[k] -= config.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config.eps);
    }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   std::uint64_t epoch_seed) {
    if (n < 1) throw DomainError("make_batches: empty dataset");
    if (batch_size < 1) throw DomainError("make_batches: batch size must be positive");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(epoch_seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(order[i], order[pick(rng)]);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t stop = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return batches;
}

ParamVector train(const MlpSpec& spec, const ParamVector& init, const WeightedDataset& data,
                  const Head& head, const TrainConfig& config) {
    config.validate();
    validate_compatible(spec, head);
    if (data.empty()) throw DomainError("train: empty dataset");
    if (data.input_dim() != spec.input_dim) throw DomainError("train: dataset/network input mismatch");
    if (init.size() != spec.param_count()) throw DomainError("train: parameter count mismatch");

    ParamVector params = init;
    AdamState adam(params.size());

    // Parameter range of the variance branch, frozen during warm-up.
    std::size_t frozen_begin = params.size();
    if (head.kind == HeadKind::mean_variance_gaussian) {
        for (const auto& s : layout(spec)) {
            if (s.branch == 1) {
                frozen_begin = std::min(frozen_begin, s.weight_offset);
            }
        }
    }

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto batches = make_batches(data.size(), config.batch_size, derive_seed(config.seed, epoch));
        const bool freeze_variance = epoch < config.variance_warmup_epochs;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            LossAndGrad lg;
            try {
                lg = loss_and_grad(spec, params, data, batches[b], head);
            } catch (const NumericError& e) {
                throw TrainingDivergedError(epoch, b, e.what());
            }
            if (!std::isfinite(lg.loss) || lg.loss > kDivergenceLimit) {
                throw TrainingDivergedError(epoch, b, "loss diverged");
            }
            if (freeze_variance) {
                std::fill(lg.grad.values.begin() + static_cast<std::ptrdiff_t>(frozen_begin),
                          lg.grad.values.end(), 0.0);
            }
            if (config.optimizer.kind == OptimizerKind::adam) {
                adam.apply(config.optimizer, params.values, lg.grad.values);
            } else {
                for (std::size_t k = 0; k < params.size(); ++k) {
                    params.values[k] -= config.optimizer.lr * lg.grad.values[k];
                }
            }
        }
    }
    return params;
}

}  // namespace deeplr
