#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "deeplr/dataset.hpp"
#include "deeplr/heads.hpp"
#include "deeplr/mlp.hpp"

namespace deeplr {

enum class OptimizerKind { adam, sgd };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

struct TrainConfig {
    OptimizerConfig optimizer;
    std::size_t epochs = 1;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    // Mean-variance head: the variance branch receives no updates during the first
    // `variance_warmup_epochs` epochs.
    std::size_t variance_warmup_epochs = 0;

    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
    void apply(const OptimizerConfig& config, std::vector<double>& params,
               const std::vector<double>& grad);
};

/// Deterministic 64-bit seed mixing (splitmix64 finalizer over seed and tag).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// Seeded Fisher-Yates permutation of 0..n-1 cut into batches; the last batch may be short.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   std::uint64_t epoch_seed);

/// Mini-batch training from `init` with fresh optimizer state. Batches are reshuffled
/// every epoch with seeds derived from config.seed.
ParamVector train(const MlpSpec& spec, const ParamVector& init, const WeightedDataset& data,
                  const Head& head, const TrainConfig& config);

}  // namespace deeplr
