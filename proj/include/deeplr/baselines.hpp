#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "deeplr/deeplr.hpp"

namespace deeplr {

struct Ensemble {
    MlpSpec spec;
    std::vector<ParamVector> members;
    std::vector<std::uint64_t> seeds;

    std::size_t size() const noexcept { return members.size(); }
};

/// M independent trainings; member j is initialised and shuffled with seed config.seed + j.
Ensemble train_ensemble(const MlpSpec& spec, const WeightedDataset& data, const Head& head,
                        const TrainConfig& config, std::size_t members);

/// mean +- z_{1-alpha/2} * sd over member outputs of interest, clamped to [0, 1]
/// when `clamp_unit` is set.
ConfidenceInterval ensemble_interval_from_outputs(std::span<const double> outputs,
                                                  std::span<const double> x0, double alpha,
                                                  bool clamp_unit);

ConfidenceInterval ensemble_interval(const Ensemble& ensemble, std::span<const double> x0,
                                     double alpha, const Head& head);

}  // namespace deeplr
