#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "deeplr/baselines.hpp"
#include "deeplr/dataset.hpp"
#include "deeplr/deeplr.hpp"

namespace deeplr::harness {

// ---------------------------------------------------------------------------
// Data generators

/// Half the inputs uniform on [-1, -0.2], half on [0.2, 1]; y ~ N(2x^2, noise_sd^2).
WeightedDataset gen_toy_regression(std::size_t n, std::uint64_t seed, double noise_sd = 0.1);

/// Half the inputs uniform on [0, 0.2], half on [0.8, 1]; y ~ Bernoulli(0.5 + 0.4 cos 6x).
WeightedDataset gen_toy_classification(std::size_t n, std::uint64_t seed);

/// n labels drawn at a single input x from the toy classification law.
WeightedDataset gen_toy_classification_at(double x, std::size_t n, std::uint64_t seed);

/// Two interleaving half circles on an evenly spaced angle grid, class 0 on
/// (cos t, sin t) and class 1 on (1 - cos t, 0.5 - sin t), plus isotropic noise.
WeightedDataset gen_two_moons(std::size_t n, double noise_sd, std::uint64_t seed);

double toy_regression_truth(double x);
double toy_classification_truth(double x);

// ---------------------------------------------------------------------------
// Configuration

enum class ExperimentId { toy_regression, toy_classification, two_moon, coverage, wilks_mc, markov_mc };
enum class DatasetKind { toy_regression, toy_classification, two_moon };

std::string to_string(ExperimentId id);
ExperimentId experiment_id_from_string(const std::string& name);
std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& name);

struct ExperimentConfig {
    ExperimentId experiment = ExperimentId::toy_regression;
    DatasetKind dataset = DatasetKind::toy_regression;
    std::uint64_t dataset_seed = 0;
    std::size_t n = 80;
    double noise_sd = 0.1;
    bool normalize_targets = true;
    TrainConfig train;
    Head head;
    MlpSpec mlp;
    double alpha = 0.05;
    SearchOptions search;
    std::size_t ensemble_size = 10;
    std::vector<std::vector<double>> grid;
    std::string output_path = "out";
    // Monte-Carlo studies.
    std::size_t reps = 0;
    std::size_t n_per_rep = 0;
    bool unknown_sigma = false;
    double h1_mean = 0.5;

    void validate() const;
};

/// Architectures, training settings and grids of the reference experiments.
ExperimentConfig preset(ExperimentId id);

/// Stable FNV-1a hash of the configuration's JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

WeightedDataset generate_dataset(const ExperimentConfig& config, std::uint64_t seed);
double truth_at(DatasetKind kind, const std::vector<double>& x);

// ---------------------------------------------------------------------------
// Pipeline pieces

struct FittedModel {
    WeightedDataset data;  // training data in model units (targets normalized if enabled)
    TargetScaler scaler;   // identity unless targets were normalized
    ParamVector base;
};

FittedModel fit_base_model(const ExperimentConfig& config, const WeightedDataset& raw);

/// DeepLR interval at x0 reported in the original target units.
ConfidenceInterval deeplr_interval(const ExperimentConfig& config, const FittedModel& model,
                                   const std::vector<double>& x0, double alpha,
                                   const SearchOptions& options);

ConfidenceInterval to_original_units(ConfidenceInterval ci, const TargetScaler& scaler);

/// Runs fn(i) for i in [0, n) on `workers` threads; rethrows the first failure.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Runners

struct GridRow {
    std::vector<double> x;
    double f_base = 0.0;
    double lr_lo = 0.0;
    double lr_hi = 0.0;
    double ens_lo = 0.0;
    double ens_hi = 0.0;
    double truth = 0.0;
    std::vector<std::string> flags;
};

struct ExperimentResult {
    std::vector<GridRow> rows;
    TargetScaler scaler;
    std::string csv_path;
    std::string manifest_path;
};

struct RunOptions {
    std::size_t workers = 1;
    bool write_files = true;
    bool with_ensemble = true;
};

/// Trains the base model and ensemble, computes DeepLR and ensemble intervals at every
/// grid point and writes `<output_path>/<experiment>.csv` plus a manifest.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

enum class IntervalOverride { none, everything, nothing };

struct CoverageReport {
    double nominal = 0.95;
    std::size_t replications = 0;
    std::size_t failures = 0;
    std::vector<std::vector<double>> grid;
    std::vector<std::size_t> hits;
    std::vector<double> point_coverage;
    double coverage = 0.0;
    double mean_width = 0.0;
    double mean_asymmetry = 0.0;
    std::vector<std::string> failure_messages;
};

struct CoverageOptions {
    std::size_t replications = 20;
    std::size_t workers = 1;
    bool write_files = true;
    // Test hook: skip training and force every interval to (-inf, inf) or to the empty set.
    IntervalOverride override_intervals = IntervalOverride::none;
};

CoverageReport run_coverage(const ExperimentConfig& config, const CoverageOptions& options);

struct WilksReport {
    std::size_t reps = 0;
    std::size_t n_per_rep = 0;
    bool unknown_sigma = false;
    double ks = 0.0;
    double mean_t = 0.0;
};

/// Gaussian-mean likelihood-ratio statistic under the null, simulated `reps` times and
/// compared with the chi-square(1) CDF.
WilksReport run_wilks_mc(std::size_t reps, std::size_t n_per_rep, std::uint64_t seed,
                         bool unknown_sigma = false);

struct MarkovReport {
    std::size_t reps = 0;
    std::size_t n_per_rep = 0;
    double alpha = 0.05;
    double h1_mean = 0.5;
    double threshold = 0.0;
    double rejection_rate = 0.0;
    double bound = 0.0;  // alpha + 3 binomial standard errors
};

/// Simple-vs-simple test N(0,1) against N(h1_mean,1) on null data, rejecting when the
/// statistic exceeds the chi-square(2) quantile -2 log(alpha).
MarkovReport run_markov_mc(std::size_t reps, std::size_t n_per_rep, double alpha,
                           std::uint64_t seed, double h1_mean = 0.5);

}  // namespace deeplr::harness
