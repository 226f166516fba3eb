#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "deeplr/dataset.hpp"
#include "deeplr/heads.hpp"

namespace deeplr {

enum class Activation { elu, relu, tanh };

// `raw_variance` is the identity at network level; the mean-variance head maps it
// through softplus.
enum class OutputActivation { linear, sigmoid, raw_variance };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);
std::string to_string(OutputActivation a);
OutputActivation output_activation_from_string(const std::string& name);

/// One stack of dense layers ending in a single output unit. `l2` holds one
/// weight-decay constant per layer (hidden layers first, output layer last).
struct BranchSpec {
    std::vector<std::size_t> hidden;
    OutputActivation output = OutputActivation::linear;
    std::vector<double> l2;

    std::size_t layer_count() const noexcept { return hidden.size() + 1; }
    friend bool operator==(const BranchSpec&, const BranchSpec&) = default;
};

/// Dense feedforward architecture with one or two independent branches fed by the
/// same input. The two-branch form is the mean/variance network.
struct MlpSpec {
    std::size_t input_dim = 1;
    std::vector<BranchSpec> branches;
    Activation hidden_activation = Activation::elu;

    void validate() const;
    std::size_t param_count() const;

    static MlpSpec single(std::size_t input_dim, std::vector<std::size_t> hidden, double l2,
                          Activation act = Activation::elu,
                          OutputActivation out = OutputActivation::linear);
    static MlpSpec mean_variance(std::size_t input_dim, std::vector<std::size_t> mean_hidden,
                                 std::vector<std::size_t> variance_hidden, double l2,
                                 Activation act = Activation::elu);

    friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

struct LayerShape {
    std::size_t branch = 0;
    std::size_t index = 0;  // position inside the branch
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    std::size_t weight_offset = 0;  // row-major fan_out x fan_in
    std::size_t bias_offset = 0;
    double l2 = 0.0;
    bool is_output = false;
};

/// Shape table of the flat parameter vector: every layer of branch 0, then branch 1.
std::vector<LayerShape> layout(const MlpSpec& spec);

struct ParamVector {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

struct GradVector {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

/// Glorot-uniform weights, zero biases; identical (spec, seed) gives identical values.
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

/// Raw per-branch outputs (after each branch's output activation).
std::vector<double> forward(const MlpSpec& spec, const ParamVector& params,
                            std::span<const double> x);

/// Throws DomainError when the head's output layout does not match the architecture.
void validate_compatible(const MlpSpec& spec, const Head& head);

struct LossAndGrad {
    double loss = 0.0;
    GradVector grad;
};

/// Weighted mean of per-example negative log-likelihoods over `batch`, plus
/// sum over layers of l2 * ||W||^2, and its exact gradient.
LossAndGrad loss_and_grad(const MlpSpec& spec, const ParamVector& params,
                          const WeightedDataset& data, std::span<const std::size_t> batch,
                          const Head& head);

/// Same objective over every record, value only.
double full_loss(const MlpSpec& spec, const ParamVector& params, const WeightedDataset& data,
                 const Head& head);

/// Distribution parameters predicted at x.
DistParams predict(const MlpSpec& spec, const ParamVector& params, const Head& head,
                   std::span<const double> x);

struct Checkpoint {
    MlpSpec spec;
    ParamVector params;
};

// Text checkpoint; parameters stored with 17 significant digits so reloads are bit-exact.
void write_checkpoint(std::ostream& out, const MlpSpec& spec, const ParamVector& params);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const MlpSpec& spec, const ParamVector& params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace deeplr
