#include "deeplr/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "deeplr/errors.hpp"

namespace deeplr {

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::elu: return z > 0.0 ? z : std::expm1(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::tanh: return std::tanh(z);
    }
    return z;
}

// Derivative expressed through the pre-activation z and the activation value a.
double activate_deriv(Activation act, double z, double a) {
    switch (act) {
        case Activation::elu: return z > 0.0 ? 1.0 : a + 1.0;
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: return 1.0 - a * a;
    }
    return 1.0;
}

double output_activate(OutputActivation a, double z) {
    return a == OutputActivation::sigmoid ? sigmoid(z) : z;
}

double output_deriv(OutputActivation a, double out) {
    return a == OutputActivation::sigmoid ? out * (1.0 - out) : 1.0;
}

// Per-example activations, reused across the records of one batch.
struct Trace {
    std::vector<std::vector<double>> pre;   // per layer, pre-activation
    std::vector<std::vector<double>> post;  // per layer, activation
};

class Evaluator {
public:
    Evaluator(const MlpSpec& spec, const ParamVector& params)
        : spec_(spec), params_(params), layers_(layout(spec)) {
        if (params.size() != spec.param_count()) {
            throw DomainError("parameter vector has " + std::to_string(params.size()) +
                              " entries, architecture needs " + std::to_string(spec.param_count()));
        }
        traces_.resize(spec.branches.size());
        std::size_t li = 0;
        for (std::size_t b = 0; b < spec.branches.size(); ++b) {
            const auto n = spec.branches[b].layer_count();
            traces_[b].pre.resize(n);
            traces_[b].post.resize(n);
            for (std::size_t l = 0; l < n; ++l, ++li) {
                traces_[b].pre[l].resize(layers_[li].fan_out);
                traces_[b].post[l].resize(layers_[li].fan_out);
            }
        }
    }

    const std::vector<LayerShape>& layers() const { return layers_; }

    void run(std::span<const double> x, std::vector<double>& out) {
        if (x.size() != spec_.input_dim) {
            throw DomainError("input has " + std::to_string(x.size()) + " entries, expected " +
                              std::to_string(spec_.input_dim));
        }
        for (double v : x) {
            if (!std::isfinite(v)) throw DomainError("non-finite network input");
        }
        out.resize(spec_.branches.size());
        const double* p = params_.values.data();
        std::size_t li = 0;
        for (std::size_t b = 0; b < spec_.branches.size(); ++b) {
            const auto& branch = spec_.branches[b];
            std::span<const double> a = x;
            for (std::size_t l = 0; l < branch.layer_count(); ++l, ++li) {
                const LayerShape& s = layers_[li];
                auto& z = traces_[b].pre[l];
                auto& h = traces_[b].post[l];
                for (std::size_t o = 0; o < s.fan_out; ++o) {
                    const double* w = p + s.weight_offset + o * s.fan_in;
                    double acc = p[s.bias_offset + o];
                    for (std::size_t i = 0; i < s.fan_in; ++i) acc += w[i] * a[i];
                    if (!std::isfinite(acc)) throw NumericError(li, "non-finite pre-activation");
                    z[o] = acc;
                    h[o] = s.is_output ? output_activate(branch.output, acc)
                                       : activate(spec_.hidden_activation, acc);
                }
                a = h;
            }
            out[b] = traces_[b].post.back()[0];
        }
    }

    // Accumulates scale * d(nll)/d(params) given d(nll)/d(outputs) for the last run().
    void backprop(std::span<const double> x, std::span<const double> d_out, double scale,
                  std::vector<double>& grad, std::vector<double>& delta,
                  std::vector<double>& delta_prev) {
        const double* p = params_.values.data();
        std::size_t layer_end = 0;
        for (std::size_t b = 0; b < spec_.branches.size(); ++b) {
            const auto& branch = spec_.branches[b];
            const std::size_t first = layer_end;
            layer_end += branch.layer_count();
            const double out = traces_[b].post.back()[0];
            delta.assign(1, scale * d_out[b] * output_deriv(branch.output, out));
            for (std::size_t l = branch.layer_count(); l-- > 0;) {
                const LayerShape& s = layers_[first + l];
                std::span<const double> a_prev =
                    l == 0 ? x : std::span<const double>(traces_[b].post[l - 1]);
                for (std::size_t o = 0; o < s.fan_out; ++o) {
                    const double d = delta[o];
                    if (d == 0.0) continue;
                    double* gw = grad.data() + s.weight_offset + o * s.fan_in;
                    for (std::size_t i = 0; i < s.fan_in; ++i) gw[i] += d * a_prev[i];
                    grad[s.bias_offset + o] += d;
                }
                if (l == 0) break;
                delta_prev.assign(s.fan_in, 0.0);
                for (std::size_t o = 0; o < s.fan_out; ++o) {
                    const double d = delta[o];
                    if (d == 0.0) continue;
                    const double* w = p + s.weight_offset + o * s.fan_in;
                    for (std::size_t i = 0; i < s.fan_in; ++i) delta_prev[i] += w[i] * d;
                }
                const auto& z = traces_[b].pre[l - 1];
                const auto& h = traces_[b].post[l - 1];
                for (std::size_t i = 0; i < s.fan_in; ++i) {
                    delta_prev[i] *= activate_deriv(spec_.hidden_activation, z[i], h[i]);
                }
                std::swap(delta, delta_prev);
            }
        }
    }

private:
    const MlpSpec& spec_;
    const ParamVector& params_;
    std::vector<LayerShape> layers_;
    std::vector<Trace> traces_;
};

double l2_penalty(const std::vector<LayerShape>& layers, const ParamVector& params,
                  std::vector<double>* grad) {
    double penalty = 0.0;
    for (const auto& s : layers) {
        if (s.l2 == 0.0) continue;
        const std::size_t n = s.fan_in * s.fan_out;
        for (std::size_t k = 0; k < n; ++k) {
            const double w = params.values[s.weight_offset + k];
            penalty += s.l2 * w * w;
            if (grad) (*grad)[s.weight_offset + k] += 2.0 * s.l2 * w;
        }
    }
    return penalty;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string to_string(Activation a) {
    switch (a) {
        case Activation::elu: return "elu";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& name) {
    if (name == "elu") return Activation::elu;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw DomainError("unknown activation '" + name + "'");
}

std::string to_string(OutputActivation a) {
    switch (a) {
        case OutputActivation::linear: return "linear";
        case OutputActivation::sigmoid: return "sigmoid";
        case OutputActivation::raw_variance: return "raw_variance";
    }
    return "unknown";
}

OutputActivation output_activation_from_string(const std::string& name) {
    if (name == "linear") return OutputActivation::linear;
    if (name == "sigmoid") return OutputActivation::sigmoid;
    if (name == "raw_variance") return OutputActivation::raw_variance;
    throw DomainError("unknown output activation '" + name + "'");
}

void MlpSpec::validate() const {
    if (input_dim == 0) throw DomainError("input dimension must be positive");
    if (branches.empty() || branches.size() > 2) throw DomainError("network needs one or two branches");
    for (const auto& b : branches) {
        if (std::any_of(b.hidden.begin(), b.hidden.end(), [](std::size_t w) { return w == 0; })) {
            throw DomainError("layer widths must be positive");
        }
        if (b.l2.size() != b.layer_count()) {
            throw DomainError("branch needs one l2 constant per layer");
        }
        for (double c : b.l2) {
            if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("l2 constants must be nonnegative");
        }
    }
    if (branches.size() == 2 && (branches[0].output == OutputActivation::raw_variance ||
                                 branches[1].output != OutputActivation::raw_variance)) {
        throw DomainError("two-branch networks are mean (first) and raw variance (second)");
    }
}

std::size_t MlpSpec::param_count() const {
    std::size_t n = 0;
    for (const auto& s : layout(*this)) n += s.fan_in * s.fan_out + s.fan_out;
    return n;
}

MlpSpec MlpSpec::single(std::size_t input_dim, std::vector<std::size_t> hidden, double l2,
                        Activation act, OutputActivation out) {
    BranchSpec b{std::move(hidden), out, {}};
    b.l2.assign(b.layer_count(), l2);
    MlpSpec spec{input_dim, {std::move(b)}, act};
    spec.validate();
    return spec;
}

MlpSpec MlpSpec::mean_variance(std::size_t input_dim, std::vector<std::size_t> mean_hidden,
                               std::vector<std::size_t> variance_hidden, double l2,
                               Activation act) {
    BranchSpec mean{std::move(mean_hidden), OutputActivation::linear, {}};
    mean.l2.assign(mean.layer_count(), l2);
    BranchSpec var{std::move(variance_hidden), OutputActivation::raw_variance, {}};
    var.l2.assign(var.layer_count(), l2);
    MlpSpec spec{input_dim, {std::move(mean), std::move(var)}, act};
    spec.validate();
    return spec;
}

std::vector<LayerShape> layout(const MlpSpec& spec) {
    std::vector<LayerShape> layers;
    std::size_t offset = 0;
    for (std::size_t b = 0; b < spec.branches.size(); ++b) {
        const auto& branch = spec.branches[b];
        std::size_t fan_in = spec.input_dim;
        for (std::size_t l = 0; l < branch.layer_count(); ++l) {
            LayerShape s;
            s.branch = b;
            s.index = l;
            s.fan_in = fan_in;
            s.is_output = (l == branch.hidden.size());
            s.fan_out = s.is_output ? 1 : branch.hidden[l];
            s.weight_offset = offset;
            s.bias_offset = offset + s.fan_in * s.fan_out;
            s.l2 = l < branch.l2.size() ? branch.l2[l] : 0.0;
            offset = s.bias_offset + s.fan_out;
            fan_in = s.fan_out;
            layers.push_back(s);
        }
    }
    return layers;
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParamVector params{std::vector<double>(spec.param_count(), 0.0)};
    std::mt19937_64 rng(seed);
    for (const auto& s : layout(spec)) {
        const double limit = std::sqrt(6.0 / static_cast<double>(s.fan_in + s.fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (std::size_t k = 0; k < s.fan_in * s.fan_out; ++k) {
            params.values[s.weight_offset + k] = dist(rng);
        }
    }
    return params;
}

std::vector<double> forward(const MlpSpec& spec, const ParamVector& params,
                            std::span<const double> x) {
    Evaluator eval(spec, params);
    std::vector<double> out;
    eval.run(x, out);
    return out;
}

void validate_compatible(const MlpSpec& spec, const Head& head) {
    spec.validate();
    if (spec.branches.size() != head.output_count()) {
        throw DomainError(to_string(head.kind) + " head needs " +
                          std::to_string(head.output_count()) + " network branch(es)");
    }
    if (spec.branches[0].output != OutputActivation::linear) {
        throw DomainError(to_string(head.kind) + " head expects a linear first output");
    }
}

LossAndGrad loss_and_grad(const MlpSpec& spec, const ParamVector& params,
                          const WeightedDataset& data, std::span<const std::size_t> batch,
                          const Head& head) {
    if (batch.empty()) throw DomainError("loss_and_grad: empty batch");
    validate_compatible(spec, head);
    Evaluator eval(spec, params);
    LossAndGrad result;
    result.grad.values.assign(params.size(), 0.0);

    double total_weight = 0.0;
    for (std::size_t i : batch) total_weight += data[i].weight;

    std::vector<double> out, delta, delta_prev;
    double nll_sum = 0.0;
    for (std::size_t i : batch) {
        const Record& r = data[i];
        eval.run(r.x, out);
        const NllGrad g = nll_and_grad(head, out, r.y);
        const double scale = r.weight / total_weight;
        nll_sum += scale * g.nll;
        eval.backprop(r.x, std::span<const double>(g.d_raw, out.size()), scale,
                      result.grad.values, delta, delta_prev);
    }
    result.loss = nll_sum + l2_penalty(eval.layers(), params, &result.grad.values);
    if (!std::isfinite(result.loss)) {
        throw NumericError(eval.layers().size() - 1, "non-finite loss");
    }
    return result;
}

double full_loss(const MlpSpec& spec, const ParamVector& params, const WeightedDataset& data,
                 const Head& head) {
    if (data.empty()) throw DomainError("full_loss: empty dataset");
    validate_compatible(spec, head);
    Evaluator eval(spec, params);
    const double total_weight = data.total_weight();
    std::vector<double> out;
    double nll_sum = 0.0;
    for (const Record& r : data) {
        eval.run(r.x, out);
        nll_sum += (r.weight / total_weight) * nll_and_grad(head, out, r.y).nll;
    }
    return nll_sum + l2_penalty(eval.layers(), params, nullptr);
}

DistParams predict(const MlpSpec& spec, const ParamVector& params, const Head& head,
                   std::span<const double> x) {
    return params_from_outputs(head, forward(spec, params, x));
}

void write_checkpoint(std::ostream& out, const MlpSpec& spec, const ParamVector& params) {
    spec.validate();
    if (params.size() != spec.param_count()) throw DomainError("checkpoint: parameter count mismatch");
    out << "deeplr-checkpoint 1\n";
    out << "input_dim " << spec.input_dim << '\n';
    out << "hidden_activation " << to_string(spec.hidden_activation) << '\n';
    out << "branches " << spec.branches.size() << '\n';
    for (const auto& b : spec.branches) {
        out << "branch " << to_string(b.output) << '\n';
        out << "hidden " << b.hidden.size();
        for (auto w : b.hidden) out << ' ' << w;
        out << "\nl2 " << b.l2.size();
        for (double c : b.l2) out << ' ' << format_double(c);
        out << '\n';
    }
    out << "params " << params.size() << '\n';
    for (double v : params.values) out << format_double(v) << '\n';
}

Checkpoint read_checkpoint(std::istream& in) {
    auto expect = [&](const std::string& key) {
        std::string word;
        if (!(in >> word) || word != key) {
            throw FormatError("checkpoint: expected '" + key + "', found '" + word + "'");
        }
    };
    auto read_size = [&]() {
        long long v = -1;
        if (!(in >> v) || v < 0) throw FormatError("checkpoint: expected a count");
        return static_cast<std::size_t>(v);
    };
    auto read_word = [&]() {
        std::string w;
        if (!(in >> w)) throw FormatError("checkpoint: truncated");
        return w;
    };
    auto read_double = [&]() {
        const std::string w = read_word();
        char* end = nullptr;
        const double v = std::strtod(w.c_str(), &end);
        if (end != w.c_str() + w.size()) throw FormatError("checkpoint: bad number '" + w + "'");
        return v;
    };

    expect("deeplr-checkpoint");
    if (read_size() != 1) throw FormatError("checkpoint: unsupported version");
    Checkpoint cp;
    expect("input_dim");
    cp.spec.input_dim = read_size();
    expect("hidden_activation");
    cp.spec.hidden_activation = activation_from_string(read_word());
    expect("branches");
    const std::size_t nb = read_size();
    for (std::size_t b = 0; b < nb; ++b) {
        BranchSpec branch;
        expect("branch");
        branch.output = output_activation_from_string(read_word());
        expect("hidden");
        branch.hidden.resize(read_size());
        for (auto& w : branch.hidden) w = read_size();
        expect("l2");
        branch.l2.resize(read_size());
        for (auto& c : branch.l2) c = read_double();
        cp.spec.branches.push_back(std::move(branch));
    }
    cp.spec.validate();
    expect("params");
    const std::size_t np = read_size();
    if (np != cp.spec.param_count()) throw FormatError("checkpoint: parameter count mismatch");
    cp.params.values.resize(np);
    for (auto& v : cp.params.values) {
        v = read_double();
        if (!std::isfinite(v)) throw FormatError("checkpoint: non-finite parameter");
    }
    return cp;
}

void save_checkpoint(const std::string& path, const MlpSpec& spec, const ParamVector& params) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    write_checkpoint(out, spec, params);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot read " + path);
    return read_checkpoint(in);
}

}  // namespace deeplr
