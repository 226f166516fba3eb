#pragma once

// Central finite-difference check of loss_and_grad on randomly drawn networks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "deeplr/mlp.hpp"

namespace gradcheck {

struct Draw {
    deeplr::MlpSpec spec;
    deeplr::ParamVector params;
    deeplr::WeightedDataset data;
};

inline Draw random_draw(const deeplr::Head& head, std::uint64_t seed) {
    using namespace deeplr;
    std::mt19937_64 rng(seed);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::uniform_real_distribution<double> l2(0.0, 0.01);

    const std::size_t input_dim = pick(1, 3);
    auto widths = [&] {
        std::vector<std::size_t> w(pick(1, 3));
        for (auto& v : w) v = pick(2, 6);
        return w;
    };
    const Activation act = pick(0, 1) == 0 ? Activation::elu : Activation::tanh;
    Draw d;
    if (head.kind == HeadKind::mean_variance_gaussian) {
        d.spec = MlpSpec::mean_variance(input_dim, widths(), widths(), l2(rng), act);
    } else {
        d.spec = MlpSpec::single(input_dim, widths(), l2(rng), act);
    }
    d.params = init_params(d.spec, seed);
    // nonzero biases so every code path is exercised
    for (const auto& layer : layout(d.spec)) {
        for (std::size_t i = 0; i < layer.fan_out; ++i) d.params.values[layer.bias_offset + i] = 0.3 * u(rng);
    }
    d.data = WeightedDataset(input_dim);
    const int n = pick(4, 10);
    std::uniform_real_distribution<double> w(0.1, 2.0);
    for (int i = 0; i < n; ++i) {
        std::vector<double> x(input_dim);
        for (double& v : x) v = u(rng);
        const double y = head.is_gaussian() ? u(rng) : static_cast<double>(pick(0, 1));
        d.data.add(std::move(x), y, w(rng));
    }
    return d;
}

// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over all parameters.
inline double max_relative_error(const Draw& d, const deeplr::Head& head, double step = 1e-5,
                                 double floor = 1e-6) {
    using namespace deeplr;
    std::vector<std::size_t> batch(d.data.size());
    std::iota(batch.begin(), batch.end(), 0);
    const auto analytic = loss_and_grad(d.spec, d.params, d.data, batch, head);
    double worst = 0.0;
    ParamVector p = d.params;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double orig = p.values[k];
        p.values[k] = orig + step;
        const double up = loss_and_grad(d.spec, p, d.data, batch, head).loss;
        p.values[k] = orig - step;
        const double dn = loss_and_grad(d.spec, p, d.data, batch, head).loss;
        p.values[k] = orig;
        const double fd = (up - dn) / (2.0 * step);
        const double g = analytic.grad.values[k];
        const double denom = std::max({std::abs(g), std::abs(fd), floor});
        worst = std::max(worst, std::abs(g - fd) / denom);
    }
    return worst;
}

}  // namespace gradcheck
