#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "deeplr/deeplr.hpp"
#include "deeplr/errors.hpp"
#include "deeplr/harness.hpp"
#include "deeplr/stats.hpp"

using namespace deeplr;

namespace {

// Gaussian-mean model with known unit variance written as a network with no hidden
// layers and a zero input weight: the bias is the mean.
struct MeanModel {
    MlpSpec spec = MlpSpec::single(1, {}, 0.0);
    Head head = Head::homoscedastic(1.0);
    WeightedDataset data{1};
    double ybar = 0.0;

    explicit MeanModel(std::size_t n, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd(0.3, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double y = nd(rng);
            data.add({static_cast<double>(i) / n}, y);
            ybar += y;
        }
        ybar /= static_cast<double>(n);
    }

    PerturbedPair pair(double plus_shift, double minus_shift) const {
        PerturbedPair p;
        p.base = ParamVector{{0.0, ybar}};
        p.plus = ParamVector{{0.0, ybar + plus_shift}};
        p.minus = ParamVector{{0.0, ybar - minus_shift}};
        p.x0 = {0.5};
        p.f_base = ybar;
        p.f_plus = ybar + plus_shift;
        p.f_minus = ybar - minus_shift;
        p.c_max = ybar + 1.0;
        p.c_min = ybar - 1.0;
        return p;
    }
};

bool has_flag(const std::vector<std::string>& flags, const std::string& f) {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

}  // namespace

TEST_CASE("anchor copies") {
    CHECK(n_extra_for(80, 32) == 5);
    CHECK(n_extra_for(64, 32) == 4);
    CHECK(n_extra_for(1, 32) == 1);
    CHECK(n_extra_for(60, 60) == 2);
}

TEST_CASE("augmented dataset") {
    const auto spec = MlpSpec::mean_variance(1, {4}, {2}, 0.0);
    const auto base = init_params(spec, 3);
    const auto data = harness::gen_toy_regression(20, 1);
    const std::vector<double> x0{0.1};
    const auto aug = build_augmented_dataset(data, spec, base, Head::mean_variance(), x0, 7.5, 5);
    REQUIRE(aug.size() == 25);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(aug[i].x == data[i].x);
        CHECK(aug[i].y == forward(spec, base, data[i].x)[0]);
        CHECK(aug[i].weight == 1.0);
    }
    double anchor_weight = 0.0;
    for (std::size_t i = 20; i < 25; ++i) {
        CHECK(aug[i].x == x0);
        CHECK(aug[i].y == 7.5);
        anchor_weight += aug[i].weight;
    }
    CHECK(std::abs(anchor_weight - 1.0) < 1e-15);
}

TEST_CASE("bias-only network reproduces the analytic statistic") {
    const MeanModel m(40, 2);
    const auto pair = m.pair(0.8, 0.6);
    const double n = 40.0;
    const LikelihoodProfile profile(pair, m.data, m.spec, m.head);
    for (double d : {-1.0, -0.3, -0.05, 0.0, 0.01, 0.2, 0.9}) {
        const double c = m.ybar + d;
        CAPTURE(d);
        CHECK(std::abs(profile.evaluate(c).t - n * d * d) < 1e-6);
        CHECK(std::abs(test_statistic(c, pair, m.data, m.spec, m.head) - n * d * d) < 1e-6);
    }
    CHECK(profile.evaluate(m.ybar).t == 0.0);
    CHECK(profile.evaluate(m.ybar).raw == 0.0);
}

TEST_CASE("lambda round trip") {
    const MeanModel m(10, 3);
    const auto pair = m.pair(0.4, 0.9);
    const LikelihoodProfile profile(pair, m.data, m.spec, m.head);
    for (double c : {m.ybar - 0.7, m.ybar - 0.1, m.ybar + 0.05, m.ybar + 0.5}) {
        const double lam = profile.lambda_for(c);
        const double f_dir = c > m.ybar ? pair.f_plus : pair.f_minus;
        CHECK(std::abs((1 - lam) * m.ybar + lam * f_dir - c) < 1e-9);
    }
}

TEST_CASE("interval on the mean model equals the known-variance interval") {
    const MeanModel m(30, 4);
    const auto pair = m.pair(1.0, 1.0);
    const auto ci = interval_from_pair(pair, m.data, m.spec, m.head, 0.05);
    const double half = std::sqrt(stats::chi2_quantile(0.95, 1) / 30.0);
    CHECK(std::abs(ci.lo - (m.ybar - half)) < 1e-3);
    CHECK(std::abs(ci.hi - (m.ybar + half)) < 1e-3);
    CHECK(ci.contains(ci.f_base));
    CHECK(ci.lo <= ci.hi);
    CHECK(ci.dof == 1);
    CHECK(ci.diagnostics.empty());
    for (const auto& p : ci.profile) CHECK(p.t >= 0.0);
    CHECK(std::is_sorted(ci.profile.begin(), ci.profile.end(),
                         [](const ProfilePoint& a, const ProfilePoint& b) { return a.c < b.c; }));
}

TEST_CASE("nesting in alpha and degrees of freedom") {
    const MeanModel m(25, 5);
    const auto pair = m.pair(0.9, 1.1);
    SearchOptions o1;
    SearchOptions o2;
    o2.dof = 2;
    const auto a = interval_from_pair(pair, m.data, m.spec, m.head, 0.05, o1);
    const auto b = interval_from_pair(pair, m.data, m.spec, m.head, 0.05, o2);
    const auto c = interval_from_pair(pair, m.data, m.spec, m.head, 0.10, o1);
    CHECK(b.lo <= a.lo);
    CHECK(b.hi >= a.hi);
    CHECK(a.lo <= c.lo);
    CHECK(a.hi >= c.hi);
}

TEST_CASE("short perturbations clamp the endpoint") {
    const MeanModel m(20, 6);
    const auto pair = m.pair(0.01, 1.0);
    const auto ci = interval_from_pair(pair, m.data, m.spec, m.head, 0.05);
    CHECK(ci.hi == doctest::Approx(m.ybar + 1.25 * 0.01).epsilon(1e-12));
    CHECK(has_flag(ci.diagnostics, flags::kEndpointClamped));
    CHECK(has_flag(ci.diagnostics, flags::kLambdaExtrapolated));
    CHECK(ci.lambda_hi == doctest::Approx(1.25));
}

TEST_CASE("wrong-direction perturbations") {
    const MeanModel m(20, 7);
    auto pair = m.pair(-0.3, 1.0);
    pair.diagnostics.push_back(flags::kPlusWrongDirection);
    const auto ci = interval_from_pair(pair, m.data, m.spec, m.head, 0.05);
    CHECK(ci.hi == ci.f_base);
    CHECK(ci.lo < ci.f_base);
    CHECK(has_flag(ci.diagnostics, flags::kPlusWrongDirection));

    SearchOptions strict;
    strict.collapse_unreachable = false;
    CHECK_THROWS_AS(interval_from_pair(pair, m.data, m.spec, m.head, 0.05, strict), UnreachableDirectionError);

    const auto flat = m.pair(0.0, 1.0);
    CHECK_THROWS_AS(test_statistic(m.ybar + 0.1, flat, m.data, m.spec, m.head), UnreachableDirectionError);
    CHECK(test_statistic(m.ybar - 0.1, flat, m.data, m.spec, m.head) > 0.0);
}

TEST_CASE("search option validation") {
    SearchOptions o;
    o.dof = 3;
    CHECK_THROWS_AS(o.validate(), DomainError);
    o = {};
    o.delta = 0.0;
    CHECK_THROWS_AS(o.validate(), DegenerateRequestError);
    o = {};
    o.lambda_max = 0.5;
    CHECK_THROWS_AS(o.validate(), DomainError);
    const MeanModel m(10, 8);
    CHECK_THROWS_AS(interval_from_pair(m.pair(1, 1), m.data, m.spec, m.head, 1.0), DomainError);
}

TEST_CASE("perturbation targets") {
    const auto spec = MlpSpec::single(1, {4}, 0.0);
    const auto data = harness::gen_toy_classification(20, 2);
    TrainConfig c;
    c.epochs = 2;
    c.batch_size = 8;
    const auto base = init_params(spec, 1);
    const std::vector<double> x0{0.5};
    const auto pair = train_perturbed_pair(spec, base, data, Head::bernoulli(), c, x0);
    CHECK(pair.c_min == 0.0);
    CHECK(pair.c_max == 1.0);

    const auto rdata = harness::gen_toy_regression(20, 2);
    const auto g = train_perturbed_pair(spec, base, rdata, Head::homoscedastic(), c, x0, 0.5);
    CHECK(g.c_max == doctest::Approx(g.f_base + 0.5));
    CHECK(g.c_min == doctest::Approx(g.f_base - 0.5));
    CHECK_THROWS_AS(train_perturbed_pair(spec, base, rdata, Head::homoscedastic(), c, x0, 0.0),
                    DegenerateRequestError);
}

TEST_CASE("perturbation moves the prediction in the data gap") {
    const auto config = harness::preset(harness::ExperimentId::toy_regression);
    const auto raw = harness::generate_dataset(config, config.dataset_seed);
    const auto model = harness::fit_base_model(config, raw);
    const std::vector<double> x0{0.0};
    const auto pair = train_perturbed_pair(config.mlp, model.base, model.data, config.head, config.train, x0);
    CHECK(pair.f_plus - pair.f_base > 0.1);
    CHECK(pair.f_base - pair.f_minus > 0.1);

    const auto ci = interval_from_pair(pair, model.data, config.mlp, config.head, 0.05);
    const auto again = interval_from_pair(pair, model.data, config.mlp, config.head, 0.05);
    CHECK(ci.lo == again.lo);
    CHECK(ci.hi == again.hi);
    CHECK(ci.contains(pair.f_base));
}
