#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"

#include "deeplr/errors.hpp"
#include "deeplr/optim.hpp"

using namespace deeplr;

namespace {

WeightedDataset line_data(std::size_t n, std::uint64_t seed, double noise) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::normal_distribution<double> e(0.0, noise);
    WeightedDataset d(1);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = u(rng);
        d.add({x}, 2.0 * x + e(rng));
    }
    return d;
}

}  // namespace

TEST_CASE("batches") {
    const auto b = make_batches(5, 2, 1);
    REQUIRE(b.size() == 3);
    CHECK(b[0].size() == 2);
    CHECK(b[1].size() == 2);
    CHECK(b[2].size() == 1);

    const auto big = make_batches(97, 10, 8);
    std::multiset<std::size_t> seen;
    for (const auto& batch : big) seen.insert(batch.begin(), batch.end());
    CHECK(seen.size() == 97);
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 97);
    CHECK(*seen.rbegin() == 96);

    CHECK(make_batches(97, 10, 8) == big);
    CHECK(make_batches(97, 10, 9) != big);
    CHECK_THROWS_AS(make_batches(0, 3, 1), DomainError);
}

TEST_CASE("derived seeds are deterministic and distinct") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
}

TEST_CASE("config validation") {
    TrainConfig c;
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c.epochs = 1;
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c.batch_size = 4;
    c.optimizer.lr = -1.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    CHECK(optimizer_kind_from_string(to_string(OptimizerKind::sgd)) == OptimizerKind::sgd);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
    const auto spec = MlpSpec::single(1, {5}, 1e-3);
    const auto init = init_params(spec, 3);
    TrainConfig c;
    c.epochs = 1;
    c.optimizer.lr = 0.0;
    CHECK(train(spec, init, line_data(20, 1, 0.1), Head::homoscedastic(), c) == init);
}

TEST_CASE("linear regression recovers the least-squares slope") {
    const auto data = line_data(200, 4, 0.1);
    double sxx = 0.0;
    double sxy = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& r : data) {
        sx += r.x[0];
        sy += r.y;
        sxx += r.x[0] * r.x[0];
        sxy += r.x[0] * r.y;
    }
    const double n = static_cast<double>(data.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(std::abs(slope - 2.0) < 0.05);

    const auto spec = MlpSpec::single(1, {}, 0.0);
    TrainConfig c;
    c.epochs = 200;
    c.optimizer.lr = 0.01;
    c.seed = 5;
    const auto p = train(spec, init_params(spec, 5), data, Head::homoscedastic(), c);
    CHECK(std::abs(p.values[0] - slope) < 0.05);
    CHECK(std::abs(p.values[0] - 2.0) < 0.05);
}

TEST_CASE("training is deterministic and decreases the loss") {
    const auto spec = MlpSpec::mean_variance(1, {8, 8}, {3}, 1e-4);
    const auto data = line_data(50, 7, 0.2);
    TrainConfig c;
    c.epochs = 40;
    c.batch_size = 8;
    c.seed = 11;
    const auto init = init_params(spec, 11);
    const auto a = train(spec, init, data, Head::mean_variance(), c);
    const auto b = train(spec, init, data, Head::mean_variance(), c);
    CHECK(a == b);
    CHECK(full_loss(spec, a, data, Head::mean_variance()) < full_loss(spec, init, data, Head::mean_variance()));
}

TEST_CASE("jointly scaled weights give the same trajectory") {
    const auto spec = MlpSpec::single(1, {6}, 1e-4);
    const auto data = line_data(30, 9, 0.1);
    WeightedDataset scaled(1);
    for (const auto& r : data) scaled.add(r.x, r.y, 4.0);
    TrainConfig c;
    c.epochs = 20;
    c.batch_size = 7;
    const auto init = init_params(spec, 2);
    const auto a = train(spec, init, data, Head::homoscedastic(), c);
    const auto b = train(spec, init, scaled, Head::homoscedastic(), c);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.values[k] == doctest::Approx(b.values[k]).epsilon(1e-10));
}

TEST_CASE("variance warm-up freezes the variance branch") {
    const auto spec = MlpSpec::mean_variance(1, {4}, {3}, 1e-4);
    const auto data = line_data(30, 3, 0.2);
    TrainConfig c;
    c.epochs = 5;
    c.batch_size = 8;
    c.variance_warmup_epochs = 5;
    const auto init = init_params(spec, 4);
    const auto p = train(spec, init, data, Head::mean_variance(), c);
    const auto layers = layout(spec);
    const std::size_t var_start = layers[2].weight_offset;
    for (std::size_t k = var_start; k < p.size(); ++k) CHECK(p.values[k] == init.values[k]);
    bool mean_moved = false;
    for (std::size_t k = 0; k < var_start; ++k) mean_moved = mean_moved || p.values[k] != init.values[k];
    CHECK(mean_moved);

    c.variance_warmup_epochs = 4;
    const auto q = train(spec, init, data, Head::mean_variance(), c);
    bool var_moved = false;
    for (std::size_t k = var_start; k < q.size(); ++k) var_moved = var_moved || q.values[k] != init.values[k];
    CHECK(var_moved);
}

TEST_CASE("divergence is reported with its location") {
    const auto spec = MlpSpec::single(1, {4}, 0.0);
    TrainConfig c;
    c.epochs = 50;
    c.optimizer.kind = OptimizerKind::sgd;
    c.optimizer.lr = 1e6;
    try {
        train(spec, init_params(spec, 1), line_data(20, 1, 0.1), Head::homoscedastic(), c);
        FAIL("expected divergence");
    } catch (const TrainingDivergedError& e) {
        CHECK(e.kind() == "training_diverged");
        CHECK(e.epoch() < 50);
    }
}

TEST_CASE("train rejects mismatched inputs") {
    const auto spec = MlpSpec::single(2, {4}, 0.0);
    TrainConfig c;
    CHECK_THROWS_AS(train(spec, init_params(spec, 1), line_data(5, 1, 0.1), Head::homoscedastic(), c), DomainError);
    CHECK_THROWS_AS(train(spec, init_params(spec, 1), WeightedDataset(2), Head::homoscedastic(), c), DomainError);
}
