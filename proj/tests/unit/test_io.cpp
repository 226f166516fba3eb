#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"

#include "deeplr/errors.hpp"
#include "deeplr/io.hpp"

using namespace deeplr;
using io::json;

TEST_CASE("interval json") {
    ConfidenceInterval ci;
    ci.method = "deeplr";
    ci.x0 = {0.25};
    ci.alpha = 0.05;
    ci.dof = 1;
    ci.lo = -0.5;
    ci.hi = 0.75;
    ci.f_base = 0.1;
    ci.f_plus = 0.9;
    ci.f_minus = std::numeric_limits<double>::quiet_NaN();
    ci.lambda_lo = 1.0;
    ci.lambda_hi = std::numeric_limits<double>::infinity();
    ci.profile = {{-0.5, 3.84}, {0.1, 0.0}};
    ci.diagnostics = {"endpoint-clamped"};
    const auto j = io::to_json(ci);
    for (const char* key : {"method", "x0", "alpha", "dof", "lo", "hi", "f_base", "f_plus", "f_minus",
                            "lambda_at_endpoints", "profile", "diagnostics"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["f_minus"].is_null());
    CHECK(j["lambda_at_endpoints"][1].is_null());
    CHECK(j["lo"].get<double>() == -0.5);
    CHECK(j["profile"].size() == 2);
    CHECK(j["diagnostics"][0] == "endpoint-clamped");
    CHECK(json::parse(j.dump()) == j);
}

TEST_CASE("experiment config round trip") {
    for (auto id : {harness::ExperimentId::toy_regression, harness::ExperimentId::toy_classification,
                    harness::ExperimentId::two_moon, harness::ExperimentId::coverage}) {
        const auto c = harness::preset(id);
        const auto j = io::to_json(c);
        const auto back = io::experiment_config_from_json(json::parse(j.dump()));
        CHECK(io::to_json(back) == j);
        CHECK(harness::config_hash(back) == harness::config_hash(c));
    }
}

TEST_CASE("missing keys fall back to the preset") {
    const json j = {{"experiment", "toy-regression"}, {"n", 40}, {"train", {{"epochs", 10}}}, {"search", {{"dof", 2}}}};
    const auto c = io::experiment_config_from_json(j);
    const auto p = harness::preset(harness::ExperimentId::toy_regression);
    CHECK(c.n == 40);
    CHECK(c.train.epochs == 10);
    CHECK(c.train.batch_size == p.train.batch_size);
    CHECK(c.search.dof == 2);
    CHECK(c.search.lambda_max == p.search.lambda_max);
    CHECK(c.grid == p.grid);
}

TEST_CASE("malformed configurations") {
    CHECK_THROWS_AS(io::experiment_config_from_json(json::array()), FormatError);
    CHECK_THROWS_AS(io::experiment_config_from_json(json{{"n", 3}}), FormatError);
    CHECK_THROWS_AS(io::experiment_config_from_json(json{{"experiment", "toy-regression"}, {"n", "many"}}),
                    FormatError);
    CHECK_THROWS_AS(io::experiment_config_from_json(json{{"experiment", "nope"}}), DomainError);
    CHECK_THROWS_AS(io::experiment_config_from_json(json{{"experiment", "toy-regression"}, {"alpha", 2.0}}),
                    DomainError);

    const auto dir = std::filesystem::temp_directory_path() / "deeplr_test_io";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "bad.json").string();
    std::ofstream(path) << "{ \"experiment\": ";
    CHECK_THROWS_AS(io::load_experiment_config(path), FormatError);
    CHECK_THROWS_AS(io::load_experiment_config((dir / "missing.json").string()), FormatError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifest") {
    const auto dir = std::filesystem::temp_directory_path() / "deeplr_test_manifest";
    std::filesystem::create_directories(dir);
    const auto c = harness::preset(harness::ExperimentId::two_moon);
    const auto path = io::write_manifest(c, dir.string(), "two-moon", json{{"extra_field", 3}});
    std::ifstream in(path);
    const auto m = json::parse(in);
    CHECK(m["experiment"] == "two-moon");
    CHECK(m["config_hash"] == harness::config_hash(c));
    CHECK(m["dataset_seed"] == c.dataset_seed);
    CHECK(m["train_seed"] == c.train.seed);
    CHECK(m["extra_field"] == 3);
    CHECK(io::experiment_config_from_json(m["config"]).n == c.n);
    std::filesystem::remove_all(dir);
}
