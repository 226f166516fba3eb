// deeplr command-line tool: dataset generation, training, single intervals and the
// experiment / Monte-Carlo runners.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "deeplr/deeplr.hpp"
#include "deeplr/errors.hpp"
#include "deeplr/harness.hpp"
#include "deeplr/io.hpp"

namespace {

using namespace deeplr;
using deeplr::io::json;

struct GlobalFlags {
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<int> dof;
    std::optional<double> delta;
    std::optional<double> lambda_max;
    std::optional<std::string> out;
    std::size_t workers = 1;
    std::optional<std::string> config;
};

std::vector<double> parse_point(const std::string& text) {
    std::vector<double> x;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            x.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw FormatError("bad coordinate '" + item + "' in --x0");
        }
    }
    if (x.empty()) throw FormatError("--x0 is empty");
    return x;
}

// Config file if given, else the named preset; command-line flags win over both.
harness::ExperimentConfig resolve_config(const GlobalFlags& g, const std::string& preset_name) {
    auto c = g.config ? io::load_experiment_config(*g.config)
                      : harness::preset(harness::experiment_id_from_string(preset_name));
    if (g.seed) {
        c.dataset_seed = *g.seed;
        c.train.seed = *g.seed;
    }
    if (g.alpha) c.alpha = *g.alpha;
    if (g.dof) c.search.dof = *g.dof;
    if (g.delta) c.search.delta = *g.delta;
    if (g.lambda_max) c.search.lambda_max = *g.lambda_max;
    if (g.out) c.output_path = *g.out;
    c.validate();
    return c;
}

void emit(const json& j, const std::optional<std::string>& path) {
    if (path) {
        io::write_json_file(*path, j);
    } else {
        std::cout << j.dump(2) << '\n';
    }
}

int report_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Likelihood-ratio confidence intervals for neural-network outputs"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags g;
    app.add_option("--seed", g.seed, "Dataset and training seed");
    app.add_option("--alpha", g.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    app.add_option("--dof", g.dof, "Chi-square degrees of freedom")->check(CLI::IsMember({1, 2}));
    app.add_option("--delta", g.delta, "Perturbation target offset (normalized units)");
    app.add_option("--lambda-max", g.lambda_max, "Largest mixing weight explored");
    app.add_option("--out", g.out, "Output file or directory");
    app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--config", g.config, "Experiment configuration JSON");

    auto* gen = app.add_subcommand("gen", "Generate a dataset CSV");
    std::string gen_dataset = "toy-regression";
    std::size_t gen_n = 80;
    double gen_noise = 0.1;
    gen->add_option("dataset", gen_dataset, "toy-regression | toy-classification | two-moon");
    gen->add_option("-n,--n", gen_n, "Number of records");
    gen->add_option("--noise", gen_noise, "Noise standard deviation");

    auto* tr = app.add_subcommand("train", "Train a base network on a dataset CSV");
    std::string tr_data;
    std::string tr_preset = "toy-regression";
    tr->add_option("--data", tr_data, "Dataset CSV")->required();
    tr->add_option("--preset", tr_preset, "Preset supplying architecture and training settings");

    auto* ci = app.add_subcommand("ci", "DeepLR interval at one input");
    std::string ci_data;
    std::string ci_checkpoint;
    std::string ci_x0;
    std::string ci_preset = "toy-regression";
    ci->add_option("--data", ci_data, "Dataset CSV the checkpoint was trained on")->required();
    ci->add_option("--checkpoint", ci_checkpoint, "Base network checkpoint")->required();
    ci->add_option("--x0", ci_x0, "Comma-separated input coordinates")->required();
    ci->add_option("--preset", ci_preset, "Preset supplying head and training settings");

    auto* ex = app.add_subcommand("experiment", "Run a reference experiment over its grid");
    std::string ex_preset;
    ex->add_option("preset", ex_preset, "toy-regression | toy-classification | two-moon")->required();

    auto* cov = app.add_subcommand("coverage", "Empirical coverage over replicated datasets");
    std::optional<std::size_t> cov_reps;
    cov->add_option("--reps", cov_reps, "Replications");

    auto* wilks = app.add_subcommand("wilks-mc", "Chi-square(1) check of the Gaussian-mean statistic");
    std::optional<std::size_t> wilks_reps;
    std::optional<std::size_t> wilks_n;
    bool wilks_unknown = false;
    wilks->add_option("--reps", wilks_reps, "Replications");
    wilks->add_option("-n,--n", wilks_n, "Samples per replication");
    wilks->add_flag("--unknown-sigma", wilks_unknown, "Profile the variance as well");

    auto* markov = app.add_subcommand("markov-mc", "Rejection rate of the simple-vs-simple test");
    std::optional<std::size_t> markov_reps;
    std::optional<std::size_t> markov_n;
    std::optional<double> markov_h1;
    markov->add_option("--reps", markov_reps, "Replications");
    markov->add_option("-n,--n", markov_n, "Samples per replication");
    markov->add_option("--h1-mean", markov_h1, "Mean under the alternative");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return report_error("usage_error", e.what());
    }

    try {
        if (*gen) {
            const auto kind = harness::dataset_kind_from_string(gen_dataset);
            const std::uint64_t seed = g.seed.value_or(0);
            WeightedDataset data;
            switch (kind) {
                case harness::DatasetKind::toy_regression:
                    data = harness::gen_toy_regression(gen_n, seed, gen_noise);
                    break;
                case harness::DatasetKind::toy_classification:
                    data = harness::gen_toy_classification(gen_n, seed);
                    break;
                case harness::DatasetKind::two_moon:
                    data = harness::gen_two_moons(gen_n, gen_noise, seed);
                    break;
            }
            if (g.out) {
                save_dataset(*g.out, data);
            } else {
                write_dataset_csv(std::cout, data);
            }
        } else if (*tr) {
            const auto config = resolve_config(g, tr_preset);
            const auto data = load_dataset(tr_data);
            if (data.input_dim() != config.mlp.input_dim) {
                throw DomainError("dataset input dimension does not match the architecture");
            }
            const auto params =
                train(config.mlp, init_params(config.mlp, config.train.seed), data, config.head, config.train);
            if (g.out) {
                save_checkpoint(*g.out, config.mlp, params);
            } else {
                write_checkpoint(std::cout, config.mlp, params);
            }
        } else if (*ci) {
            const auto config = resolve_config(g, ci_preset);
            const auto data = load_dataset(ci_data);
            const auto checkpoint = load_checkpoint(ci_checkpoint);
            const auto x0 = parse_point(ci_x0);
            const auto interval = confidence_interval(x0, config.alpha, data, checkpoint.spec, checkpoint.params,
                                                      config.head, config.train, config.search);
            emit(io::to_json(interval), g.out);
        } else if (*ex) {
            const auto config = resolve_config(g, ex_preset);
            harness::RunOptions options;
            options.workers = g.workers;
            const auto result = harness::run_experiment(config, options);
            std::cout << result.csv_path << '\n';
        } else if (*cov) {
            auto config = resolve_config(g, "coverage");
            harness::CoverageOptions options;
            options.workers = g.workers;
            options.replications = cov_reps.value_or(config.reps > 0 ? config.reps : 20);
            const auto report = harness::run_coverage(config, options);
            std::cout << io::to_json(report).dump(2) << '\n';
        } else if (*wilks) {
            const auto config = resolve_config(g, "wilks-mc");
            const auto report = harness::run_wilks_mc(wilks_reps.value_or(config.reps),
                                                      wilks_n.value_or(config.n_per_rep), config.dataset_seed,
                                                      wilks_unknown || config.unknown_sigma);
            emit(io::to_json(report), g.out);
        } else if (*markov) {
            const auto config = resolve_config(g, "markov-mc");
            const auto report =
                harness::run_markov_mc(markov_reps.value_or(config.reps), markov_n.value_or(config.n_per_rep),
                                       config.alpha, config.dataset_seed, markov_h1.value_or(config.h1_mean));
            emit(io::to_json(report), g.out);
        }
    } catch (const Error& e) {
        return report_error(e.kind(), e.what());
    } catch (const std::exception& e) {
        return report_error("internal_error", e.what());
    }
    return 0;
}
