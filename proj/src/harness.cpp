#include "deeplr/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "deeplr/errors.hpp"
#include "deeplr/io.hpp"
#include "deeplr/stats.hpp"

namespace deeplr::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_even(std::size_t n, const char* what) {
    if (n == 0 || n % 2 != 0) throw DomainError(std::string(what) + ": n must be a positive even number");
}

std::vector<std::vector<double>> linspace_grid(double lo, double hi, std::size_t count) {
    std::vector<std::vector<double>> grid;
    for (std::size_t k = 0; k < count; ++k) {
        grid.push_back({lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1)});
    }
    return grid;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_flags(const std::vector<std::string>& flags) {
    std::string out;
    for (const auto& f : flags) {
        if (!out.empty()) out += ';';
        out += f;
    }
    return out;
}

// Writes through a temporary file so a failed run leaves no partial CSV behind.
void write_atomically(const std::string& path, const std::function<void(std::ostream&)>& body) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw FormatError("cannot write " + tmp);
        try {
            body(out);
        } catch (...) {
            out.close();
            std::filesystem::remove(tmp);
            throw;
        }
    }
    std::filesystem::rename(tmp, path);
}

double asymmetry(const ConfidenceInterval& ci) {
    const double below = ci.f_base - ci.lo;
    const double above = ci.hi - ci.f_base;
    return below > 0.0 ? above / below : kNaN;
}

}  // namespace

WeightedDataset gen_toy_regression(std::size_t n, std::uint64_t seed, double noise_sd) {
    require_even(n, "gen_toy_regression");
    if (!(noise_sd >= 0.0)) throw DomainError("noise scale must be nonnegative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> left(-1.0, -0.2), right(0.2, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    WeightedDataset data(1);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i < n / 2 ? left(rng) : right(rng);
        data.add({x}, toy_regression_truth(x) + noise_sd * noise(rng));
    }
    return data;
}

WeightedDataset gen_toy_classification(std::size_t n, std::uint64_t seed) {
    require_even(n, "gen_toy_classification");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> left(0.0, 0.2), right(0.8, 1.0), unit(0.0, 1.0);
    WeightedDataset data(1);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i < n / 2 ? left(rng) : right(rng);
        data.add({x}, unit(rng) < toy_classification_truth(x) ? 1.0 : 0.0);
    }
    return data;
}

WeightedDataset gen_toy_classification_at(double x, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    WeightedDataset data(1);
    for (std::size_t i = 0; i < n; ++i) data.add({x}, unit(rng) < toy_classification_truth(x) ? 1.0 : 0.0);
    return data;
}

WeightedDataset gen_two_moons(std::size_t n, double noise_sd, std::uint64_t seed) {
    require_even(n, "gen_two_moons");
    if (!(noise_sd >= 0.0)) throw DomainError("noise scale must be nonnegative");
    const std::size_t half = n / 2;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    WeightedDataset data(2);
    for (int label = 0; label < 2; ++label) {
        for (std::size_t i = 0; i < half; ++i) {
            const double t = half > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(half - 1) : 0.0;
            double x = label == 0 ? std::cos(t) : 1.0 - std::cos(t);
            double y = label == 0 ? std::sin(t) : 0.5 - std::sin(t);
            x += noise_sd * noise(rng);
            y += noise_sd * noise(rng);
            data.add({x, y}, static_cast<double>(label));
        }
    }
    return data;
}

double toy_regression_truth(double x) { return 2.0 * x * x; }

double toy_classification_truth(double x) { return 0.5 + 0.4 * std::cos(6.0 * x); }

std::string to_string(ExperimentId id) {
    switch (id) {
        case ExperimentId::toy_regression: return "toy-regression";
        case ExperimentId::toy_classification: return "toy-classification";
        case ExperimentId::two_moon: return "two-moon";
        case ExperimentId::coverage: return "coverage";
        case ExperimentId::wilks_mc: return "wilks-mc";
        case ExperimentId::markov_mc: return "markov-mc";
    }
    return "unknown";
}

ExperimentId experiment_id_from_string(const std::string& name) {
    for (auto id : {ExperimentId::toy_regression, ExperimentId::toy_classification, ExperimentId::two_moon,
                    ExperimentId::coverage, ExperimentId::wilks_mc, ExperimentId::markov_mc}) {
        if (to_string(id) == name) return id;
    }
    throw DomainError("unknown experiment '" + name + "'");
}

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::toy_regression: return "toy-regression";
        case DatasetKind::toy_classification: return "toy-classification";
        case DatasetKind::two_moon: return "two-moon";
    }
    return "unknown";
}

DatasetKind dataset_kind_from_string(const std::string& name) {
    for (auto k : {DatasetKind::toy_regression, DatasetKind::toy_classification, DatasetKind::two_moon}) {
        if (to_string(k) == name) return k;
    }
    throw DomainError("unknown dataset '" + name + "'");
}

void ExperimentConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    search.validate();
    train.validate();
    if (experiment == ExperimentId::wilks_mc || experiment == ExperimentId::markov_mc) return;
    if (grid.empty()) throw DomainError("evaluation grid is empty");
    validate_compatible(mlp, head);
    for (const auto& x : grid) {
        if (x.size() != mlp.input_dim) throw DomainError("grid point has the wrong input dimension");
    }
    require_even(n, "experiment");
    if (normalize_targets && !head.is_gaussian()) {
        throw DomainError("target normalization applies to regression heads only");
    }
    if (ensemble_size == 1) throw DomainError("an ensemble needs at least two members");
}

ExperimentConfig preset(ExperimentId id) {
    ExperimentConfig c;
    c.experiment = id;
    c.train.optimizer = OptimizerConfig{};
    c.train.batch_size = 32;
    c.train.seed = 1;
    c.alpha = 0.05;
    c.ensemble_size = 10;
    switch (id) {
        case ExperimentId::toy_regression:
        case ExperimentId::coverage:
            c.dataset = DatasetKind::toy_regression;
            c.n = 80;
            c.noise_sd = 0.1;
            c.normalize_targets = true;
            c.train.epochs = 400;
            c.train.variance_warmup_epochs = 200;
            c.head = Head::mean_variance();
            c.mlp = MlpSpec::mean_variance(1, {40, 30, 20}, {5, 2}, 1e-4);
            if (id == ExperimentId::coverage) {
                // 400 epochs leaves the base fit biased at the in-data points; the
                // coverage study trains to convergence.
                c.train.epochs = 2000;
                c.train.variance_warmup_epochs = 1000;
                c.grid = {{-0.6}, {0.6}};
                c.reps = 20;
                c.ensemble_size = 0;
            } else {
                c.grid = linspace_grid(-1.0, 1.0, 41);
            }
            break;
        case ExperimentId::toy_classification:
            c.dataset = DatasetKind::toy_classification;
            c.n = 60;
            c.normalize_targets = false;
            c.train.epochs = 300;
            c.head = Head::bernoulli();
            c.mlp = MlpSpec::single(1, {30, 30, 30}, 1e-4);
            c.grid = linspace_grid(0.0, 1.0, 41);
            break;
        case ExperimentId::two_moon:
            c.dataset = DatasetKind::two_moon;
            c.n = 80;
            c.noise_sd = 0.1;
            c.normalize_targets = false;
            c.train.epochs = 500;
            c.head = Head::bernoulli();
            c.mlp = MlpSpec::single(2, {30, 30, 30}, 1e-3);
            for (int i = 0; i <= 14; ++i) {
                for (int j = 0; j <= 11; ++j) c.grid.push_back({-3.0 + 0.5 * i, -2.5 + 0.5 * j});
            }
            break;
        case ExperimentId::wilks_mc:
            c.reps = 10000;
            c.n_per_rep = 50;
            c.head = Head::homoscedastic(1.0);
            c.mlp = MlpSpec::single(1, {}, 0.0);
            c.train.epochs = 1;
            break;
        case ExperimentId::markov_mc:
            c.reps = 20000;
            c.n_per_rep = 20;
            c.h1_mean = 0.5;
            c.head = Head::homoscedastic(1.0);
            c.mlp = MlpSpec::single(1, {}, 0.0);
            c.train.epochs = 1;
            break;
    }
    return c;
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string text = io::to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

WeightedDataset generate_dataset(const ExperimentConfig& config, std::uint64_t seed) {
    switch (config.dataset) {
        case DatasetKind::toy_regression: return gen_toy_regression(config.n, seed, config.noise_sd);
        case DatasetKind::toy_classification: return gen_toy_classification(config.n, seed);
        case DatasetKind::two_moon: return gen_two_moons(config.n, config.noise_sd, seed);
    }
    throw DomainError("unknown dataset");
}

double truth_at(DatasetKind kind, const std::vector<double>& x) {
    switch (kind) {
        case DatasetKind::toy_regression: return toy_regression_truth(x.at(0));
        case DatasetKind::toy_classification: return toy_classification_truth(x.at(0));
        case DatasetKind::two_moon: return kNaN;
    }
    return kNaN;
}

FittedModel fit_base_model(const ExperimentConfig& config, const WeightedDataset& raw) {
    FittedModel model;
    if (config.normalize_targets) {
        model.scaler = TargetScaler::fit(raw);
        model.data = model.scaler.apply(raw);
    } else {
        model.data = raw;
    }
    model.base = train(config.mlp, init_params(config.mlp, config.train.seed), model.data,
                       config.head, config.train);
    return model;
}

ConfidenceInterval to_original_units(ConfidenceInterval ci, const TargetScaler& scaler) {
    if (scaler.mean == 0.0 && scaler.scale == 1.0) return ci;
    auto map = [&](double& v) { v = scaler.inverse(v); };
    map(ci.lo);
    map(ci.hi);
    map(ci.f_base);
    map(ci.f_plus);
    map(ci.f_minus);
    for (auto& p : ci.profile) map(p.c);
    return ci;
}

ConfidenceInterval deeplr_interval(const ExperimentConfig& config, const FittedModel& model,
                                   const std::vector<double>& x0, double alpha,
                                   const SearchOptions& options) {
    const auto ci = confidence_interval(x0, alpha, model.data, config.mlp, model.base, config.head,
                                        config.train, options);
    return to_original_units(ci, model.scaler);
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    if (config.experiment == ExperimentId::wilks_mc || config.experiment == ExperimentId::markov_mc) {
        throw DomainError("Monte-Carlo studies are run with run_wilks_mc / run_markov_mc");
    }
    const auto raw = generate_dataset(config, config.dataset_seed);
    const FittedModel model = fit_base_model(config, raw);

    std::optional<Ensemble> ensemble;
    if (options.with_ensemble && config.ensemble_size >= 2) {
        ensemble = train_ensemble(config.mlp, model.data, config.head, config.train, config.ensemble_size);
    }

    ExperimentResult result;
    result.scaler = model.scaler;
    result.rows.resize(config.grid.size());
    parallel_for(config.grid.size(), options.workers, [&](std::size_t i) {
        GridRow& row = result.rows[i];
        row.x = config.grid[i];
        row.truth = truth_at(config.dataset, row.x);
        try {
            const auto ci = deeplr_interval(config, model, row.x, config.alpha, config.search);
            row.f_base = ci.f_base;
            row.lr_lo = ci.lo;
            row.lr_hi = ci.hi;
            row.flags = ci.diagnostics;
        } catch (const TrainingDivergedError&) {
            throw;
        } catch (const Error& e) {
            row.f_base = model.scaler.inverse(
                output_of_interest(predict(config.mlp, model.base, config.head, row.x)));
            row.lr_lo = row.lr_hi = kNaN;
            row.flags = {e.kind()};
        }
        row.ens_lo = row.ens_hi = kNaN;
        if (ensemble) {
            const auto eci = to_original_units(ensemble_interval(*ensemble, row.x, config.alpha, config.head),
                                               model.scaler);
            row.ens_lo = eci.lo;
            row.ens_hi = eci.hi;
        }
    });

    if (options.write_files) {
        std::filesystem::create_directories(config.output_path);
        const std::string stem = to_string(config.experiment);
        result.csv_path = config.output_path + "/" + stem + ".csv";
        write_atomically(result.csv_path, [&](std::ostream& out) {
            for (std::size_t j = 0; j < config.mlp.input_dim; ++j) out << 'x' << j << ',';
            out << "f_base,lr_lo,lr_hi,ens_lo,ens_hi,truth,flags\n";
            for (const auto& row : result.rows) {
                for (double v : row.x) out << format_double(v) << ',';
                out << format_double(row.f_base) << ',' << format_double(row.lr_lo) << ','
                    << format_double(row.lr_hi) << ',' << format_double(row.ens_lo) << ','
                    << format_double(row.ens_hi) << ',' << format_double(row.truth) << ','
                    << join_flags(row.flags) << '\n';
            }
        });
        result.manifest_path = io::write_manifest(
            config, config.output_path, stem,
            {{"csv", result.csv_path},
             {"rows", result.rows.size()},
             {"normalization", {{"mean", model.scaler.mean}, {"scale", model.scaler.scale}}}});
    }
    return result;
}

CoverageReport run_coverage(const ExperimentConfig& config, const CoverageOptions& options) {
    config.validate();
    if (options.replications < 2) throw DomainError("coverage needs at least two replications");
    const std::size_t R = options.replications;
    const std::size_t G = config.grid.size();

    struct Replication {
        std::vector<ConfidenceInterval> intervals;
        std::string failure;
    };
    std::vector<Replication> reps(R);

    parallel_for(R, options.workers, [&](std::size_t r) {
        Replication& rep = reps[r];
        if (options.override_intervals != IntervalOverride::none) {
            for (std::size_t g = 0; g < G; ++g) {
                ConfidenceInterval ci;
                ci.x0 = config.grid[g];
                if (options.override_intervals == IntervalOverride::everything) {
                    ci.lo = -std::numeric_limits<double>::infinity();
                    ci.hi = std::numeric_limits<double>::infinity();
                } else {
                    ci.lo = kNaN;
                    ci.hi = kNaN;
                }
                ci.f_base = kNaN;
                rep.intervals.push_back(ci);
            }
            return;
        }
        try {
            ExperimentConfig cfg = config;
            cfg.train.seed = derive_seed(config.train.seed, r + 1);
            const auto raw = generate_dataset(cfg, derive_seed(config.dataset_seed, r + 1));
            const FittedModel model = fit_base_model(cfg, raw);
            for (std::size_t g = 0; g < G; ++g) {
                rep.intervals.push_back(deeplr_interval(cfg, model, cfg.grid[g], cfg.alpha, cfg.search));
            }
        } catch (const Error& e) {
            rep.intervals.clear();
            rep.failure = "replication " + std::to_string(r) + ": " + e.kind() + ": " + e.what();
        }
    });

    CoverageReport report;
    report.nominal = 1.0 - config.alpha;
    report.replications = R;
    report.grid = config.grid;
    report.hits.assign(G, 0);
    double width_sum = 0.0, asym_sum = 0.0;
    std::size_t width_count = 0, asym_count = 0;
    for (const auto& rep : reps) {
        if (!rep.failure.empty()) {
            ++report.failures;
            report.failure_messages.push_back(rep.failure);
            continue;
        }
        for (std::size_t g = 0; g < G; ++g) {
            const auto& ci = rep.intervals[g];
            if (ci.contains(truth_at(config.dataset, config.grid[g]))) ++report.hits[g];
            if (std::isfinite(ci.width())) {
                width_sum += ci.width();
                ++width_count;
            }
            if (const double a = asymmetry(ci); std::isfinite(a)) {
                asym_sum += a;
                ++asym_count;
            }
        }
    }
    const std::size_t ok = R - report.failures;
    std::size_t total_hits = 0;
    for (std::size_t g = 0; g < G; ++g) {
        report.point_coverage.push_back(ok ? static_cast<double>(report.hits[g]) / ok : kNaN);
        total_hits += report.hits[g];
    }
    report.coverage = ok ? static_cast<double>(total_hits) / static_cast<double>(ok * G) : kNaN;
    report.mean_width = width_count ? width_sum / width_count : kNaN;
    report.mean_asymmetry = asym_count ? asym_sum / asym_count : kNaN;

    if (options.write_files) {
        std::filesystem::create_directories(config.output_path);
        const std::string csv = config.output_path + "/coverage.csv";
        write_atomically(csv, [&](std::ostream& out) {
            for (std::size_t j = 0; j < config.mlp.input_dim; ++j) out << 'x' << j << ',';
            out << "hits,replications,coverage\n";
            for (std::size_t g = 0; g < G; ++g) {
                for (double v : config.grid[g]) out << format_double(v) << ',';
                out << report.hits[g] << ',' << ok << ',' << format_double(report.point_coverage[g]) << '\n';
            }
        });
        io::write_json_file(config.output_path + "/coverage.json", io::to_json(report));
        io::write_manifest(config, config.output_path, "coverage",
                           {{"csv", csv}, {"rows", G}, {"replications", R}});
    }
    return report;
}

WilksReport run_wilks_mc(std::size_t reps, std::size_t n_per_rep, std::uint64_t seed, bool unknown_sigma) {
    if (reps < 100) throw DomainError("wilks-mc needs at least 100 replications");
    if (n_per_rep < 2) throw DomainError("wilks-mc needs at least two samples per replication");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> stats(reps);
    std::vector<double> y(n_per_rep);
    const double n = static_cast<double>(n_per_rep);
    double t_sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        double mean = 0.0;
        for (auto& v : y) {
            v = normal(rng);
            mean += v;
        }
        mean /= n;
        double t;
        if (unknown_sigma) {
            // Profiled variance under the null (mean 0) and under the full model.
            double ss0 = 0.0, ss1 = 0.0;
            for (double v : y) {
                ss0 += v * v;
                ss1 += (v - mean) * (v - mean);
            }
            t = n * std::log(ss0 / ss1);
        } else {
            t = n * mean * mean;
        }
        stats[r] = t;
        t_sum += t;
    }
    WilksReport report;
    report.reps = reps;
    report.n_per_rep = n_per_rep;
    report.unknown_sigma = unknown_sigma;
    report.ks = stats::ks_distance(stats, [](double x) { return stats::chi2_cdf(std::max(x, 0.0), 1); });
    report.mean_t = t_sum / static_cast<double>(reps);
    return report;
}

MarkovReport run_markov_mc(std::size_t reps, std::size_t n_per_rep, double alpha, std::uint64_t seed,
                           double h1_mean) {
    if (reps < 1000) throw DomainError("markov-mc needs at least 1000 replications");
    if (n_per_rep < 1) throw DomainError("markov-mc needs at least one sample per replication");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    MarkovReport report;
    report.reps = reps;
    report.n_per_rep = n_per_rep;
    report.alpha = alpha;
    report.h1_mean = h1_mean;
    report.threshold = stats::chi2_quantile(1.0 - alpha, 2);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::size_t rejections = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        double t = 0.0;
        for (std::size_t i = 0; i < n_per_rep; ++i) {
            const double y = normal(rng);
            // 2 * (log N(y; h1, 1) - log N(y; 0, 1))
            t += y * y - (y - h1_mean) * (y - h1_mean);
        }
        if (t > report.threshold) ++rejections;
    }
    report.rejection_rate = static_cast<double>(rejections) / static_cast<double>(reps);
    report.bound = alpha + 3.0 * std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(reps));
    return report;
}

}  // namespace deeplr::harness
