#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "deeplr/baselines.hpp"
#include "deeplr/deeplr.hpp"
#include "deeplr/errors.hpp"
#include "deeplr/harness.hpp"
#include "deeplr/io.hpp"
#include "deeplr/stats.hpp"

namespace py = pybind11;
using namespace deeplr;

namespace {

harness::ExperimentConfig config_from_string(const std::string& text) {
    try {
        return io::experiment_config_from_json(io::json::parse(text));
    } catch (const io::json::exception& e) {
        throw FormatError(e.what());
    }
}

py::dict row_to_dict(const harness::GridRow& row) {
    py::dict d;
    d["x"] = row.x;
    d["f_base"] = row.f_base;
    d["lr_lo"] = row.lr_lo;
    d["lr_hi"] = row.lr_hi;
    d["ens_lo"] = row.ens_lo;
    d["ens_hi"] = row.ens_hi;
    d["truth"] = row.truth;
    d["flags"] = row.flags;
    return d;
}

void bind_stats(py::module_& m) {
    m.def("normal_quantile", &stats::normal_quantile, py::arg("p"));
    m.def("normal_cdf", &stats::normal_cdf, py::arg("x"));
    m.def("chi2_cdf", &stats::chi2_cdf, py::arg("x"), py::arg("dof"));
    m.def("chi2_quantile", &stats::chi2_quantile, py::arg("p"), py::arg("dof"));
    m.def(
        "gaussian_mean_lr_interval",
        [](const std::vector<double>& samples, double alpha) {
            const auto r = stats::gaussian_mean_lr_interval(samples, alpha);
            return py::make_tuple(r.lo, r.hi);
        },
        py::arg("samples"), py::arg("alpha"));
    m.def(
        "ks_distance",
        [](const std::vector<double>& samples, const std::function<double(double)>& cdf) {
            return stats::ks_distance(samples, cdf);
        },
        py::arg("samples"), py::arg("cdf"));
}

void bind_model(py::module_& m) {
    py::class_<WeightedDataset>(m, "WeightedDataset")
        .def(py::init<std::size_t>(), py::arg("input_dim"))
        .def("add", py::overload_cast<std::vector<double>, double, double>(&WeightedDataset::add),
             py::arg("x"), py::arg("y"), py::arg("weight") = 1.0)
        .def("__len__", &WeightedDataset::size)
        .def_property_readonly("input_dim", &WeightedDataset::input_dim)
        .def_property_readonly("x", [](const WeightedDataset& d) {
            std::vector<std::vector<double>> xs;
            for (const auto& r : d) xs.push_back(r.x);
            return xs;
        })
        .def_property_readonly("y", [](const WeightedDataset& d) {
            std::vector<double> ys;
            for (const auto& r : d) ys.push_back(r.y);
            return ys;
        })
        .def_property_readonly("weight", [](const WeightedDataset& d) {
            std::vector<double> ws;
            for (const auto& r : d) ws.push_back(r.weight);
            return ws;
        });

    py::class_<Head>(m, "Head")
        .def_static("homoscedastic", &Head::homoscedastic, py::arg("fixed_variance") = py::none())
        .def_static("mean_variance", &Head::mean_variance)
        .def_static("bernoulli", &Head::bernoulli)
        .def_property_readonly("kind", [](const Head& h) { return to_string(h.kind); })
        .def_property(
            "combine_space", [](const Head& h) { return to_string(h.combine_space); },
            [](Head& h, const std::string& s) { h.combine_space = combine_space_from_string(s); });

    py::class_<MlpSpec>(m, "MlpSpec")
        .def_static("single", [](std::size_t input_dim, std::vector<std::size_t> hidden, double l2) {
            return MlpSpec::single(input_dim, std::move(hidden), l2);
        }, py::arg("input_dim"), py::arg("hidden"), py::arg("l2") = 0.0)
        .def_static("mean_variance", [](std::size_t input_dim, std::vector<std::size_t> mean_hidden,
                                        std::vector<std::size_t> variance_hidden, double l2) {
            return MlpSpec::mean_variance(input_dim, std::move(mean_hidden), std::move(variance_hidden), l2);
        }, py::arg("input_dim"), py::arg("mean_hidden"), py::arg("variance_hidden"), py::arg("l2") = 0.0)
        .def_property_readonly("input_dim", [](const MlpSpec& s) { return s.input_dim; })
        .def_property_readonly("param_count", &MlpSpec::param_count);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init([](std::size_t epochs, std::size_t batch_size, std::uint64_t seed, double lr,
                         std::size_t variance_warmup_epochs) {
                 TrainConfig c;
                 c.epochs = epochs;
                 c.batch_size = batch_size;
                 c.seed = seed;
                 c.optimizer.lr = lr;
                 c.variance_warmup_epochs = variance_warmup_epochs;
                 c.validate();
                 return c;
             }),
             py::arg("epochs"), py::arg("batch_size") = 32, py::arg("seed") = 0, py::arg("lr") = 1e-3,
             py::arg("variance_warmup_epochs") = 0)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("seed", &TrainConfig::seed);

    py::class_<ConfidenceInterval>(m, "ConfidenceInterval")
        .def_readonly("method", &ConfidenceInterval::method)
        .def_readonly("x0", &ConfidenceInterval::x0)
        .def_readonly("alpha", &ConfidenceInterval::alpha)
        .def_readonly("dof", &ConfidenceInterval::dof)
        .def_readonly("lo", &ConfidenceInterval::lo)
        .def_readonly("hi", &ConfidenceInterval::hi)
        .def_readonly("f_base", &ConfidenceInterval::f_base)
        .def_readonly("f_plus", &ConfidenceInterval::f_plus)
        .def_readonly("f_minus", &ConfidenceInterval::f_minus)
        .def_readonly("diagnostics", &ConfidenceInterval::diagnostics)
        .def_property_readonly("profile", [](const ConfidenceInterval& ci) {
            std::vector<std::pair<double, double>> out;
            for (const auto& p : ci.profile) out.emplace_back(p.c, p.t);
            return out;
        })
        .def("to_json", [](const ConfidenceInterval& ci) { return io::to_json(ci).dump(); });

    m.def("init_params", [](const MlpSpec& spec, std::uint64_t seed) { return init_params(spec, seed).values; },
          py::arg("spec"), py::arg("seed"));
    m.def("forward", [](const MlpSpec& spec, const std::vector<double>& params, const std::vector<double>& x) {
        return forward(spec, ParamVector{params}, x);
    }, py::arg("spec"), py::arg("params"), py::arg("x"));
    m.def("train", [](const MlpSpec& spec, const std::vector<double>& init, const WeightedDataset& data,
                      const Head& head, const TrainConfig& config) {
        py::gil_scoped_release release;
        return train(spec, ParamVector{init}, data, head, config).values;
    }, py::arg("spec"), py::arg("init"), py::arg("data"), py::arg("head"), py::arg("config"));
    m.def("confidence_interval",
          [](const std::vector<double>& x0, double alpha, const WeightedDataset& data, const MlpSpec& spec,
             const std::vector<double>& base, const Head& head, const TrainConfig& config, int dof,
             double delta, double lambda_max) {
              SearchOptions options;
              options.dof = dof;
              options.delta = delta;
              options.lambda_max = lambda_max;
              py::gil_scoped_release release;
              return confidence_interval(x0, alpha, data, spec, ParamVector{base}, head, config, options);
          },
          py::arg("x0"), py::arg("alpha"), py::arg("data"), py::arg("spec"), py::arg("base"), py::arg("head"),
          py::arg("config"), py::arg("dof") = 1, py::arg("delta") = 1.0, py::arg("lambda_max") = 1.25);
    m.def("ensemble_interval",
          [](const MlpSpec& spec, const WeightedDataset& data, const Head& head, const TrainConfig& config,
             std::size_t members, const std::vector<double>& x0, double alpha) {
              py::gil_scoped_release release;
              return ensemble_interval(train_ensemble(spec, data, head, config, members), x0, alpha, head);
          },
          py::arg("spec"), py::arg("data"), py::arg("head"), py::arg("config"), py::arg("members"),
          py::arg("x0"), py::arg("alpha"));
}

void bind_harness(py::module_& m) {
    m.def("gen_toy_regression", &harness::gen_toy_regression, py::arg("n"), py::arg("seed"),
          py::arg("noise_sd") = 0.1);
    m.def("gen_toy_classification", &harness::gen_toy_classification, py::arg("n"), py::arg("seed"));
    m.def("gen_two_moons", &harness::gen_two_moons, py::arg("n"), py::arg("noise_sd"), py::arg("seed"));

    m.def("preset_json", [](const std::string& name) {
        return io::to_json(harness::preset(harness::experiment_id_from_string(name))).dump();
    }, py::arg("name"));
    m.def("run_experiment_json", [](const std::string& config_json, std::size_t workers, bool write_files) {
        const auto config = config_from_string(config_json);
        harness::RunOptions options;
        options.workers = workers;
        options.write_files = write_files;
        harness::ExperimentResult result;
        {
            py::gil_scoped_release release;
            result = harness::run_experiment(config, options);
        }
        py::list rows;
        for (const auto& row : result.rows) rows.append(row_to_dict(row));
        return rows;
    }, py::arg("config_json"), py::arg("workers") = 1, py::arg("write_files") = false);
    m.def("run_coverage_json", [](const std::string& config_json, std::size_t replications,
                                  std::size_t workers, bool write_files) {
        const auto config = config_from_string(config_json);
        harness::CoverageOptions options;
        options.replications = replications;
        options.workers = workers;
        options.write_files = write_files;
        harness::CoverageReport report;
        {
            py::gil_scoped_release release;
            report = harness::run_coverage(config, options);
        }
        return io::to_json(report).dump();
    }, py::arg("config_json"), py::arg("replications"), py::arg("workers") = 1, py::arg("write_files") = false);
    m.def("run_wilks_mc", [](std::size_t reps, std::size_t n_per_rep, std::uint64_t seed, bool unknown_sigma) {
        return io::to_json(harness::run_wilks_mc(reps, n_per_rep, seed, unknown_sigma)).dump();
    }, py::arg("reps"), py::arg("n_per_rep"), py::arg("seed"), py::arg("unknown_sigma") = false);
    m.def("run_markov_mc", [](std::size_t reps, std::size_t n_per_rep, double alpha, std::uint64_t seed,
                              double h1_mean) {
        return io::to_json(harness::run_markov_mc(reps, n_per_rep, alpha, seed, h1_mean)).dump();
    }, py::arg("reps"), py::arg("n_per_rep"), py::arg("alpha"), py::arg("seed"), py::arg("h1_mean") = 0.5);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Likelihood-ratio confidence intervals for neural-network outputs";

    auto base_error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", base_error.ptr());
    py::register_exception<DegenerateDataError>(m, "DegenerateDataError", base_error.ptr());
    py::register_exception<DegenerateRequestError>(m, "DegenerateRequestError", base_error.ptr());
    py::register_exception<TrainingDivergedError>(m, "TrainingDivergedError", base_error.ptr());
    py::register_exception<UnreachableDirectionError>(m, "UnreachableDirectionError", base_error.ptr());
    py::register_exception<FormatError>(m, "FormatError", base_error.ptr());

    bind_stats(m);
    bind_model(m);
    bind_harness(m);
}
