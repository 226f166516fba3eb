#include "deeplr/io.hpp"

#include <cmath>
#include <fstream>

#include "deeplr/errors.hpp"

namespace deeplr::io {

namespace {

// NaN and infinities have no JSON literal; they serialize as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

json checked_object(const json& j, const char* what) {
    if (!j.is_object()) throw FormatError(std::string(what) + " must be a JSON object");
    return j;
}

}  // namespace

json to_json(const ConfidenceInterval& ci) {
    json profile = json::array();
    for (const auto& p : ci.profile) profile.push_back({number(p.c), number(p.t)});
    return {{"method", ci.method},
            {"x0", ci.x0},
            {"alpha", ci.alpha},
            {"dof", ci.dof},
            {"lo", number(ci.lo)},
            {"hi", number(ci.hi)},
            {"f_base", number(ci.f_base)},
            {"f_plus", number(ci.f_plus)},
            {"f_minus", number(ci.f_minus)},
            {"lambda_at_endpoints", {number(ci.lambda_lo), number(ci.lambda_hi)}},
            {"profile", profile},
            {"diagnostics", ci.diagnostics}};
}

json to_json(const OptimizerConfig& c) {
    return {{"kind", to_string(c.kind)}, {"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}};
}

json to_json(const TrainConfig& c) {
    return {{"optimizer", to_json(c.optimizer)},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"variance_warmup_epochs", c.variance_warmup_epochs}};
}

json to_json(const Head& head) {
    json j = {{"kind", to_string(head.kind)}, {"combine_space", to_string(head.combine_space)}};
    j["fixed_variance"] = head.fixed_variance ? json(*head.fixed_variance) : json(nullptr);
    return j;
}

json to_json(const MlpSpec& spec) {
    json branches = json::array();
    for (const auto& b : spec.branches) {
        branches.push_back({{"hidden", b.hidden}, {"output", to_string(b.output)}, {"l2", b.l2}});
    }
    return {{"input_dim", spec.input_dim},
            {"hidden_activation", to_string(spec.hidden_activation)},
            {"branches", branches}};
}

json to_json(const SearchOptions& o) {
    json j = {{"dof", o.dof},
              {"delta", o.delta},
              {"lambda_max", o.lambda_max},
              {"max_iterations", o.max_iterations},
              {"grid_points", o.grid_points},
              {"freeze_variance", o.freeze_variance},
              {"collapse_unreachable", o.collapse_unreachable}};
    j["tolerance"] = o.tolerance ? json(*o.tolerance) : json(nullptr);
    return j;
}

json to_json(const harness::ExperimentConfig& c) {
    return {{"experiment", harness::to_string(c.experiment)},
            {"dataset", harness::to_string(c.dataset)},
            {"dataset_seed", c.dataset_seed},
            {"n", c.n},
            {"noise_sd", c.noise_sd},
            {"normalize_targets", c.normalize_targets},
            {"train", to_json(c.train)},
            {"head", to_json(c.head)},
            {"mlp", to_json(c.mlp)},
            {"alpha", c.alpha},
            {"search", to_json(c.search)},
            {"ensemble_size", c.ensemble_size},
            {"grid", c.grid},
            {"output_path", c.output_path},
            {"reps", c.reps},
            {"n_per_rep", c.n_per_rep},
            {"unknown_sigma", c.unknown_sigma},
            {"h1_mean", c.h1_mean}};
}

json to_json(const harness::CoverageReport& r) {
    return {{"nominal", r.nominal},
            {"replications", r.replications},
            {"failures", r.failures},
            {"failure_messages", r.failure_messages},
            {"grid", r.grid},
            {"hits", r.hits},
            {"point_coverage", r.point_coverage},
            {"coverage", r.coverage},
            {"mean_width", number(r.mean_width)},
            {"mean_asymmetry", number(r.mean_asymmetry)}};
}

json to_json(const harness::WilksReport& r) {
    return {{"reps", r.reps},
            {"n_per_rep", r.n_per_rep},
            {"unknown_sigma", r.unknown_sigma},
            {"ks_distance", r.ks},
            {"mean_t", r.mean_t}};
}

json to_json(const harness::MarkovReport& r) {
    return {{"reps", r.reps},
            {"n_per_rep", r.n_per_rep},
            {"alpha", r.alpha},
            {"h1_mean", r.h1_mean},
            {"threshold", r.threshold},
            {"rejection_rate", r.rejection_rate},
            {"bound", r.bound}};
}

TrainConfig train_config_from_json(const json& j) {
    checked_object(j, "train config");
    TrainConfig c;
    if (auto it = j.find("optimizer"); it != j.end()) {
        std::string kind = to_string(c.optimizer.kind);
        read_if(*it, "kind", kind);
        c.optimizer.kind = optimizer_kind_from_string(kind);
        read_if(*it, "lr", c.optimizer.lr);
        read_if(*it, "beta1", c.optimizer.beta1);
        read_if(*it, "beta2", c.optimizer.beta2);
        read_if(*it, "eps", c.optimizer.eps);
    }
    read_if(j, "epochs", c.epochs);
    read_if(j, "batch_size", c.batch_size);
    read_if(j, "seed", c.seed);
    read_if(j, "variance_warmup_epochs", c.variance_warmup_epochs);
    c.validate();
    return c;
}

Head head_from_json(const json& j) {
    checked_object(j, "head");
    Head head;
    head.kind = head_kind_from_string(j.at("kind").get<std::string>());
    std::string space = "natural";
    read_if(j, "combine_space", space);
    head.combine_space = combine_space_from_string(space);
    if (auto it = j.find("fixed_variance"); it != j.end() && !it->is_null()) {
        head.fixed_variance = it->get<double>();
    }
    return head;
}

MlpSpec mlp_spec_from_json(const json& j) {
    checked_object(j, "mlp");
    MlpSpec spec;
    spec.input_dim = j.at("input_dim").get<std::size_t>();
    std::string act = "elu";
    read_if(j, "hidden_activation", act);
    spec.hidden_activation = activation_from_string(act);
    for (const auto& b : j.at("branches")) {
        BranchSpec branch;
        branch.hidden = b.at("hidden").get<std::vector<std::size_t>>();
        branch.output = output_activation_from_string(b.at("output").get<std::string>());
        const auto& l2 = b.at("l2");
        if (l2.is_number()) {
            branch.l2.assign(branch.layer_count(), l2.get<double>());
        } else {
            branch.l2 = l2.get<std::vector<double>>();
        }
        spec.branches.push_back(std::move(branch));
    }
    spec.validate();
    return spec;
}

SearchOptions search_options_from_json(const json& j) {
    checked_object(j, "search options");
    SearchOptions o;
    read_if(j, "dof", o.dof);
    read_if(j, "delta", o.delta);
    read_if(j, "lambda_max", o.lambda_max);
    read_if(j, "max_iterations", o.max_iterations);
    read_if(j, "grid_points", o.grid_points);
    read_if(j, "freeze_variance", o.freeze_variance);
    read_if(j, "collapse_unreachable", o.collapse_unreachable);
    if (auto it = j.find("tolerance"); it != j.end() && !it->is_null()) o.tolerance = it->get<double>();
    o.validate();
    return o;
}

harness::ExperimentConfig experiment_config_from_json(const json& j) {
    checked_object(j, "experiment config");
    try {
        const auto id = harness::experiment_id_from_string(j.at("experiment").get<std::string>());
        auto c = harness::preset(id);
        if (auto it = j.find("dataset"); it != j.end()) {
            c.dataset = harness::dataset_kind_from_string(it->get<std::string>());
        }
        read_if(j, "dataset_seed", c.dataset_seed);
        read_if(j, "n", c.n);
        read_if(j, "noise_sd", c.noise_sd);
        read_if(j, "normalize_targets", c.normalize_targets);
        if (auto it = j.find("train"); it != j.end()) {
            json merged = to_json(c.train);
            merged.merge_patch(*it);
            c.train = train_config_from_json(merged);
        }
        if (auto it = j.find("head"); it != j.end()) c.head = head_from_json(*it);
        if (auto it = j.find("mlp"); it != j.end()) c.mlp = mlp_spec_from_json(*it);
        read_if(j, "alpha", c.alpha);
        if (auto it = j.find("search"); it != j.end()) {
            json merged = to_json(c.search);
            merged.merge_patch(*it);
            c.search = search_options_from_json(merged);
        }
        read_if(j, "ensemble_size", c.ensemble_size);
        read_if(j, "grid", c.grid);
        read_if(j, "output_path", c.output_path);
        read_if(j, "reps", c.reps);
        read_if(j, "n_per_rep", c.n_per_rep);
        read_if(j, "unknown_sigma", c.unknown_sigma);
        read_if(j, "h1_mean", c.h1_mean);
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw FormatError(std::string("experiment config: ") + e.what());
    }
}

harness::ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    return experiment_config_from_json(j);
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    out << j.dump(2) << '\n';
}

std::string write_manifest(const harness::ExperimentConfig& config, const std::string& dir,
                           const std::string& stem, const json& extra) {
    json manifest = {{"experiment", harness::to_string(config.experiment)},
                     {"config", to_json(config)},
                     {"config_hash", harness::config_hash(config)},
                     {"dataset_seed", config.dataset_seed},
                     {"train_seed", config.train.seed}};
    manifest.update(extra);
    const std::string path = dir + "/" + stem + ".manifest.json";
    write_json_file(path, manifest);
    return path;
}

}  // namespace deeplr::io
