#include "curveflow/config.hpp"

#include <set>

#include "curveflow/io.hpp"

namespace curveflow {

namespace {

using nlohmann::json;

// Reads typed fields out of one JSON object and rejects leftovers.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) {
            throw ConfigError(path_ + " must be an object", path_);
        }
    }

    template <class T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) {
            return;
        }
        const std::string field = qualify(key);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) throw ConfigError(field + " must be a boolean", field);
            } else if constexpr (std::is_integral_v<T>) {
                if (!it->is_number_integer()) throw ConfigError(field + " must be an integer", field);
                if constexpr (std::is_unsigned_v<T>) {
                    if (it->is_number_integer() && !it->is_number_unsigned() && it->template get<long long>() < 0) {
                        throw ConfigError(field + " must be non-negative", field);
                    }
                }
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!it->is_number()) throw ConfigError(field + " must be a number", field);
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!it->is_string()) throw ConfigError(field + " must be a string", field);
            }
            out = it->template get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(field + ": " + e.what(), field);
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (seen_.count(it.key()) == 0) {
                const std::string field = qualify(it.key().c_str());
                throw ConfigError("unknown field " + field, field);
            }
        }
    }

    bool has(const char* key) const { return obj_.contains(key); }
    void mark(const char* key) { seen_.insert(key); }

    std::string qualify(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class Enum, class Parse>
void read_enum(ObjectReader& r, const char* key, Enum& out, Parse parse) {
    if (!r.has(key)) {
        r.mark(key);
        return;
    }
    std::string name;
    r.read(key, name);
    out = parse(name);
}

}  // namespace

void ExperimentConfig::validate() const {
    if (format_version != kFormatVersion) {
        throw ConfigError("format_version " + std::to_string(format_version) + " is not supported (expected " +
                              std::to_string(kFormatVersion) + ")",
                          "format_version");
    }
    dataset.validate();
    train.validate();
    solver.validate();
    if (schedule.kind == ScheduleKind::neural && schedule.hidden == 0) {
        throw ConfigError("schedule.hidden must be positive", "schedule.hidden");
    }
    if (schedule.kind == ScheduleKind::polynomial) {
        CoefficientSchedule::polynomial(schedule.poly_a, schedule.poly_b);
    }
    if (model.hidden == 0 || model.hidden_layers == 0) {
        throw ConfigError("model.hidden and model.hidden_layers must be positive", "model.hidden");
    }
    if (model.time_features < 2 || model.time_features % 2 != 0) {
        throw ConfigError("model.time_features must be a positive even number", "model.time_features");
    }
    if (metrics.projections == 0) {
        throw ConfigError("metrics.projections must be positive", "metrics.projections");
    }
    if (metrics.max_points == 0) {
        throw ConfigError("metrics.max_points must be positive", "metrics.max_points");
    }
    for (double l : compare.lambdas) {
        if (!(l >= 0.0)) {
            throw ConfigError("compare.lambdas entries must be non-negative", "compare.lambdas");
        }
    }
    if (output_dir.empty()) {
        throw ConfigError("output_dir must not be empty", "output_dir");
    }
}

ExperimentConfig config_from_json(const json& doc) {
    ExperimentConfig c;
    ObjectReader root(doc, "");
    root.read("format_version", c.format_version);
    if (c.format_version != kFormatVersion) {
        throw ConfigError("format_version " + std::to_string(c.format_version) + " is not supported (expected " +
                              std::to_string(kFormatVersion) + ")",
                          "format_version");
    }
    root.read("output_dir", c.output_dir);

    if (const json* d = root.child("dataset")) {
        ObjectReader r(*d, "dataset");
        read_enum(r, "kind", c.dataset.kind, parse_dataset_kind);
        r.read("count", c.dataset.count);
        r.read("seed", c.dataset.seed);
        r.read("noise_std", c.dataset.noise_std);
        r.finish();
    }
    if (const json* s = root.child("schedule")) {
        ObjectReader r(*s, "schedule");
        read_enum(r, "kind", c.schedule.kind, parse_schedule_kind);
        r.read("hidden", c.schedule.hidden);
        read_enum(r, "init", c.schedule.init, parse_residual_init);
        r.read("poly_a", c.schedule.poly_a);
        r.read("poly_b", c.schedule.poly_b);
        r.finish();
    }
    if (const json* m = root.child("model")) {
        ObjectReader r(*m, "model");
        r.read("hidden", c.model.hidden);
        r.read("hidden_layers", c.model.hidden_layers);
        r.read("time_features", c.model.time_features);
        r.finish();
    }
    if (const json* t = root.child("train")) {
        ObjectReader r(*t, "train");
        r.read("epochs", c.train.epochs);
        r.read("batch_size", c.train.batch_size);
        r.read("base_lr", c.train.base_lr);
        r.read("warmup_steps", c.train.warmup_steps);
        r.read("poly_power", c.train.poly_power);
        r.read("lambda", c.train.lambda);
        r.read("grid_m", c.train.grid_m);
        read_enum(r, "timestep_sampler", c.train.timestep_sampler, parse_timestep_sampler);
        r.read("seed", c.train.seed);
        r.read("train_schedule", c.train.train_schedule);
        r.read("stop_target_gradient", c.train.stop_target_gradient);
        r.finish();
    }
    if (const json* s = root.child("solver")) {
        ObjectReader r(*s, "solver");
        read_enum(r, "method", c.solver.method, parse_solver_method);
        r.read("steps", c.solver.steps);
        r.finish();
    }
    if (const json* m = root.child("metrics")) {
        ObjectReader r(*m, "metrics");
        r.read("projections", c.metrics.projections);
        r.read("seed", c.metrics.seed);
        r.read("max_points", c.metrics.max_points);
        r.finish();
    }
    if (const json* cmp = root.child("compare")) {
        ObjectReader r(*cmp, "compare");
        if (const json* l = r.child("lambdas")) {
            if (!l->is_array()) {
                throw ConfigError("compare.lambdas must be an array", "compare.lambdas");
            }
            c.compare.lambdas.clear();
            for (const auto& v : *l) {
                if (!v.is_number()) {
                    throw ConfigError("compare.lambdas entries must be numbers", "compare.lambdas");
                }
                c.compare.lambdas.push_back(v.get<double>());
            }
        }
        r.finish();
    }
    root.finish();
    c.validate();
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["format_version"] = c.format_version;
    j["output_dir"] = c.output_dir;
    j["dataset"] = {{"kind", std::string(to_string(c.dataset.kind))},
                    {"count", c.dataset.count},
                    {"seed", c.dataset.seed},
                    {"noise_std", c.dataset.noise_std}};
    j["schedule"] = {{"kind", std::string(to_string(c.schedule.kind))},
                     {"hidden", c.schedule.hidden},
                     {"init", std::string(to_string(c.schedule.init))},
                     {"poly_a", c.schedule.poly_a},
                     {"poly_b", c.schedule.poly_b}};
    j["model"] = {{"hidden", c.model.hidden},
                  {"hidden_layers", c.model.hidden_layers},
                  {"time_features", c.model.time_features}};
    j["train"] = {{"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"base_lr", c.train.base_lr},
                  {"warmup_steps", c.train.warmup_steps},
                  {"poly_power", c.train.poly_power},
                  {"lambda", c.train.lambda},
                  {"grid_m", c.train.grid_m},
                  {"timestep_sampler", std::string(to_string(c.train.timestep_sampler))},
                  {"seed", c.train.seed},
                  {"train_schedule", c.train.train_schedule},
                  {"stop_target_gradient", c.train.stop_target_gradient}};
    j["solver"] = {{"method", std::string(to_string(c.solver.method))}, {"steps", c.solver.steps}};
    j["metrics"] = {{"projections", c.metrics.projections},
                    {"seed", c.metrics.seed},
                    {"max_points", c.metrics.max_points}};
    j["compare"] = {{"lambdas", c.compare.lambdas}};
    return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what(), "config");
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what(), "config");
    }
    return config_from_json(doc);
}

std::string dump_config(const ExperimentConfig& config) { return config_to_json(config).dump(2) + "\n"; }

}  // namespace curveflow
