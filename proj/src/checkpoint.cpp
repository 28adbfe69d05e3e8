#include "curveflow/checkpoint.hpp"

#include "curveflow/io.hpp"

namespace curveflow {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto span = m.row_span(r);
        rows.push_back(std::vector<double>(span.begin(), span.end()));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) {
        throw CheckpointError(field + " must be a non-empty array of rows", field);
    }
    const std::size_t rows = j.size(), cols = j.front().size();
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.size() != cols) {
            throw CheckpointError(field + " has ragged rows", field);
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (!row[c].is_number()) {
                throw CheckpointError(field + " contains a non-numeric entry", field);
            }
            m(r, c) = row[c].get<double>();
        }
    }
    return m;
}

json params_to_json(const ParameterSet& p) {
    json out = json::object();
    for (const auto& [name, m] : p) {
        out[name] = matrix_to_json(m);
    }
    return out;
}

ParameterSet params_from_json(const json& j, const std::string& field) {
    if (!j.is_object()) {
        throw CheckpointError(field + " must be an object", field);
    }
    ParameterSet p;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string name = field + "." + it.key();
        try {
            p.add(it.key(), matrix_from_json(it.value(), name));
        } catch (const std::invalid_argument& e) {
            throw CheckpointError(e.what(), name);
        }
    }
    return p;
}

const json& require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw CheckpointError(std::string("checkpoint is missing field '") + key + "'", key);
    }
    return j.at(key);
}

template <class T>
T require_number(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number()) {
        throw CheckpointError(std::string("checkpoint field '") + key + "' must be a number", key);
    }
    if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) {
            throw CheckpointError(std::string("checkpoint field '") + key + "' must be an integer", key);
        }
    }
    return v.get<T>();
}

}  // namespace

Checkpoint make_checkpoint(const ExperimentConfig& config, const TrainResult& result) {
    Checkpoint c;
    c.config = config;
    c.dim = result.model.dim();
    c.parameters = result.model.parameters();
    c.parameters.merge(result.schedule.parameters());
    c.optimizer = result.optimizer;
    c.step = result.step;
    return c;
}

VelocityField model_from(const Checkpoint& checkpoint) {
    return VelocityField::from_parameters(checkpoint.dim, checkpoint.config.model,
                                          checkpoint.parameters.subset("theta."));
}

CoefficientSchedule schedule_from(const Checkpoint& checkpoint) {
    ParameterSet sched = checkpoint.parameters.subset("phi.");
    sched.merge(checkpoint.parameters.subset("psi."));
    return CoefficientSchedule::from_parameters(checkpoint.config.schedule, std::move(sched));
}

json checkpoint_to_json(const Checkpoint& c) {
    json j;
    j["format_version"] = c.format_version;
    j["config"] = config_to_json(c.config);
    j["dim"] = c.dim;
    j["step"] = c.step;
    j["parameters"] = params_to_json(c.parameters);
    j["optimizer"] = {{"step", c.optimizer.step},
                      {"beta1", c.optimizer.beta1},
                      {"beta2", c.optimizer.beta2},
                      {"eps", c.optimizer.eps},
                      {"weight_decay", c.optimizer.weight_decay},
                      {"first_moment", params_to_json(c.optimizer.first_moment)},
                      {"second_moment", params_to_json(c.optimizer.second_moment)}};
    return j;
}

Checkpoint checkpoint_from_json(const json& j) {
    Checkpoint c;
    const int version = require_number<int>(j, "format_version");
    if (version != kFormatVersion) {
        throw VersionMismatchError("checkpoint format_version " + std::to_string(version) +
                                       " does not match supported version " + std::to_string(kFormatVersion),
                                   "format_version");
    }
    c.format_version = version;
    try {
        c.config = config_from_json(require(j, "config"));
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("invalid config in checkpoint: ") + e.what(), "config." + e.field());
    }
    c.dim = require_number<std::size_t>(j, "dim");
    c.step = require_number<std::size_t>(j, "step");
    c.parameters = params_from_json(require(j, "parameters"), "parameters");
    const json& opt = require(j, "optimizer");
    c.optimizer.step = require_number<std::size_t>(opt, "step");
    c.optimizer.beta1 = require_number<double>(opt, "beta1");
    c.optimizer.beta2 = require_number<double>(opt, "beta2");
    c.optimizer.eps = require_number<double>(opt, "eps");
    c.optimizer.weight_decay = require_number<double>(opt, "weight_decay");
    c.optimizer.first_moment = params_from_json(require(opt, "first_moment"), "optimizer.first_moment");
    c.optimizer.second_moment = params_from_json(require(opt, "second_moment"), "optimizer.second_moment");
    try {
        (void)model_from(c);
        (void)schedule_from(c);
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("checkpoint parameters do not match the configured layout: ") + e.what(),
                              "parameters");
    }
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    write_text_file(path, checkpoint_to_json(checkpoint).dump(1) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        throw CheckpointError(e.what(), "path");
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what(), "document");
    }
    return checkpoint_from_json(doc);
}

}  // namespace curveflow
