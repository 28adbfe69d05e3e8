#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "curveflow/config.hpp"

namespace curveflow {

/// Malformed or incompatible checkpoint; `field()` names the offending entry.
class CheckpointError : public std::runtime_error {
public:
    CheckpointError(const std::string& what, std::string field)
        : std::runtime_error(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class VersionMismatchError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

struct Checkpoint {
    int format_version = kFormatVersion;
    ExperimentConfig config;
    std::size_t dim = 2;
    /// theta.*, phi.* and psi.* entries.
    ParameterSet parameters;
    OptimizerState optimizer;
    std::size_t step = 0;
};

Checkpoint make_checkpoint(const ExperimentConfig& config, const TrainResult& result);
VelocityField model_from(const Checkpoint& checkpoint);
CoefficientSchedule schedule_from(const Checkpoint& checkpoint);

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace curveflow
