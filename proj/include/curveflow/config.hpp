#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curveflow/datagen.hpp"
#include "curveflow/sampling.hpp"
#include "curveflow/schedule.hpp"
#include "curveflow/training.hpp"
#include "curveflow/velocity_model.hpp"

namespace curveflow {

inline constexpr int kFormatVersion = 1;

struct MetricsConfig {
    std::size_t projections = 128;
    std::uint64_t seed = 0;
    std::size_t max_points = 5000;

    friend bool operator==(const MetricsConfig&, const MetricsConfig&) = default;
};

struct CompareConfig {
    std::vector<double> lambdas{0.0, 0.001, 0.01, 0.1, 1.0};

    friend bool operator==(const CompareConfig&, const CompareConfig&) = default;
};

struct ExperimentConfig {
    int format_version = kFormatVersion;
    DatasetSpec dataset;
    ScheduleOptions schedule;
    VelocityOptions model;
    TrainConfig train;
    SolverConfig solver;
    MetricsConfig metrics;
    CompareConfig compare;
    std::string output_dir = "runs/default";

    void validate() const;
    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Missing fields take their defaults; unknown fields and wrong types are
/// rejected with a ConfigError naming the field.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);

ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_config(const ExperimentConfig& config);

}  // namespace curveflow
