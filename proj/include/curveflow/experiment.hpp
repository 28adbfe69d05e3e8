#pragma once

// Variant bookkeeping for the baseline-versus-lambda comparison.

#include <string>
#include <vector>

#include "curveflow/config.hpp"

namespace curveflow {

struct Variant {
    std::string name;
    ExperimentConfig config;
};

/// rf_uniform and rf_logit_normal (linear schedule, lambda 0), then one
/// curveflow_lambda_<value> entry per lambda in config.compare.lambdas.
std::vector<Variant> comparison_variants(const ExperimentConfig& config);

struct VariantOutcome {
    TrainResult result;
    bool diverged = false;
    std::string message;
};

/// Trains one variant from its config; divergence is reported, not thrown.
VariantOutcome train_variant(const ExperimentConfig& config, const Matrix& train_data);

struct ComparisonRow {
    std::string variant;
    ScheduleKind schedule = ScheduleKind::linear;
    TimestepSampler timestep_sampler = TimestepSampler::uniform;
    double lambda = 0.0;
    double energy_distance = 0.0;
    double sliced_wasserstein = 0.0;
    double determinant_integral = 0.0;
    double final_fm_loss = 0.0;
};

/// Samples as many points as `held_out` has rows and scores them against it.
/// Throws DivergenceError if sampling diverges.
ComparisonRow evaluate_variant(const Variant& variant, const TrainResult& result, const Matrix& held_out);

std::string comparison_csv_header();
std::string comparison_csv_row(const ComparisonRow& row);

}  // namespace curveflow
