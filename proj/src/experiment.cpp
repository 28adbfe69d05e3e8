#include "curveflow/experiment.hpp"

#include <cstdio>
#include <sstream>

#include "curveflow/io.hpp"
#include "curveflow/metrics.hpp"

namespace curveflow {

namespace {

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace

std::vector<Variant> comparison_variants(const ExperimentConfig& config) {
    std::vector<Variant> variants;
    for (const auto sampler : {TimestepSampler::uniform, TimestepSampler::logit_normal}) {
        ExperimentConfig c = config;
        c.schedule = ScheduleOptions{};
        c.schedule.kind = ScheduleKind::linear;
        c.train.timestep_sampler = sampler;
        c.train.lambda = 0.0;
        variants.push_back({"rf_" + std::string(to_string(sampler)), c});
    }
    for (double lambda : config.compare.lambdas) {
        ExperimentConfig c = config;
        c.train.lambda = lambda;
        variants.push_back({"curveflow_lambda_" + short_number(lambda), c});
    }
    return variants;
}

VariantOutcome train_variant(const ExperimentConfig& config, const Matrix& train_data) {
    CoefficientSchedule schedule = CoefficientSchedule::create(config.schedule, config.train.seed);
    VelocityField model = VelocityField::initialize(train_data.cols(), config.train.seed, config.model);
    try {
        return {train(config.train, train_data, std::move(schedule), std::move(model)), false, {}};
    } catch (const TrainingDivergence& e) {
        return {e.last_valid(), true, e.what()};
    }
}

ComparisonRow evaluate_variant(const Variant& variant, const TrainResult& result, const Matrix& held_out) {
    const ExperimentConfig& c = variant.config;
    const Matrix samples = sample_batch(result.model, held_out.rows(), c.metrics.seed, c.solver);
    ComparisonRow row;
    row.variant = variant.name;
    row.schedule = c.schedule.kind;
    row.timestep_sampler = c.train.timestep_sampler;
    row.lambda = c.train.lambda;
    row.energy_distance = energy_distance_report(samples, held_out, c.metrics.max_points, c.metrics.seed).value;
    row.sliced_wasserstein = sliced_wasserstein(samples, held_out, c.metrics.projections, c.metrics.seed);
    row.determinant_integral = determinant_integral(result.schedule.grid_derivatives(GridSpec(c.train.grid_m)));
    row.final_fm_loss = result.history.empty() ? 0.0 : result.history.back().fm_loss;
    return row;
}

std::string comparison_csv_header() {
    return "variant,schedule,timestep_sampler,lambda,energy_distance,sliced_wasserstein,determinant_integral,"
           "final_fm_loss\n";
}

std::string comparison_csv_row(const ComparisonRow& row) {
    std::ostringstream out;
    out << row.variant << ',' << to_string(row.schedule) << ',' << to_string(row.timestep_sampler) << ','
        << format_double(row.lambda) << ',' << format_double(row.energy_distance) << ','
        << format_double(row.sliced_wasserstein) << ',' << format_double(row.determinant_integral) << ','
        << format_double(row.final_fm_loss) << '\n';
    return out.str();
}

}  // namespace curveflow
