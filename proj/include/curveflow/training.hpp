#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "curveflow/losses.hpp"
#include "curveflow/random.hpp"

namespace curveflow {

enum class TimestepSampler { uniform, logit_normal };

std::string_view to_string(TimestepSampler sampler);
TimestepSampler parse_timestep_sampler(std::string_view name);

/// Defaults are desk-scale: base_lr 1e-3 in double precision. The reference
/// image-model regime (lr 1e-5, bf16, gradient checkpointing) targets a large
/// adapter and is not reproduced here.
struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 16;
    double base_lr = 1e-3;
    std::size_t warmup_steps = 100;
    double poly_power = 1.0;
    double lambda = 0.001;
    std::size_t grid_m = 1000;
    TimestepSampler timestep_sampler = TimestepSampler::uniform;
    std::uint64_t seed = 0;
    /// When false the coefficient networks are held fixed.
    bool train_schedule = true;
    bool stop_target_gradient = false;

    void validate() const;
    std::size_t steps_per_epoch(std::size_t dataset_size) const;
    std::size_t total_steps(std::size_t dataset_size) const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct OptimizerState {
    ParameterSet first_moment;
    ParameterSet second_moment;
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    static OptimizerState zeros_like(const ParameterSet& params);
};

/// Draws t in (0, 1), clamped to [1e-5, 1 - 1e-5].
double sample_timestep(TimestepSampler sampler, CounterRng& rng);

/// Decoupled-weight-decay Adam update in place. Throws DivergenceError on a
/// non-finite gradient, reporting the optimizer step index.
void adamw_step(ParameterSet& params, const GradientMap& grads, OptimizerState& state, double lr);

/// Linear warmup to base_lr, then polynomial decay to zero at total_steps.
double lr_at(std::size_t step, const TrainConfig& config, std::size_t total_steps);

struct TrainResult {
    VelocityField model;
    CoefficientSchedule schedule;
    OptimizerState optimizer;
    std::size_t step = 0;
    std::vector<LossReport> history;
};

/// Thrown when a loss or gradient turns non-finite; carries the state from
/// the last completed step.
class TrainingDivergence : public DivergenceError {
public:
    TrainingDivergence(const std::string& what, std::size_t step, std::shared_ptr<const TrainResult> last)
        : DivergenceError(what, step), last_(std::move(last)) {}
    const TrainResult& last_valid() const { return *last_; }

private:
    std::shared_ptr<const TrainResult> last_;
};

using StepCallback = std::function<void(const LossReport&)>;

/// Minimises fm + lambda * regularizer over theta (and phi, psi when the
/// schedule is trainable) with one shared AdamW optimizer.
/// `dataset` holds one data point per row.
TrainResult train(const TrainConfig& config, const Matrix& dataset, CoefficientSchedule schedule,
                  VelocityField model, const StepCallback& on_step = {});

}  // namespace curveflow
