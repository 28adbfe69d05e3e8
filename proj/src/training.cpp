#include "curveflow/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace curveflow {

namespace {

constexpr double kTimestepClamp = 1e-5;

// Stream ids, so each consumer of randomness is independent of the others.
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kTimestepStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

std::vector<std::size_t> permutation(std::size_t n, CounterRng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        std::swap(idx[i - 1], idx[rng.below(i)]);
    }
    return idx;
}

}  // namespace

std::string_view to_string(TimestepSampler sampler) {
    return sampler == TimestepSampler::uniform ? "uniform" : "logit_normal";
}

TimestepSampler parse_timestep_sampler(std::string_view name) {
    if (name == "uniform") return TimestepSampler::uniform;
    if (name == "logit_normal" || name == "logit-normal") return TimestepSampler::logit_normal;
    throw ConfigError("unknown timestep sampler '" + std::string(name) + "'", "train.timestep_sampler");
}

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("epochs must be positive", "train.epochs");
    if (batch_size == 0) throw ConfigError("batch_size must be positive", "train.batch_size");
    if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw ConfigError("base_lr must be positive", "train.base_lr");
    if (!(poly_power > 0.0)) throw ConfigError("poly_power must be positive", "train.poly_power");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be non-negative", "train.lambda");
    GridSpec check(grid_m);
    (void)check;
}

std::size_t TrainConfig::steps_per_epoch(std::size_t dataset_size) const {
    return (dataset_size + batch_size - 1) / batch_size;
}

std::size_t TrainConfig::total_steps(std::size_t dataset_size) const {
    return epochs * steps_per_epoch(dataset_size);
}

OptimizerState OptimizerState::zeros_like(const ParameterSet& params) {
    OptimizerState s;
    for (const auto& [name, m] : params) {
        s.first_moment.add(name, Matrix(m.rows(), m.cols(), 0.0));
        s.second_moment.add(name, Matrix(m.rows(), m.cols(), 0.0));
    }
    return s;
}

double sample_timestep(TimestepSampler sampler, CounterRng& rng) {
    double t = 0.0;
    switch (sampler) {
        case TimestepSampler::uniform:
            t = rng.uniform();
            break;
        case TimestepSampler::logit_normal:
            t = 1.0 / (1.0 + std::exp(-rng.normal()));
            break;
    }
    return std::clamp(t, kTimestepClamp, 1.0 - kTimestepClamp);
}

void adamw_step(ParameterSet& params, const GradientMap& grads, OptimizerState& state, double lr) {
    if (!params.congruent(grads) || !params.congruent(state.first_moment) ||
        !params.congruent(state.second_moment)) {
        throw ShapeError("parameters, gradients and optimizer state are not congruent");
    }
    for (const auto& [name, g] : grads) {
        if (!g.all_finite()) {
            throw DivergenceError("non-finite gradient for " + name + " at optimizer step " +
                                      std::to_string(state.step + 1),
                                  state.step + 1);
        }
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(state.beta1, t);
    const double bias2 = 1.0 - std::pow(state.beta2, t);
    for (auto& [name, theta] : params) {
        const Matrix& g = grads.at(name);
        Matrix& m = state.first_moment.at(name);
        Matrix& v = state.second_moment.at(name);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            theta[i] = theta[i] - lr * m_hat / (std::sqrt(v_hat) + state.eps) - lr * state.weight_decay * theta[i];
        }
    }
}

double lr_at(std::size_t step, const TrainConfig& config, std::size_t total_steps) {
    const double base = config.base_lr;
    if (step < config.warmup_steps) {
        return base * static_cast<double>(step) / static_cast<double>(config.warmup_steps);
    }
    if (total_steps <= config.warmup_steps) {
        return base;
    }
    const double progress = std::min(1.0, static_cast<double>(step - config.warmup_steps) /
                                              static_cast<double>(total_steps - config.warmup_steps));
    return base * std::pow(1.0 - progress, config.poly_power);
}

TrainResult train(const TrainConfig& config, const Matrix& dataset, CoefficientSchedule schedule,
                  VelocityField model, const StepCallback& on_step) {
    config.validate();
    if (dataset.rows() == 0) {
        throw ConfigError("training dataset is empty", "dataset.count");
    }
    if (dataset.cols() != model.dim()) {
        throw ShapeError("dataset dimension " + std::to_string(dataset.cols()) + " does not match model dimension " +
                         std::to_string(model.dim()));
    }
    const GridSpec grid(config.grid_m);
    const std::size_t n = dataset.rows();
    const std::size_t dim = dataset.cols();
    const std::size_t per_epoch = config.steps_per_epoch(n);
    const std::size_t total = config.total_steps(n);

    ParameterSet trainable = model.parameters();
    if (config.train_schedule) {
        trainable.merge(schedule.parameters());
    }

    TrainResult result{std::move(model), std::move(schedule), OptimizerState::zeros_like(trainable), 0, {}};
    result.history.reserve(total);
    // Failures are detected before any state is modified, so `result` is
    // always the last valid state when a step aborts.
    auto diverged = [&result](const std::string& what, std::size_t at) {
        return TrainingDivergence(what, at, std::make_shared<const TrainResult>(result));
    };

    const CounterRng root(config.seed);
    CounterRng shuffle_rng = root.split(kShuffleStream);
    CounterRng time_rng = root.split(kTimestepStream);
    CounterRng noise_rng = root.split(kNoiseStream);

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const std::vector<std::size_t> order = permutation(n, shuffle_rng);
        for (std::size_t b = 0; b < per_epoch; ++b) {
            const std::size_t begin = b * config.batch_size;
            const std::size_t count = std::min(config.batch_size, n - begin);
            FlowBatch batch{Matrix(count, dim), Matrix(count, dim), std::vector<double>(count)};
            for (std::size_t i = 0; i < count; ++i) {
                const auto src = dataset.row_span(order[begin + i]);
                std::copy(src.begin(), src.end(), batch.x0.row_span(i).begin());
                for (double& e : batch.eps.row_span(i)) {
                    e = noise_rng.normal();
                }
                batch.t[i] = sample_timestep(config.timestep_sampler, time_rng);
            }

            LossReport report;
            const CoefficientSchedule& current_schedule = result.schedule;
            const VelocityField& current_model = result.model;
            const LossFn loss = [&](Tape& tape, const VarMap& vars) {
                const LossTerms terms =
                    total_loss_on_tape(tape, vars, batch, tape_velocity(current_model), current_schedule, grid,
                                       config.lambda, config.stop_target_gradient);
                report.fm_loss = terms.fm.item();
                report.curvature_loss = terms.curvature.item();
                return terms.total;
            };

            ++step;
            const double lr = lr_at(step, config, total);
            Evaluation eval;
            try {
                eval = evaluate_with_gradients(loss, trainable);
            } catch (const EvaluationError& e) {
                throw diverged(std::string("training diverged at step ") + std::to_string(step) + ": " + e.what(),
                               step);
            }
            if (!std::isfinite(eval.value)) {
                throw diverged("non-finite loss at step " + std::to_string(step), step);
            }
            report.step = step;
            report.total = eval.value;
            report.lambda = config.lambda;
            report.lr = lr;

            ParameterSet updated = trainable;
            OptimizerState optimizer = result.optimizer;
            try {
                adamw_step(updated, eval.gradients, optimizer, lr);
            } catch (const DivergenceError& e) {
                throw diverged(e.what(), step);
            }
            for (const auto& [name, value] : updated) {
                if (!value.all_finite()) {
                    throw diverged("non-finite parameter " + name + " after update at step " + std::to_string(step),
                                   step);
                }
            }
            trainable = std::move(updated);
            result.optimizer = std::move(optimizer);
            result.model.parameters().assign_from(trainable);
            result.schedule.parameters().assign_from(trainable);
            result.step = step;
            result.history.push_back(report);
            if (on_step) {
                on_step(report);
            }
        }
    }
    return result;
}

}  // namespace curveflow
