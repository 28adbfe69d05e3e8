#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "curveflow/datagen.hpp"
#include "curveflow/training.hpp"
#include "test_util.hpp"

using namespace curveflow;

namespace {

TrainConfig small_config() {
    TrainConfig c;
    c.epochs = 2;
    c.batch_size = 16;
    c.grid_m = 32;
    c.warmup_steps = 5;
    c.seed = 3;
    return c;
}

const VelocityOptions kSmallModel{32, 2, 8};

Matrix small_data(std::size_t n) { return generate(DatasetSpec{DatasetKind::gaussians8, n, 1, 0.1}); }

}  // namespace

TEST_CASE("timestep samplers") {
    CounterRng rng(1);
    std::vector<double> u(100000), l(100000);
    for (auto& t : u) t = sample_timestep(TimestepSampler::uniform, rng);
    for (auto& t : l) t = sample_timestep(TimestepSampler::logit_normal, rng);
    const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
    CHECK(std::abs(mean - 0.5) < 0.01);
    std::nth_element(l.begin(), l.begin() + 50000, l.end());
    CHECK(std::abs(l[50000] - 0.5) < 0.01);
    auto inside = [](double t) { return t >= 1e-5 && t <= 1.0 - 1e-5; };
    CHECK(std::all_of(u.begin(), u.end(), inside));
    CHECK(std::all_of(l.begin(), l.end(), inside));
    CHECK(parse_timestep_sampler("logit-normal") == TimestepSampler::logit_normal);
    CHECK_THROWS_AS(parse_timestep_sampler("cosmap"), ConfigError);
}

TEST_CASE("AdamW first step by hand") {
    ParameterSet p;
    p.add("w", Matrix::scalar(1.0));
    ParameterSet g;
    g.add("w", Matrix::scalar(0.5));
    auto state = OptimizerState::zeros_like(p);
    adamw_step(p, g, state, 1e-3);
    CHECK(state.step == 1);
    CHECK(p.at("w")[0] == doctest::Approx(0.99899).epsilon(1e-10));
}

TEST_CASE("AdamW with zero gradients is pure decoupled decay") {
    ParameterSet p;
    p.add("w", Matrix(1, 2, 2.0));
    ParameterSet g;
    g.add("w", Matrix(1, 2, 0.0));
    auto state = OptimizerState::zeros_like(p);
    double expected = 2.0;
    for (int k = 0; k < 50; ++k) {
        adamw_step(p, g, state, 1e-2);
        expected *= 1.0 - 1e-2 * 0.01;
        CHECK(p.at("w")[0] == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("AdamW is elementwise") {
    ParameterSet p;
    p.add("a", Matrix(1, 1, 0.3));
    p.add("b", Matrix(2, 1, 0.3));
    auto state = OptimizerState::zeros_like(p);
    CounterRng rng(2);
    for (int k = 0; k < 20; ++k) {
        const double gv = rng.normal();
        ParameterSet g;
        g.add("a", Matrix(1, 1, gv));
        g.add("b", Matrix(2, 1, gv));
        adamw_step(p, g, state, 1e-3);
        CHECK(p.at("a")[0] == p.at("b")[0]);
        CHECK(p.at("b")[1] == p.at("b")[0]);
    }
}

TEST_CASE("AdamW rejects non-finite gradients with the step index") {
    ParameterSet p;
    p.add("w", Matrix::scalar(1.0));
    auto state = OptimizerState::zeros_like(p);
    ParameterSet good;
    good.add("w", Matrix::scalar(0.1));
    adamw_step(p, good, state, 1e-3);
    const double before = p.at("w")[0];
    // ParameterSet::add rejects non-finite values, so poison the entry afterwards.
    ParameterSet g;
    g.add("w", Matrix::scalar(0.0));
    g.at("w")[0] = std::numeric_limits<double>::infinity();
    try {
        adamw_step(p, g, state, 1e-3);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(e.step() == 2);
    }
    CHECK(p.at("w")[0] == before);
    CHECK(state.step == 1);
}

TEST_CASE("learning rate schedule") {
    TrainConfig c;
    c.base_lr = 2e-3;
    c.warmup_steps = 100;
    const std::size_t total = 1000;
    CHECK(lr_at(0, c, total) == 0.0);
    CHECK(lr_at(100, c, total) == 2e-3);
    CHECK(lr_at(total, c, total) == 0.0);
    CHECK(lr_at(50, c, total) == doctest::Approx(1e-3));
    CHECK(std::abs(lr_at(99, c, total) - lr_at(100, c, total)) < 2e-3 / 100 + 1e-15);
    CHECK(std::abs(lr_at(101, c, total) - lr_at(100, c, total)) < 2e-3 / 100);
    c.poly_power = 2.0;
    CHECK(lr_at(550, c, total) == doctest::Approx(2e-3 * 0.25));
}

TEST_CASE("config validation") {
    TrainConfig c;
    c.lambda = -1.0;
    try {
        c.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "train.lambda");
    }
    c = TrainConfig{};
    c.grid_m = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("history length, finiteness and determinism") {
    const Matrix data = small_data(40);
    const TrainConfig c = small_config();
    auto run = [&] {
        return train(c, data, CoefficientSchedule::neural(8, c.seed), VelocityField::initialize(2, c.seed, kSmallModel));
    };
    const TrainResult a = run();
    CHECK(a.history.size() == 2 * 3);
    CHECK(a.step == 6);
    CHECK(a.optimizer.step == 6);
    for (const auto& r : a.history) {
        CHECK(std::isfinite(r.total));
        CHECK(std::abs(r.total - (r.fm_loss + r.curvature_loss)) <= 1e-12);
    }
    const TrainResult b = run();
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].total == b.history[i].total);
        CHECK(a.history[i].fm_loss == b.history[i].fm_loss);
    }
    CHECK(a.model.parameters() == b.model.parameters());
    CHECK(a.schedule.parameters() == b.schedule.parameters());
}

TEST_CASE("frozen schedule keeps its parameters") {
    TrainConfig c = small_config();
    c.train_schedule = false;
    const auto sched = CoefficientSchedule::neural(8, 1);
    const auto r = train(c, small_data(32), sched, VelocityField::initialize(2, 1, kSmallModel));
    CHECK(r.schedule.parameters() == sched.parameters());
    CHECK_FALSE(r.optimizer.first_moment.contains("phi.l0.weight"));
}

namespace {

// Plain rectified-flow trainer written against the engine directly:
// z = (1 - t) x0 + t eps and target eps - x0. Randomness follows the
// trainer's stream layout (shuffle 1, time 2, noise 3).
std::vector<double> reference_rf_losses(const TrainConfig& c, const Matrix& data, VelocityField model) {
    const CounterRng root(c.seed);
    CounterRng shuffle = root.split(1), time = root.split(2), noise = root.split(3);
    ParameterSet params = model.parameters();
    auto state = OptimizerState::zeros_like(params);
    const std::size_t n = data.rows(), per_epoch = (n + c.batch_size - 1) / c.batch_size;
    std::vector<double> losses;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < c.epochs; ++epoch) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[shuffle.below(i)]);
        for (std::size_t b = 0; b < per_epoch; ++b) {
            const std::size_t begin = b * c.batch_size, count = std::min(c.batch_size, n - begin);
            Matrix x0(count, 2), eps(count, 2), z(count, 2), u(count, 2), tcol(count, 1), scol(count, 1);
            std::vector<double> ts(count);
            for (std::size_t i = 0; i < count; ++i) {
                for (std::size_t j = 0; j < 2; ++j) x0(i, j) = data(idx[begin + i], j);
                for (std::size_t j = 0; j < 2; ++j) eps(i, j) = noise.normal();
                ts[i] = sample_timestep(c.timestep_sampler, time);
                for (std::size_t j = 0; j < 2; ++j) {
                    z(i, j) = (1.0 - ts[i]) * x0(i, j) + ts[i] * eps(i, j);
                    u(i, j) = eps(i, j) - x0(i, j);
                }
            }
            model.parameters() = params;
            const LossFn loss = [&](Tape& tape, const VarMap& vars) {
                Var v = model.forward_on_tape(tape, vars, tape.constant(z), ts);
                return scale(sum(square(sub(v, tape.constant(u)))), 1.0 / static_cast<double>(count));
            };
            const auto eval = evaluate_with_gradients(loss, params);
            losses.push_back(eval.value);
            adamw_step(params, eval.gradients, state, lr_at(++step, c, c.epochs * per_epoch));
        }
    }
    return losses;
}

}  // namespace

TEST_CASE("zeroed residual nets with lambda 0 reduce to rectified flow training") {
    TrainConfig c = small_config();
    c.lambda = 0.0;
    c.train_schedule = false;
    c.epochs = 3;
    const Matrix data = small_data(48);
    const auto model = VelocityField::initialize(2, 5, kSmallModel);

    const auto zero = CoefficientSchedule::neural(16, 5, ResidualInit::zero);
    const std::vector<double> x0{1.25, -0.5}, eps{0.3, 2.0};
    for (double t : {0.01, 0.4, 0.99}) {
        const auto d = zero.derivatives(t, 1.0 / static_cast<double>(c.grid_m));
        CHECK(d.a_dot * x0[0] + d.b_dot * eps[0] == eps[0] - x0[0]);
        CHECK(d.a_dot * x0[1] + d.b_dot * eps[1] == eps[1] - x0[1]);
    }

    const auto curve = train(c, data, zero, model);
    const auto rf = train(c, data, CoefficientSchedule::linear(), model);
    REQUIRE(curve.history.size() == rf.history.size());
    for (std::size_t i = 0; i < rf.history.size(); ++i) {
        CHECK(curve.history[i].fm_loss == rf.history[i].fm_loss);
        CHECK(curve.history[i].curvature_loss == 0.0);
    }
    CHECK(curve.model.parameters() == rf.model.parameters());

    const auto reference = reference_rf_losses(c, data, model);
    REQUIRE(reference.size() == rf.history.size());
    for (std::size_t i = 0; i < reference.size(); ++i) CHECK(reference[i] == rf.history[i].fm_loss);
}

TEST_CASE("strong regularization flattens the schedule") {
    TrainConfig c = small_config();
    c.epochs = 10;
    c.batch_size = 32;
    c.grid_m = 64;
    c.warmup_steps = 10;
    c.base_lr = 3e-3;
    const Matrix data = small_data(320);
    const auto sched = CoefficientSchedule::neural(16, 2);
    const auto model = VelocityField::initialize(2, 2, kSmallModel);
    const GridSpec g(c.grid_m);
    c.lambda = 0.0;
    const auto free = train(c, data, sched, model);
    c.lambda = 100.0;
    const auto reg = train(c, data, sched, model);
    const double free_int = determinant_integral(free.schedule.grid_derivatives(g));
    const double reg_int = determinant_integral(reg.schedule.grid_derivatives(g));
    MESSAGE("lambda 0: " << free_int << ", lambda 100: " << reg_int);
    CHECK(reg_int < 0.1 * free_int);
}

TEST_CASE("fm loss decreases early on the 8-Gaussian data") {
    TrainConfig c;
    // Large batches keep minibatch noise below the per-window decrease.
    c.epochs = 13;
    c.batch_size = 500;
    c.warmup_steps = 10;
    c.seed = 0;
    const Matrix data = generate(DatasetSpec{DatasetKind::gaussians8, 2000, 0});
    const auto r = train(c, data, CoefficientSchedule::neural(64, 0), VelocityField::initialize(2, 0));
    REQUIRE(r.history.size() >= 50);
    // Mean over consecutive 10-step windows of the first 50 steps.
    std::vector<double> windows(5, 0.0);
    for (std::size_t k = 0; k < 50; ++k) windows[k / 10] += r.history[k].fm_loss / 10.0;
    for (std::size_t i = 1; i < windows.size(); ++i) {
        CHECK(windows[i] <= windows[i - 1]);
    }
}

TEST_CASE("divergence reports the step and keeps the last valid state") {
    TrainConfig c = small_config();
    c.base_lr = 1e305;
    c.warmup_steps = 1;
    const auto model = VelocityField::initialize(2, 1, kSmallModel);
    try {
        train(c, small_data(64), CoefficientSchedule::neural(8, 1), model);
        FAIL("expected divergence");
    } catch (const TrainingDivergence& e) {
        const TrainResult& last = e.last_valid();
        CHECK(e.step() == last.step + 1);
        CHECK(last.history.size() == last.step);
        for (const auto& [name, m] : last.model.parameters()) CHECK(m.all_finite());
    }
}
