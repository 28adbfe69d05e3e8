#include <doctest.h>

#include <cmath>

#include "curveflow/velocity_model.hpp"
#include "test_util.hpp"

using namespace curveflow;

TEST_CASE("output dimension equals input dimension") {
    for (std::size_t n : {2, 4, 8}) {
        const auto m = VelocityField::initialize(n, 1);
        CounterRng rng(n);
        const Matrix z = testutil::random_matrix(5, n, rng);
        const Matrix out = m.forward(z, 0.4);
        CHECK(out.rows() == 5);
        CHECK(out.cols() == n);
        CHECK(m.forward(std::vector<double>(n, 0.5), 0.2).size() == n);
    }
}

TEST_CASE("forward is deterministic and finite on bounded inputs") {
    const auto m = VelocityField::initialize(2, 3);
    CounterRng rng(4);
    for (int k = 0; k < 200; ++k) {
        std::vector<double> z{rng.uniform() * 14.0 - 7.0, rng.uniform() * 14.0 - 7.0};
        const double t = rng.uniform();
        const auto a = m.forward(z, t);
        const auto b = m.forward(z, t);
        CHECK(a == b);
        CHECK(std::isfinite(a[0]));
        CHECK(std::isfinite(a[1]));
    }
}

TEST_CASE("initialization") {
    const auto a = VelocityField::initialize(3, 7);
    const auto b = VelocityField::initialize(3, 7);
    const auto c = VelocityField::initialize(3, 8);
    CHECK(a.parameters() == b.parameters());
    CHECK_FALSE(a.parameters() == c.parameters());
    const Matrix& w0 = a.parameters().at("theta.l0.weight");
    CHECK(w0.rows() == 3 + 16);
    CHECK(w0.cols() == 128);
    CHECK(a.parameters().size() == 8);
    const double limit = std::sqrt(6.0 / (19.0 + 128.0));
    for (double v : w0.values()) CHECK(std::abs(v) <= limit);
    for (double v : a.parameters().at("theta.l0.bias").values()) CHECK(v == 0.0);
    CHECK(a.parameters().at("theta.l3.weight").cols() == 3);
}

TEST_CASE("input validation") {
    const auto m = VelocityField::initialize(2, 0);
    CHECK_THROWS_AS(m.forward(std::vector<double>{std::nan(""), 0.0}, 0.5), EvaluationError);
    CHECK_THROWS_AS(m.forward(std::vector<double>{0.0, 0.0}, 1.5), DomainError);
    CHECK_THROWS_AS(m.forward(std::vector<double>{0.0, 0.0, 1.0}, 0.5), ShapeError);
}

TEST_CASE("gradient of the squared output norm matches finite differences") {
    const auto m = VelocityField::initialize(2, 5, VelocityOptions{24, 3, 8});
    CounterRng rng(6);
    const Matrix z = testutil::random_matrix(3, 2, rng);
    const std::vector<double> ts{0.1, 0.5, 0.9};
    const LossFn loss = [&](Tape& tape, const VarMap& vars) {
        return sum(square(m.forward_on_tape(tape, vars, tape.constant(z), ts)));
    };
    const auto ad = evaluate_with_gradients(loss, m.parameters());
    const auto fd = finite_difference_gradient(loss, m.parameters(), 1e-5);
    CHECK(compare_gradients(ad.gradients, fd, 1e-6).max_relative_error < 1e-4);
}

TEST_CASE("forward is Lipschitz in z for the default initialization") {
    const auto m = VelocityField::initialize(2, 9);
    CounterRng rng(10);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        std::vector<double> z{rng.uniform() * 10.0 - 5.0, rng.uniform() * 10.0 - 5.0};
        const double t = rng.uniform();
        const double delta = 1e-6;
        auto z2 = z;
        z2[rng.below(2)] += delta;
        const auto a = m.forward(z, t), b = m.forward(z2, t);
        worst = std::max(worst, std::hypot(a[0] - b[0], a[1] - b[1]) / delta);
    }
    CHECK(worst < 1e4);
}

TEST_CASE("tape and plain forward agree") {
    const auto m = VelocityField::initialize(3, 2);
    CounterRng rng(1);
    const Matrix z = testutil::random_matrix(4, 3, rng);
    const std::vector<double> ts{0.0, 0.3, 0.6, 1.0};
    Tape tape;
    const VarMap vars = tape.constants(m.parameters());
    CHECK(m.forward_on_tape(tape, vars, tape.constant(z), ts).value() == m.forward(z, ts));
}
