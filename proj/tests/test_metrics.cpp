#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "curveflow/losses.hpp"
#include "curveflow/metrics.hpp"
#include "test_util.hpp"

using namespace curveflow;

namespace {

Matrix points(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    std::size_t i = 0;
    for (const auto& r : rows) {
        std::size_t j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

Matrix permuted(const Matrix& m, const std::vector<std::size_t>& order) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(order[i], j);
    return out;
}

// Sorted-matching 1D Wasserstein-1 on the first coordinate.
double wasserstein_1d_oracle(const Matrix& a, const Matrix& b) {
    std::vector<double> x(a.rows()), y(b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) x[i] = a(i, 0);
    for (std::size_t i = 0; i < b.rows(); ++i) y[i] = b(i, 0);
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
    return s / static_cast<double>(x.size());
}

}  // namespace

TEST_CASE("energy distance examples") {
    CounterRng rng(1);
    const Matrix a = testutil::random_matrix(30, 2, rng);
    const Matrix b = testutil::random_matrix(40, 2, rng);
    CHECK(energy_distance(a, a) == 0.0);
    CHECK(energy_distance(points({{0, 0}}), points({{3, 4}})) == 10.0);
    CHECK(energy_distance(a, b) == energy_distance(b, a));
    CHECK(energy_distance(a, b) > 0.0);
    CHECK_THROWS_AS(energy_distance(a, testutil::random_matrix(5, 3, rng)), ShapeError);
}

TEST_CASE("energy distance vanishes exactly on equal multisets") {
    // Brute force over every ordering of a small multiset, and over every
    // single-point change that breaks equality.
    const Matrix base = points({{0, 0}, {1, 0}, {1, 0}, {0, 2}});
    std::vector<std::size_t> order{0, 1, 2, 3};
    do {
        CHECK(energy_distance(base, permuted(base, order)) <= 1e-12);
    } while (std::next_permutation(order.begin(), order.end()));
    for (std::size_t i = 0; i < base.rows(); ++i) {
        for (double shift : {-1.0, 0.5, 1.0}) {
            Matrix changed = base;
            changed(i, 1) += shift;
            CHECK(energy_distance(base, changed) > 1e-6);
        }
    }
    CHECK(energy_distance(base, points({{0, 0}, {1, 0}, {0, 2}, {0, 2}})) > 1e-6);
}

TEST_CASE("energy distance subsamples large sets deterministically") {
    CounterRng rng(2);
    const Matrix a = testutil::random_matrix(300, 2, rng);
    const Matrix b = testutil::random_matrix(300, 2, rng);
    const auto full = energy_distance_report(a, b, 1000, 0);
    CHECK_FALSE(full.subsampled);
    const auto sub = energy_distance_report(a, b, 100, 4);
    CHECK(sub.subsampled);
    CHECK(sub.value == energy_distance_report(a, b, 100, 4).value);
    CHECK(sub.value >= 0.0);
}

TEST_CASE("sliced Wasserstein examples") {
    CounterRng rng(3);
    const Matrix a = testutil::random_matrix(50, 2, rng);
    const Matrix b = testutil::random_matrix(50, 2, rng);
    CHECK(sliced_wasserstein(a, a, 64, 0) == 0.0);
    const std::vector<double> axis{1.0, 0.0};
    CHECK(projected_wasserstein(points({{0, 0}, {1, 0}}), points({{1, 0}, {2, 0}}), axis) == 1.0);
    CHECK(projected_wasserstein(a, b, axis) == doctest::Approx(wasserstein_1d_oracle(a, b)).epsilon(1e-14));

    const double ab = sliced_wasserstein(a, b, 64, 1);
    CHECK(ab >= 0.0);
    CHECK(ab == doctest::Approx(sliced_wasserstein(b, a, 64, 1)).epsilon(1e-14));
    CHECK(ab == sliced_wasserstein(a, b, 64, 1));

    for (int k = 0; k < 20; ++k) {
        const double vx = rng.normal(), vy = rng.normal();
        Matrix shifted = b;
        for (std::size_t i = 0; i < shifted.rows(); ++i) {
            shifted(i, 0) += vx;
            shifted(i, 1) += vy;
        }
        CHECK(std::abs(sliced_wasserstein(a, shifted, 64, 1) - ab) <= std::hypot(vx, vy) + 1e-12);
    }
    CHECK_THROWS_AS(sliced_wasserstein(a, testutil::random_matrix(10, 2, rng), 8, 0), ConfigError);
    CHECK_THROWS_AS(sliced_wasserstein(a, b, 0, 0), ConfigError);
}

TEST_CASE("schedule diagnostics") {
    CounterRng rng(4);
    const GridSpec g(1000);
    const Matrix x0 = testutil::random_matrix(32, 2, rng), eps = testutil::random_matrix(32, 2, rng);

    const auto lin = schedule_diagnostics(CoefficientSchedule::linear(), g, x0, eps);
    CHECK(lin.determinant_integral == 0.0);
    CHECK(lin.t.size() == 999);
    for (double k : lin.mean_kappa) CHECK(k <= 1e-12);

    const auto trig = schedule_diagnostics(CoefficientSchedule::trigonometric(), g, x0, eps);
    const double closed = std::pow(std::numbers::pi / 2.0, 6);
    CHECK(std::abs(trig.determinant_integral - closed) / closed < 0.01);

    Matrix e1(5, 2), e2(5, 2);
    for (std::size_t i = 0; i < 5; ++i) {
        const double th = 0.7 * static_cast<double>(i);
        e1(i, 0) = std::cos(th);
        e1(i, 1) = std::sin(th);
        e2(i, 0) = -std::sin(th);
        e2(i, 1) = std::cos(th);
    }
    const auto circle = schedule_diagnostics(CoefficientSchedule::trigonometric(), g, e1, e2);
    for (double k : circle.mean_kappa) CHECK(std::abs(k - 1.0) <= 1e-3);

    const auto neural = CoefficientSchedule::neural(16, 3);
    const auto nd = schedule_diagnostics(neural, g, x0, eps);
    for (double lambda : {0.01, 1.0, 7.5}) {
        CHECK(testutil::rel_diff(nd.determinant_integral, robust_curvature_loss(neural, g, lambda) / lambda) <= 1e-12);
    }

    CHECK_THROWS_AS(schedule_diagnostics(CoefficientSchedule::linear(), g, x0, x0), DegenerateTrajectoryError);
    Matrix mixed = eps;
    for (std::size_t j = 0; j < 2; ++j) mixed(0, j) = x0(0, j);
    const auto partial = schedule_diagnostics(CoefficientSchedule::linear(), g, x0, mixed);
    CHECK(partial.degenerate_points == 999);
}
