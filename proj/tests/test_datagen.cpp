#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "curveflow/datagen.hpp"

using namespace curveflow;

TEST_CASE("noise-free gaussians8 lie on the radius-4 ring at the 8 angles") {
    const Matrix p = generate(DatasetSpec{DatasetKind::gaussians8, 500, 3, 0.0});
    for (std::size_t i = 0; i < p.rows(); ++i) {
        CHECK(std::hypot(p(i, 0), p(i, 1)) == doctest::Approx(4.0).epsilon(1e-14));
        const double k = std::atan2(p(i, 1), p(i, 0)) / (std::numbers::pi / 4.0);
        CHECK(std::abs(k - std::round(k)) < 1e-12);
    }
}

TEST_CASE("gaussians8 component counts are multinomial") {
    const Matrix p = generate(DatasetSpec{DatasetKind::gaussians8, 10000, 11, 0.1});
    std::array<int, 8> counts{};
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double angle = std::atan2(p(i, 1), p(i, 0));
        if (angle < 0) angle += 2.0 * std::numbers::pi;
        counts[static_cast<std::size_t>(std::lround(angle / (std::numbers::pi / 4.0))) % 8]++;
    }
    const double sigma = std::sqrt(10000.0 * (1.0 / 8.0) * (7.0 / 8.0));
    for (int c : counts) CHECK(std::abs(c - 1250.0) <= 4.0 * sigma);
}

TEST_CASE("generators are seeded and pure") {
    for (auto kind : {DatasetKind::gaussians8, DatasetKind::two_moons, DatasetKind::checkerboard, DatasetKind::spiral}) {
        const DatasetSpec spec{kind, 300, 5, 0.1};
        const Matrix a = generate(spec);
        CHECK(a.rows() == 300);
        CHECK(a.cols() == 2);
        CHECK(a.all_finite());
        CHECK(a == generate(spec));
        DatasetSpec other = spec;
        other.seed = 6;
        CHECK_FALSE(a == generate(other));
        // Point i depends only on (seed, i).
        DatasetSpec shorter = spec;
        shorter.count = 100;
        const Matrix s = generate(shorter);
        for (std::size_t i = 0; i < 100; ++i) CHECK(s(i, 1) == a(i, 1));
    }
}

TEST_CASE("standard shapes") {
    const Matrix cb = generate(DatasetSpec{DatasetKind::checkerboard, 2000, 1, 0.0});
    for (std::size_t i = 0; i < cb.rows(); ++i) {
        CHECK(std::abs(cb(i, 0)) <= 4.0);
        CHECK(std::abs(cb(i, 1)) <= 4.0);
        // Occupied squares alternate in colour.
        const long cx = static_cast<long>(std::floor(cb(i, 0) / 2.0)), cy = static_cast<long>(std::floor(cb(i, 1) / 2.0));
        CHECK(((cx + cy) % 2 + 2) % 2 == 0);
    }
    const Matrix moons = generate(DatasetSpec{DatasetKind::two_moons, 2000, 1, 0.0});
    for (std::size_t i = 0; i < moons.rows(); ++i) CHECK(std::abs(moons(i, 0)) <= 4.5);
    const Matrix spiral = generate(DatasetSpec{DatasetKind::spiral, 2000, 1, 0.0});
    for (std::size_t i = 0; i < spiral.rows(); ++i) CHECK(std::hypot(spiral(i, 0), spiral(i, 1)) <= 5.0);
}

TEST_CASE("train and held-out split by parity") {
    const DatasetSpec spec{DatasetKind::two_moons, 50, 2, 0.1};
    const DatasetSplit split = generate_split(spec);
    DatasetSpec doubled = spec;
    doubled.count = 100;
    const Matrix all = generate(doubled);
    REQUIRE(split.train.rows() == 50);
    REQUIRE(split.held_out.rows() == 50);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(split.train(i, 0) == all(2 * i, 0));
        CHECK(split.held_out(i, 1) == all(2 * i + 1, 1));
    }
}

TEST_CASE("noise source") {
    const Matrix n = sample_noise(100000, 2, 9);
    for (std::size_t j = 0; j < 2; ++j) {
        double m = 0, m2 = 0, m3 = 0, m4 = 0;
        for (std::size_t i = 0; i < n.rows(); ++i) m += n(i, j);
        m /= static_cast<double>(n.rows());
        for (std::size_t i = 0; i < n.rows(); ++i) {
            const double d = n(i, j) - m;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= static_cast<double>(n.rows());
        m3 /= static_cast<double>(n.rows());
        m4 /= static_cast<double>(n.rows());
        CHECK(std::abs(m) < 0.02);
        CHECK(std::abs(m2 - 1.0) < 0.02);
        CHECK(std::abs(m3 / std::pow(m2, 1.5)) < 0.05);
        CHECK(std::abs(m4 / (m2 * m2) - 3.0) < 0.1);
    }
    CHECK(sample_noise(10, 3, 4) == sample_noise(10, 3, 4));
    CHECK_THROWS_AS(sample_noise(10, 0, 4), ConfigError);
}

TEST_CASE("validation and CSV export") {
    CHECK_THROWS_AS(parse_dataset_kind("swiss_roll"), ConfigError);
    CHECK_THROWS_AS(generate(DatasetSpec{DatasetKind::spiral, 0, 0, 0.1}), ConfigError);
    CHECK_THROWS_AS(generate(DatasetSpec{DatasetKind::spiral, 5, 0, -1.0}), ConfigError);
    Matrix p(2, 2);
    p(0, 0) = 0.1;
    p(1, 1) = -2.5;
    std::ostringstream out;
    write_points_csv(out, p);
    CHECK(out.str() == "x,y\n0.10000000000000001,0\n0,-2.5\n");
}
