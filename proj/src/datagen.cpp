#include "curveflow/datagen.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "curveflow/io.hpp"
#include "curveflow/random.hpp"

namespace curveflow {

namespace {

constexpr std::uint64_t kDataStream = 0xDA7A;
constexpr std::uint64_t kNoiseStream = 0x401CE;

void gaussians8(CounterRng& rng, double noise, double* out) {
    const auto k = static_cast<double>(rng.below(8));
    const double angle = 2.0 * std::numbers::pi * k / 8.0;
    out[0] = 4.0 * std::cos(angle) + noise * rng.normal();
    out[1] = 4.0 * std::sin(angle) + noise * rng.normal();
}

// Two interleaved half circles, centred and scaled to roughly [-3, 3].
void two_moons(CounterRng& rng, double noise, double* out) {
    const double theta = std::numbers::pi * rng.uniform();
    double x, y;
    if (rng.below(2) == 0) {
        x = std::cos(theta);
        y = std::sin(theta);
    } else {
        x = 1.0 - std::cos(theta);
        y = 0.5 - std::sin(theta);
    }
    out[0] = 2.0 * (x - 0.5) + noise * rng.normal();
    out[1] = 2.0 * (y - 0.25) + noise * rng.normal();
}

// Alternating unit squares on [-2, 2]^2, scaled by 2.
void checkerboard(CounterRng& rng, double noise, double* out) {
    const double x1 = 4.0 * rng.uniform() - 2.0;
    const double x2 = rng.uniform() - 2.0 * static_cast<double>(rng.below(2));
    const double shifted = x2 + static_cast<double>(static_cast<long>(std::floor(x1)) & 1L);
    out[0] = 2.0 * x1 + noise * rng.normal();
    out[1] = 2.0 * shifted + noise * rng.normal();
}

// Two arms of an Archimedean spiral.
void spiral(CounterRng& rng, double noise, double* out) {
    const double r = std::sqrt(rng.uniform()) * 3.0 * std::numbers::pi;
    const double sign = rng.below(2) == 0 ? 1.0 : -1.0;
    out[0] = sign * (-std::cos(r) * r) / 2.5 + noise * rng.normal();
    out[1] = sign * (std::sin(r) * r) / 2.5 + noise * rng.normal();
}

}  // namespace

std::string_view to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::gaussians8:
            return "gaussians8";
        case DatasetKind::two_moons:
            return "two_moons";
        case DatasetKind::checkerboard:
            return "checkerboard";
        case DatasetKind::spiral:
            return "spiral";
    }
    return "unknown";
}

DatasetKind parse_dataset_kind(std::string_view name) {
    if (name == "gaussians8") return DatasetKind::gaussians8;
    if (name == "two_moons") return DatasetKind::two_moons;
    if (name == "checkerboard") return DatasetKind::checkerboard;
    if (name == "spiral") return DatasetKind::spiral;
    throw ConfigError("unknown dataset kind '" + std::string(name) + "'", "dataset.kind");
}

void DatasetSpec::validate() const {
    if (count < 1) {
        throw ConfigError("dataset count must be >= 1", "dataset.count");
    }
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
        throw ConfigError("noise_std must be non-negative", "dataset.noise_std");
    }
}

Matrix generate(const DatasetSpec& spec) {
    spec.validate();
    Matrix out(spec.count, 2);
    const CounterRng root(spec.seed, kDataStream);
    for (std::size_t i = 0; i < spec.count; ++i) {
        CounterRng rng = root.split(i);
        double* row = out.row_ptr(i);
        switch (spec.kind) {
            case DatasetKind::gaussians8:
                gaussians8(rng, spec.noise_std, row);
                break;
            case DatasetKind::two_moons:
                two_moons(rng, spec.noise_std, row);
                break;
            case DatasetKind::checkerboard:
                checkerboard(rng, spec.noise_std, row);
                break;
            case DatasetKind::spiral:
                spiral(rng, spec.noise_std, row);
                break;
        }
    }
    return out;
}

DatasetSplit generate_split(const DatasetSpec& spec) {
    DatasetSpec doubled = spec;
    doubled.count = 2 * spec.count;
    const Matrix all = generate(doubled);
    DatasetSplit split{Matrix(spec.count, 2), Matrix(spec.count, 2)};
    for (std::size_t i = 0; i < spec.count; ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
            split.train(i, c) = all(2 * i, c);
            split.held_out(i, c) = all(2 * i + 1, c);
        }
    }
    return split;
}

Matrix sample_noise(std::size_t count, std::size_t dim, std::uint64_t seed) {
    if (count < 1) {
        throw ConfigError("noise count must be >= 1", "count");
    }
    if (dim < 1) {
        throw ConfigError("noise dimension must be >= 1", "dim");
    }
    Matrix out(count, dim);
    const CounterRng root(seed, kNoiseStream);
    for (std::size_t i = 0; i < count; ++i) {
        CounterRng rng = root.split(i);
        for (double& v : out.row_span(i)) {
            v = rng.normal();
        }
    }
    return out;
}

void write_points_csv(std::ostream& out, const Matrix& points) {
    static const char* names[] = {"x", "y", "z"};
    for (std::size_t c = 0; c < points.cols(); ++c) {
        if (c > 0) out << ',';
        if (c < 3) {
            out << names[c];
        } else {
            out << 'x' << c;
        }
    }
    out << '\n';
    for (std::size_t r = 0; r < points.rows(); ++r) {
        for (std::size_t c = 0; c < points.cols(); ++c) {
            if (c > 0) out << ',';
            out << format_double(points(r, c));
        }
        out << '\n';
    }
}

}  // namespace curveflow
