#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>

#include "curveflow/diffengine.hpp"

namespace curveflow {

enum class DatasetKind { gaussians8, two_moons, checkerboard, spiral };

std::string_view to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view name);

struct DatasetSpec {
    DatasetKind kind = DatasetKind::gaussians8;
    std::size_t count = 2000;
    std::uint64_t seed = 0;
    double noise_std = 0.1;

    void validate() const;
    friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

/// `count` two-dimensional points, one per row. Point i depends only on
/// (seed, i), so a larger count extends a smaller one.
Matrix generate(const DatasetSpec& spec);

struct DatasetSplit {
    Matrix train;
    Matrix held_out;
};

/// Generates 2 * count points; even indices train, odd indices are held out.
DatasetSplit generate_split(const DatasetSpec& spec);

/// i.i.d. standard normal entries, row i seeded by (seed, i).
Matrix sample_noise(std::size_t count, std::size_t dim, std::uint64_t seed);

/// CSV with a header line and 17 significant digits per value.
void write_points_csv(std::ostream& out, const Matrix& points);

}  // namespace curveflow
