#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "curveflow/schedule.hpp"

namespace curveflow {

/// Point sets larger than this are subsampled (seeded) before pairwise sums.
inline constexpr std::size_t kMaxPairwisePoints = 5000;

struct EnergyDistance {
    double value = 0.0;
    bool subsampled = false;
};

/// 2 E|a - b| - E|a - a'| - E|b - b'| over all ordered pairs (diagonal
/// included), clamped at zero.
EnergyDistance energy_distance_report(const Matrix& a, const Matrix& b, std::size_t max_points = kMaxPairwisePoints,
                                      std::uint64_t seed = 0);
double energy_distance(const Matrix& a, const Matrix& b);

/// Mean over seeded random unit directions of the 1D Wasserstein-1 distance
/// between the sorted projections. Requires |A| = |B|.
double sliced_wasserstein(const Matrix& a, const Matrix& b, std::size_t projections, std::uint64_t seed);
/// 1D Wasserstein-1 along one direction (normalised internally).
double projected_wasserstein(const Matrix& a, const Matrix& b, std::span<const double> direction);

struct ScheduleDiagnostics {
    /// dt * sum_i d_i^2 over interior nodes.
    double determinant_integral = 0.0;
    std::vector<double> t;
    std::vector<double> mean_kappa;
    std::vector<double> determinant;
    std::size_t degenerate_points = 0;
};

/// Determinant integral and the pair-averaged curvature at every interior
/// node. Degenerate (pair, node) combinations are skipped; a node with no
/// usable pair raises DegenerateTrajectoryError.
ScheduleDiagnostics schedule_diagnostics(const CoefficientSchedule& schedule, const GridSpec& grid,
                                         const Matrix& x0, const Matrix& eps);

struct EvalReport {
    double energy_distance = 0.0;
    double sliced_wasserstein = 0.0;
    double determinant_integral = 0.0;
    bool subsampled = false;
    std::vector<double> mean_curvature_profile;
};

}  // namespace curveflow
