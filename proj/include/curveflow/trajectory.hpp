#pragma once

#include <span>
#include <vector>

#include "curveflow/schedule.hpp"

namespace curveflow {

/// Default difference step, 1 / M with M = 1000.
inline constexpr double kDefaultStep = 1.0 / 1000.0;
/// Below this squared speed the curvature denominator is treated as zero.
inline constexpr double kDegenerateSpeedSquared = 1e-18;

struct TrajectorySample {
    std::vector<double> x0;
    std::vector<double> eps;
    double t = 0.0;
    std::vector<double> z;
    std::vector<double> u;
};

struct CurvaturePoint {
    double t = 0.0;
    /// a' b'' - b' a''
    double determinant = 0.0;
    /// ||x0 x eps||, generalised to n dimensions by the Lagrange identity.
    double cross = 0.0;
    /// ||dz/dt||
    double speed = 0.0;
    double kappa = 0.0;
};

/// z_t = a(t) x0 + b(t) eps
std::vector<double> interpolate(const CoefficientSchedule& schedule, std::span<const double> x0,
                                std::span<const double> eps, double t);

/// u = a'(t) x0 + b'(t) eps
std::vector<double> target_velocity(const CoefficientSchedule& schedule, std::span<const double> x0,
                                    std::span<const double> eps, double t, double h = kDefaultStep);

TrajectorySample make_sample(const CoefficientSchedule& schedule, std::span<const double> x0,
                             std::span<const double> eps, double t, double h = kDefaultStep);

/// sqrt(|x0|^2 |eps|^2 - (x0 . eps)^2), clamped at zero under the root.
double cross_magnitude(std::span<const double> x0, std::span<const double> eps);

double speed_squared(const CoefficientSchedule& schedule, std::span<const double> x0, std::span<const double> eps,
                     double t, double h = kDefaultStep);

/// Curvature of t -> z_t. Throws DegenerateTrajectoryError when the speed vanishes.
CurvaturePoint curvature(const CoefficientSchedule& schedule, std::span<const double> x0,
                         std::span<const double> eps, double t, double h = kDefaultStep);

/// Same formula from precomputed schedule derivatives.
CurvaturePoint curvature_from_derivatives(const PointDerivatives& d, std::span<const double> x0,
                                          std::span<const double> eps, double t);

}  // namespace curveflow
