#include "curveflow/trajectory.hpp"

#include <cmath>
#include <string>

namespace curveflow {

namespace {

void check_pair(std::span<const double> x0, std::span<const double> eps) {
    if (x0.size() != eps.size()) {
        throw ShapeError("x0 has dimension " + std::to_string(x0.size()) + " but eps has " +
                         std::to_string(eps.size()));
    }
    if (x0.size() < 2) {
        throw ShapeError("trajectories need dimension >= 2");
    }
}

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += x[i] * y[i];
    }
    return s;
}

std::vector<double> combine(double ca, std::span<const double> x0, double cb, std::span<const double> eps) {
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) {
        out[i] = ca * x0[i] + cb * eps[i];
    }
    return out;
}

double speed_squared_from(double a_dot, double b_dot, std::span<const double> x0, std::span<const double> eps) {
    const double s = a_dot * a_dot * dot(x0, x0) + 2.0 * a_dot * b_dot * dot(x0, eps) + b_dot * b_dot * dot(eps, eps);
    return std::max(0.0, s);
}

}  // namespace

std::vector<double> interpolate(const CoefficientSchedule& schedule, std::span<const double> x0,
                                std::span<const double> eps, double t) {
    check_pair(x0, eps);
    const auto [a, b] = schedule.values(t);
    return combine(a, x0, b, eps);
}

std::vector<double> target_velocity(const CoefficientSchedule& schedule, std::span<const double> x0,
                                    std::span<const double> eps, double t, double h) {
    check_pair(x0, eps);
    const PointDerivatives d = schedule.derivatives(t, h);
    return combine(d.a_dot, x0, d.b_dot, eps);
}

TrajectorySample make_sample(const CoefficientSchedule& schedule, std::span<const double> x0,
                             std::span<const double> eps, double t, double h) {
    TrajectorySample s;
    s.x0.assign(x0.begin(), x0.end());
    s.eps.assign(eps.begin(), eps.end());
    s.t = t;
    s.z = interpolate(schedule, x0, eps, t);
    s.u = target_velocity(schedule, x0, eps, t, h);
    return s;
}

double cross_magnitude(std::span<const double> x0, std::span<const double> eps) {
    check_pair(x0, eps);
    const double xx = dot(x0, x0), ee = dot(eps, eps), xe = dot(x0, eps);
    return std::sqrt(std::max(0.0, xx * ee - xe * xe));
}

double speed_squared(const CoefficientSchedule& schedule, std::span<const double> x0, std::span<const double> eps,
                     double t, double h) {
    check_pair(x0, eps);
    const PointDerivatives d = schedule.derivatives(t, h);
    return speed_squared_from(d.a_dot, d.b_dot, x0, eps);
}

CurvaturePoint curvature_from_derivatives(const PointDerivatives& d, std::span<const double> x0,
                                          std::span<const double> eps, double t) {
    check_pair(x0, eps);
    const double s2 = speed_squared_from(d.a_dot, d.b_dot, x0, eps);
    if (s2 < kDegenerateSpeedSquared) {
        throw DegenerateTrajectoryError("trajectory speed vanishes at t = " + std::to_string(t));
    }
    CurvaturePoint p;
    p.t = t;
    p.determinant = d.a_dot * d.b_ddot - d.b_dot * d.a_ddot;
    p.cross = cross_magnitude(x0, eps);
    p.speed = std::sqrt(s2);
    p.kappa = std::abs(p.determinant) * p.cross / (s2 * p.speed);
    return p;
}

CurvaturePoint curvature(const CoefficientSchedule& schedule, std::span<const double> x0,
                         std::span<const double> eps, double t, double h) {
    check_pair(x0, eps);
    return curvature_from_derivatives(schedule.derivatives(t, h), x0, eps, t);
}

}  // namespace curveflow
