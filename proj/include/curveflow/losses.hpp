#pragma once

// Flow-matching data term along the learned interpolant, the determinant
// (turning) regularizer over a fixed grid, and their sum.

#include <functional>
#include <span>
#include <vector>

#include "curveflow/schedule.hpp"
#include "curveflow/velocity_model.hpp"

namespace curveflow {

/// One row per sample: data point, noise point and time.
struct FlowBatch {
    Matrix x0;
    Matrix eps;
    std::vector<double> t;

    std::size_t size() const noexcept { return t.size(); }
};

/// Velocity prediction for a batch of (z, t) on a tape.
using VelocityTapeFn = std::function<Var(Tape&, const VarMap&, Var z, std::span<const double> ts)>;

VelocityTapeFn tape_velocity(const VelocityField& model);

struct LossReport {
    std::size_t step = 0;
    double fm_loss = 0.0;
    double curvature_loss = 0.0;
    double total = 0.0;
    double lambda = 0.0;
    double lr = 0.0;
};

struct LossTerms {
    Var fm;
    Var curvature;
    Var total;
};

/// Mean over the batch of |v(z_t, t) - (a' x0 + b' eps)|^2, summed over dimensions.
/// With `stop_target_gradient` the regression target is treated as a constant.
Var curve_fm_loss_on_tape(Tape& tape, const VarMap& vars, const FlowBatch& batch, const VelocityTapeFn& velocity,
                          const CoefficientSchedule& schedule, double h, bool stop_target_gradient = false);

double curve_fm_loss(const FlowBatch& batch, const VelocityField& model, const CoefficientSchedule& schedule,
                     double h);

/// d_i = a'_i b''_i - b'_i a''_i over interior nodes.
std::vector<double> determinant_profile(const DerivativeGrid& grid);

/// dt * sum_i d_i^2 over interior nodes.
double determinant_integral(const DerivativeGrid& grid);

/// lambda * dt * sum_{i=1}^{M-1} d_i^2. Zero without touching the grid when lambda == 0.
Var robust_curvature_loss_on_tape(Tape& tape, const VarMap& vars, const CoefficientSchedule& schedule,
                                  const GridSpec& grid, double lambda);

double robust_curvature_loss(const CoefficientSchedule& schedule, const GridSpec& grid, double lambda);

LossTerms total_loss_on_tape(Tape& tape, const VarMap& vars, const FlowBatch& batch,
                             const VelocityTapeFn& velocity, const CoefficientSchedule& schedule,
                             const GridSpec& grid, double lambda, bool stop_target_gradient = false);

LossReport total_loss(const FlowBatch& batch, const VelocityField& model, const CoefficientSchedule& schedule,
                      const GridSpec& grid, double lambda);

}  // namespace curveflow
