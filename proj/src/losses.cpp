#include "curveflow/losses.hpp"

#include <string>

namespace curveflow {

namespace {

void check_batch(const FlowBatch& batch) {
    if (batch.size() == 0) {
        throw ConfigError("flow-matching loss needs a non-empty batch", "batch");
    }
    if (batch.x0.rows() != batch.size() || batch.eps.rows() != batch.size() ||
        batch.x0.cols() != batch.eps.cols()) {
        throw ShapeError("batch arrays disagree: x0 " + batch.x0.shape_string() + ", eps " +
                         batch.eps.shape_string() + ", " + std::to_string(batch.size()) + " times");
    }
}

void check_lambda(double lambda) {
    if (!(lambda >= 0.0)) {
        throw ConfigError("lambda must be non-negative", "lambda");
    }
}

VarMap with_schedule_constants(Tape& tape, const VarMap& vars, const CoefficientSchedule& schedule) {
    VarMap out = vars;
    for (const auto& [name, m] : schedule.parameters()) {
        if (out.count(name) == 0) {
            out.emplace(name, tape.constant(m));
        }
    }
    return out;
}

}  // namespace

VelocityTapeFn tape_velocity(const VelocityField& model) {
    return [&model](Tape& tape, const VarMap& vars, Var z, std::span<const double> ts) {
        return model.forward_on_tape(tape, vars, z, ts);
    };
}

Var curve_fm_loss_on_tape(Tape& tape, const VarMap& vars, const FlowBatch& batch, const VelocityTapeFn& velocity,
                          const CoefficientSchedule& schedule, double h, bool stop_target_gradient) {
    check_batch(batch);
    const VarMap all = with_schedule_constants(tape, vars, schedule);
    const TrajectoryCoefficients c = schedule.coefficients_on_tape(tape, all, batch.t, h);
    Var x0 = tape.constant(batch.x0);
    Var eps = tape.constant(batch.eps);
    Var z = add(mul(c.a, x0), mul(c.b, eps));
    Var target = add(mul(c.a_dot, x0), mul(c.b_dot, eps));
    if (stop_target_gradient) {
        target = tape.constant(target.value());
    }
    Var v = velocity(tape, vars, z, batch.t);
    return scale(sum(square(sub(v, target))), 1.0 / static_cast<double>(batch.size()));
}

double curve_fm_loss(const FlowBatch& batch, const VelocityField& model, const CoefficientSchedule& schedule,
                     double h) {
    Tape tape;
    VarMap vars = tape.constants(model.parameters());
    return curve_fm_loss_on_tape(tape, vars, batch, tape_velocity(model), schedule, h).item();
}

std::vector<double> determinant_profile(const DerivativeGrid& grid) {
    std::vector<double> d(grid.a_dot.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = grid.a_dot[i] * grid.b_ddot[i] - grid.b_dot[i] * grid.a_ddot[i];
    }
    return d;
}

double determinant_integral(const DerivativeGrid& grid) {
    double s = 0.0;
    for (double d : determinant_profile(grid)) {
        s += d * d;
    }
    return grid.grid.step() * s;
}

Var robust_curvature_loss_on_tape(Tape& tape, const VarMap& vars, const CoefficientSchedule& schedule,
                                  const GridSpec& grid, double lambda) {
    check_lambda(lambda);
    if (lambda == 0.0) {
        return tape.constant(0.0);
    }
    const VarMap all = with_schedule_constants(tape, vars, schedule);
    const GridDerivativeVars g = schedule.grid_derivatives_on_tape(tape, all, grid);
    Var det = sub(mul(g.a_dot, g.b_ddot), mul(g.b_dot, g.a_ddot));
    return scale(sum(square(det)), lambda * grid.step());
}

double robust_curvature_loss(const CoefficientSchedule& schedule, const GridSpec& grid, double lambda) {
    Tape tape;
    VarMap vars = tape.constants(schedule.parameters());
    return robust_curvature_loss_on_tape(tape, vars, schedule, grid, lambda).item();
}

LossTerms total_loss_on_tape(Tape& tape, const VarMap& vars, const FlowBatch& batch,
                             const VelocityTapeFn& velocity, const CoefficientSchedule& schedule,
                             const GridSpec& grid, double lambda, bool stop_target_gradient) {
    Var fm = curve_fm_loss_on_tape(tape, vars, batch, velocity, schedule, grid.step(), stop_target_gradient);
    Var curv = robust_curvature_loss_on_tape(tape, vars, schedule, grid, lambda);
    return {fm, curv, add(fm, curv)};
}

LossReport total_loss(const FlowBatch& batch, const VelocityField& model, const CoefficientSchedule& schedule,
                      const GridSpec& grid, double lambda) {
    Tape tape;
    VarMap vars = tape.constants(model.parameters());
    const LossTerms terms = total_loss_on_tape(tape, vars, batch, tape_velocity(model), schedule, grid, lambda);
    LossReport r;
    r.fm_loss = terms.fm.item();
    r.curvature_loss = terms.curvature.item();
    r.total = terms.total.item();
    r.lambda = lambda;
    return r;
}

}  // namespace curveflow
