#include "curveflow/gradcheck.hpp"

#include <cmath>

#include "curveflow/datagen.hpp"
#include "curveflow/losses.hpp"
#include "curveflow/random.hpp"

namespace curveflow {

namespace {

GradcheckEntry check(const std::string& name, const LossFn& loss, const ParameterSet& params, bool corrupt) {
    Evaluation eval = evaluate_with_gradients(loss, params);
    if (corrupt) {
        Matrix& g = eval.gradients.begin()->second;
        g[0] += 1e-2 * (1.0 + std::abs(g[0]));
    }
    const GradientMap fd = finite_difference_gradient(loss, params, kGradcheckStep);
    return {name, compare_gradients(eval.gradients, fd, kGradcheckFloor)};
}

Matrix random_matrix(std::size_t rows, std::size_t cols, CounterRng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.values()) {
        v = rng.normal();
    }
    return m;
}

}  // namespace

GradcheckReport run_gradient_check(std::uint64_t seed, bool corrupt) {
    CounterRng rng(seed, 0x6C);
    GradcheckReport report;

    // Total loss over theta, phi and psi.
    {
        const CoefficientSchedule schedule = CoefficientSchedule::neural(8, seed + 1);
        const VelocityField model = VelocityField::initialize(2, seed + 2, VelocityOptions{12, 3, 4});
        const GridSpec grid(16);
        FlowBatch batch{random_matrix(4, 2, rng), random_matrix(4, 2, rng), {}};
        for (std::size_t i = 0; i < 4; ++i) {
            batch.t.push_back(0.05 + 0.9 * rng.uniform());
        }
        ParameterSet params = model.parameters();
        params.merge(schedule.parameters());
        const LossFn loss = [&](Tape& tape, const VarMap& vars) {
            return total_loss_on_tape(tape, vars, batch, tape_velocity(model), schedule, grid, 0.1).total;
        };
        report.entries.push_back(check("total_loss", loss, params, corrupt));
    }

    // |v(z, t)|^2 with respect to theta.
    {
        const VelocityField model = VelocityField::initialize(3, seed + 3, VelocityOptions{10, 3, 6});
        const Matrix z = random_matrix(5, 3, rng);
        std::vector<double> ts;
        for (std::size_t i = 0; i < 5; ++i) {
            ts.push_back(rng.uniform());
        }
        const LossFn loss = [&](Tape& tape, const VarMap& vars) {
            return sum(square(model.forward_on_tape(tape, vars, tape.constant(z), ts)));
        };
        report.entries.push_back(check("velocity_field", loss, model.parameters(), false));
    }

    // Every primitive in one composition.
    {
        ParameterSet params;
        params.add("x", random_matrix(4, 3, rng));
        params.add("w", random_matrix(3, 2, rng));
        params.add("b", random_matrix(1, 2, rng));
        params.add("c", random_matrix(4, 1, rng));
        const LossFn loss = [](Tape&, const VarMap& v) {
            Var x = v.at("x"), w = v.at("w"), b = v.at("b"), c = v.at("c");
            Var h = tanh(affine(x, w, b));
            Var g = silu(matmul(x, w));
            Var p = mul(c, add(h, g));
            Var q = reciprocal(add_scalar(square(p), 1.0));
            Var r = sqrt(add_scalar(square(sub(p, q)), 0.5));
            Var s = concat_cols(slice_rows(r, 1, 3), slice_rows(h, 0, 3));
            return add(mean(s), scale(sum(neg(q)), 0.3));
        };
        report.entries.push_back(check("primitives", loss, params, false));
    }

    for (const auto& e : report.entries) {
        if (e.comparison.max_relative_error >= report.max_relative_error) {
            report.max_relative_error = e.comparison.max_relative_error;
            report.worst_parameter = e.name + ":" + e.comparison.worst_parameter;
        }
    }
    return report;
}

}  // namespace curveflow
