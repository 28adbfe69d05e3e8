#include "curveflow/velocity_model.hpp"

#include <cmath>
#include <numbers>

#include "curveflow/mlp.hpp"
#include "curveflow/random.hpp"

namespace curveflow {

namespace {

std::vector<std::size_t> layer_sizes(std::size_t dim, const VelocityOptions& o) {
    std::vector<std::size_t> sizes{dim + o.time_features};
    for (std::size_t l = 0; l < o.hidden_layers; ++l) {
        sizes.push_back(o.hidden);
    }
    sizes.push_back(dim);
    return sizes;
}

void validate(std::size_t dim, const VelocityOptions& o) {
    if (dim < 1) {
        throw ConfigError("velocity field dimension must be >= 1", "model.dim");
    }
    if (o.hidden < 1 || o.hidden_layers < 1) {
        throw ConfigError("velocity field needs at least one hidden layer of positive width", "model.hidden");
    }
    if (o.time_features < 2 || o.time_features % 2 != 0) {
        throw ConfigError("time_features must be a positive even number", "model.time_features");
    }
}

}  // namespace

VelocityField VelocityField::initialize(std::size_t dim, std::uint64_t seed, const VelocityOptions& options) {
    validate(dim, options);
    VelocityField f(dim, options);
    CounterRng rng(seed, 0x7E7A);
    const auto sizes = layer_sizes(dim, options);
    add_glorot_mlp(f.params_, "theta", sizes, rng);
    return f;
}

VelocityField VelocityField::from_parameters(std::size_t dim, const VelocityOptions& options, ParameterSet params) {
    VelocityField f = initialize(dim, 0, options);
    if (!f.params_.congruent(params)) {
        throw ShapeError("stored velocity parameters do not match the model layout");
    }
    f.params_ = std::move(params);
    return f;
}

std::vector<double> VelocityField::time_frequencies() const {
    std::vector<double> f(options_.time_features / 2);
    for (std::size_t k = 0; k < f.size(); ++k) {
        f[k] = std::numbers::pi * std::exp2(0.5 * static_cast<double>(k));
    }
    return f;
}

Var VelocityField::forward_on_tape(Tape& tape, const VarMap& vars, Var z, std::span<const double> ts) const {
    if (z.cols() != dim_ || z.rows() != ts.size()) {
        throw ShapeError("velocity input " + z.value().shape_string() + " does not match dim " +
                         std::to_string(dim_) + " with " + std::to_string(ts.size()) + " times");
    }
    for (double t : ts) {
        if (!(t >= 0.0 && t <= 1.0)) {
            throw DomainError("velocity time " + std::to_string(t) + " outside [0, 1]");
        }
    }
    if (!z.value().all_finite()) {
        throw EvaluationError("input", "non-finite velocity field input");
    }
    const auto freqs = time_frequencies();
    Var features = tape.constant(sinusoidal_features(ts, freqs));
    return mlp_forward(vars, "theta", concat_cols(z, features), layer_count(), Activation::silu);
}

Matrix VelocityField::forward(const Matrix& z, std::span<const double> ts) const {
    Tape tape;
    VarMap vars = tape.constants(params_);
    return forward_on_tape(tape, vars, tape.constant(z), ts).value();
}

Matrix VelocityField::forward(const Matrix& z, double t) const {
    std::vector<double> ts(z.rows(), t);
    return forward(z, ts);
}

std::vector<double> VelocityField::forward(std::span<const double> z, double t) const {
    const double ts[1] = {t};
    Matrix out = forward(Matrix::row(z), ts);
    return {out.values().begin(), out.values().end()};
}

}  // namespace curveflow
