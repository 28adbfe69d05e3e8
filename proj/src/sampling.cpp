#include "curveflow/sampling.hpp"

#include <string>

#include "curveflow/datagen.hpp"

namespace curveflow {

std::string_view to_string(SolverMethod method) { return method == SolverMethod::euler ? "euler" : "heun"; }

SolverMethod parse_solver_method(std::string_view name) {
    if (name == "euler") return SolverMethod::euler;
    if (name == "heun") return SolverMethod::heun;
    throw ConfigError("unknown solver method '" + std::string(name) + "'", "solver.method");
}

void SolverConfig::validate() const {
    if (steps == 0) {
        throw ConfigError("solver steps must be >= 1", "solver.steps");
    }
}

VelocityFn velocity_fn(const VelocityField& model) {
    return [&model](const Matrix& z, double t) { return model.forward(z, t); };
}

Matrix integrate(const VelocityFn& velocity, Matrix z, const SolverConfig& config) {
    config.validate();
    if (!z.all_finite()) {
        throw DivergenceError("non-finite starting state", 0);
    }
    const std::size_t n = config.steps;
    const double h = 1.0 / static_cast<double>(n);
    auto time_at = [n](std::size_t k) { return 1.0 - static_cast<double>(k) / static_cast<double>(n); };
    for (std::size_t k = 0; k < n; ++k) {
        const double t0 = time_at(k);
        const Matrix v0 = velocity(z, t0);
        if (!v0.same_shape(z)) {
            throw ShapeError("velocity returned " + v0.shape_string() + " for state " + z.shape_string());
        }
        if (config.method == SolverMethod::euler) {
            for (std::size_t i = 0; i < z.size(); ++i) {
                z[i] -= h * v0[i];
            }
        } else {
            Matrix predictor = z;
            for (std::size_t i = 0; i < z.size(); ++i) {
                predictor[i] -= h * v0[i];
            }
            const Matrix v1 = velocity(predictor, time_at(k + 1));
            for (std::size_t i = 0; i < z.size(); ++i) {
                z[i] -= 0.5 * h * (v0[i] + v1[i]);
            }
        }
        if (!z.all_finite()) {
            throw DivergenceError("integration diverged at step " + std::to_string(k + 1), k + 1);
        }
    }
    return z;
}

std::vector<double> integrate(const VelocityFn& velocity, std::span<const double> z_start,
                              const SolverConfig& config) {
    Matrix out = integrate(velocity, Matrix::row(z_start), config);
    return {out.values().begin(), out.values().end()};
}

Matrix sample_batch(const VelocityFn& velocity, std::size_t count, std::size_t dim, std::uint64_t seed,
                    const SolverConfig& config) {
    if (count == 0) {
        throw ConfigError("sample count must be >= 1", "count");
    }
    return integrate(velocity, sample_noise(count, dim, seed), config);
}

Matrix sample_batch(const VelocityField& model, std::size_t count, std::uint64_t seed, const SolverConfig& config) {
    return sample_batch(velocity_fn(model), count, model.dim(), seed, config);
}

}  // namespace curveflow
