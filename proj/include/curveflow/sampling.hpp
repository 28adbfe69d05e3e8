#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "curveflow/velocity_model.hpp"

namespace curveflow {

enum class SolverMethod { euler, heun };

std::string_view to_string(SolverMethod method);
SolverMethod parse_solver_method(std::string_view name);

/// Fixed-step integration from t = 1 (noise) down to t = 0 (data).
struct SolverConfig {
    SolverMethod method = SolverMethod::heun;
    std::size_t steps = 50;

    void validate() const;
    friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

/// Velocity for a batch of states (one per row) at a common time.
using VelocityFn = std::function<Matrix(const Matrix& z, double t)>;

VelocityFn velocity_fn(const VelocityField& model);

/// Integrates dz/dt = v(z, t) with step h = 1 / steps. Rows never interact,
/// so the result for a point does not depend on the rest of the batch.
/// Throws DivergenceError with the step index on a non-finite state.
Matrix integrate(const VelocityFn& velocity, Matrix z_start, const SolverConfig& config);
std::vector<double> integrate(const VelocityFn& velocity, std::span<const double> z_start,
                              const SolverConfig& config);

/// Draws `count` standard normal points (seeded) and integrates each.
Matrix sample_batch(const VelocityFn& velocity, std::size_t count, std::size_t dim, std::uint64_t seed,
                    const SolverConfig& config);
Matrix sample_batch(const VelocityField& model, std::size_t count, std::uint64_t seed, const SolverConfig& config);

}  // namespace curveflow
