#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "curveflow/diffengine.hpp"

namespace curveflow {

struct VelocityOptions {
    std::size_t hidden = 128;
    std::size_t hidden_layers = 3;
    /// Number of sinusoidal time features (sin/cos pairs, so even).
    std::size_t time_features = 16;

    friend bool operator==(const VelocityOptions&, const VelocityOptions&) = default;
};

/// v_theta(z, t): an MLP on [z, features(t)] with SiLU activations.
/// Parameters are named theta.l<k>.weight / theta.l<k>.bias.
class VelocityField {
public:
    static VelocityField initialize(std::size_t dim, std::uint64_t seed, const VelocityOptions& options = {});
    static VelocityField from_parameters(std::size_t dim, const VelocityOptions& options, ParameterSet params);

    std::size_t dim() const noexcept { return dim_; }
    const VelocityOptions& options() const noexcept { return options_; }
    const ParameterSet& parameters() const noexcept { return params_; }
    ParameterSet& parameters() noexcept { return params_; }
    std::size_t layer_count() const noexcept { return options_.hidden_layers + 1; }

    /// z is (batch x dim), one time per row.
    Var forward_on_tape(Tape& tape, const VarMap& vars, Var z, std::span<const double> ts) const;
    Matrix forward(const Matrix& z, std::span<const double> ts) const;
    Matrix forward(const Matrix& z, double t) const;
    std::vector<double> forward(std::span<const double> z, double t) const;

    std::vector<double> time_frequencies() const;

private:
    VelocityField(std::size_t dim, VelocityOptions options) : dim_(dim), options_(options) {}

    std::size_t dim_;
    VelocityOptions options_;
    ParameterSet params_;
};

}  // namespace curveflow
