#pragma once

// Fully connected stacks shared by the coefficient networks and the velocity field.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "curveflow/diffengine.hpp"
#include "curveflow/random.hpp"

namespace curveflow {

enum class Activation { tanh, silu };

std::string layer_weight_name(std::string_view prefix, std::size_t layer);
std::string layer_bias_name(std::string_view prefix, std::size_t layer);

/// Adds weights drawn uniformly in +-sqrt(6 / (fan_in + fan_out)) and zero biases
/// for the layer sizes {in, hidden..., out}.
void add_glorot_mlp(ParameterSet& params, std::string_view prefix, std::span<const std::size_t> sizes,
                    CounterRng& rng);

/// Affine layers with `act` between them; the last layer is linear.
Var mlp_forward(const VarMap& vars, std::string_view prefix, Var input, std::size_t layers, Activation act);

/// Columns [sin(w0 t), cos(w0 t), sin(w1 t), cos(w1 t), ...] for each t.
Matrix sinusoidal_features(std::span<const double> ts, std::span<const double> frequencies);

}  // namespace curveflow
