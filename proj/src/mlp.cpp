#include "curveflow/mlp.hpp"

#include <cmath>

namespace curveflow {

std::string layer_weight_name(std::string_view prefix, std::size_t layer) {
    return std::string(prefix) + ".l" + std::to_string(layer) + ".weight";
}

std::string layer_bias_name(std::string_view prefix, std::size_t layer) {
    return std::string(prefix) + ".l" + std::to_string(layer) + ".bias";
}

void add_glorot_mlp(ParameterSet& params, std::string_view prefix, std::span<const std::size_t> sizes,
                    CounterRng& rng) {
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const std::size_t fan_in = sizes[l], fan_out = sizes[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_in, fan_out);
        for (double& v : w.values()) {
            v = (2.0 * rng.uniform() - 1.0) * bound;
        }
        params.add(layer_weight_name(prefix, l), std::move(w));
        params.add(layer_bias_name(prefix, l), Matrix(1, fan_out, 0.0));
    }
}

Var mlp_forward(const VarMap& vars, std::string_view prefix, Var input, std::size_t layers, Activation act) {
    Var h = input;
    for (std::size_t l = 0; l < layers; ++l) {
        h = affine(h, vars.at(layer_weight_name(prefix, l)), vars.at(layer_bias_name(prefix, l)));
        if (l + 1 < layers) {
            h = act == Activation::tanh ? tanh(h) : silu(h);
        }
    }
    return h;
}

Matrix sinusoidal_features(std::span<const double> ts, std::span<const double> frequencies) {
    Matrix out(ts.size(), 2 * frequencies.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        for (std::size_t k = 0; k < frequencies.size(); ++k) {
            out(i, 2 * k) = std::sin(frequencies[k] * ts[i]);
            out(i, 2 * k + 1) = std::cos(frequencies[k] * ts[i]);
        }
    }
    return out;
}

}  // namespace curveflow
