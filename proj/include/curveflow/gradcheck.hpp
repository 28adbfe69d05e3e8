#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curveflow/diffengine.hpp"

namespace curveflow {

inline constexpr double kGradcheckStep = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-4;
/// Denominator floor for the relative error, so entries that are zero up to
/// rounding are compared absolutely.
inline constexpr double kGradcheckFloor = 1e-6;

struct GradcheckEntry {
    std::string name;
    GradientComparison comparison;
};

struct GradcheckReport {
    std::vector<GradcheckEntry> entries;
    double max_relative_error = 0.0;
    std::string worst_parameter;
    bool passed() const { return max_relative_error < kGradcheckTolerance; }
};

/// Reverse-mode versus central differences on random small instances of the
/// total loss (theta, phi, psi), the velocity field alone, and a composition
/// of every primitive. `corrupt` perturbs one reverse-mode gradient entry
/// (negative control).
GradcheckReport run_gradient_check(std::uint64_t seed, bool corrupt = false);

}  // namespace curveflow
