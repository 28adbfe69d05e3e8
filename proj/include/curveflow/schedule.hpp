#pragma once

// Interpolation coefficients a(t), b(t) with a(0)=1, b(0)=0, a(1)=0, b(1)=1.
//
// Every kind is written as the straight-line schedule plus a residual,
//   a(t) = (1 - t) + r_a(t),   b(t) = t + r_b(t),
// where the neural kind uses r_a(t) = t(1-t) f_phi(t) and r_b(t) = t(1-t) g_psi(t).
// The boundary conditions therefore hold exactly for any parameter values.
// Finite differences are applied to the residual only; the linear part has
// exact derivatives (-1, 1, 0, 0). With zero residual nets every derived
// quantity is bit-identical to the linear schedule.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "curveflow/diffengine.hpp"

namespace curveflow {

enum class ScheduleKind { neural, linear, trigonometric, polynomial };
enum class ResidualInit { glorot, zero };
enum class DerivativeMethod { automatic, finite_difference };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);
std::string_view to_string(ResidualInit init);
ResidualInit parse_residual_init(std::string_view name);

struct ScheduleOptions {
    ScheduleKind kind = ScheduleKind::neural;
    /// Width of both hidden layers of each residual network.
    std::size_t hidden = 64;
    ResidualInit init = ResidualInit::glorot;
    /// Polynomial kind: coefficients of a(t) and b(t) in increasing powers of t.
    std::vector<double> poly_a{1.0, -1.0};
    std::vector<double> poly_b{0.0, 0.0, 1.0};

    friend bool operator==(const ScheduleOptions&, const ScheduleOptions&) = default;
};

/// Uniform grid t_i = i / M, i = 0..M.
class GridSpec {
public:
    explicit GridSpec(std::size_t intervals = 1000);

    std::size_t intervals() const noexcept { return intervals_; }
    double step() const noexcept { return 1.0 / static_cast<double>(intervals_); }
    double node(std::size_t i) const noexcept {
        return i >= intervals_ ? 1.0 : static_cast<double>(i) / static_cast<double>(intervals_);
    }
    std::vector<double> nodes() const;
    /// t_1 .. t_{M-1}
    std::vector<double> interior_nodes() const;

private:
    std::size_t intervals_;
};

/// Derivatives at interior nodes i = 1..M-1 (vector index i - 1).
struct DerivativeGrid {
    GridSpec grid;
    std::vector<double> a_dot, b_dot, a_ddot, b_ddot;
};

struct PointDerivatives {
    double a_dot = 0.0, b_dot = 0.0, a_ddot = 0.0, b_ddot = 0.0;
};

/// Column vectors (one row per requested time) recorded on a tape.
struct TrajectoryCoefficients {
    Var a, b, a_dot, b_dot;
};

/// (M-1) x 1 columns over the interior grid nodes.
struct GridDerivativeVars {
    Var a_dot, b_dot, a_ddot, b_ddot;
};

class CoefficientSchedule {
public:
    static constexpr std::size_t kEmbeddingFrequencies = 4;
    static constexpr std::size_t kResidualLayers = 3;

    static CoefficientSchedule linear();
    static CoefficientSchedule trigonometric();
    static CoefficientSchedule polynomial(std::vector<double> a_coeffs, std::vector<double> b_coeffs);
    static CoefficientSchedule neural(std::size_t hidden, std::uint64_t seed,
                                      ResidualInit init = ResidualInit::glorot);
    static CoefficientSchedule create(const ScheduleOptions& options, std::uint64_t seed);
    /// Rebuilds a schedule around stored parameters (checked against the options).
    static CoefficientSchedule from_parameters(const ScheduleOptions& options, ParameterSet params);

    ScheduleKind kind() const noexcept { return options_.kind; }
    const ScheduleOptions& options() const noexcept { return options_; }
    /// phi.* and psi.* entries; empty for analytic kinds.
    const ParameterSet& parameters() const noexcept { return params_; }
    ParameterSet& parameters() noexcept { return params_; }

    double a(double t) const;
    double b(double t) const;
    std::pair<double, double> values(double t) const;

    /// Exact derivatives for analytic kinds under `automatic`; otherwise
    /// differences with step h, clamped to [0, 1] near the endpoints.
    PointDerivatives derivatives(double t, double h, DerivativeMethod method = DerivativeMethod::automatic) const;
    std::vector<PointDerivatives> derivatives(std::span<const double> ts, double h,
                                              DerivativeMethod method = DerivativeMethod::automatic) const;

    /// Central differences over the grid (exact closed forms when `exact` is set, analytic kinds only).
    DerivativeGrid grid_derivatives(const GridSpec& grid, bool exact = false) const;

    /// a, b and first derivatives at `ts` on a tape. `vars` must hold this
    /// schedule's parameters when the kind is neural.
    TrajectoryCoefficients coefficients_on_tape(Tape& tape, const VarMap& vars, std::span<const double> ts,
                                                double h) const;
    GridDerivativeVars grid_derivatives_on_tape(Tape& tape, const VarMap& vars, const GridSpec& grid,
                                                bool exact = false) const;

private:
    explicit CoefficientSchedule(ScheduleOptions options) : options_(std::move(options)) {}

    /// r_a and r_b at each t, as columns.
    std::pair<Var, Var> residuals_on_tape(Tape& tape, const VarMap& vars, std::span<const double> ts) const;
    std::pair<Matrix, Matrix> residual_values(std::span<const double> ts) const;
    PointDerivatives exact_derivatives(double t) const;
    std::pair<double, double> closed_form(double t) const;

    ScheduleOptions options_;
    ParameterSet params_;
};

void check_unit_interval(double t);

}  // namespace curveflow
