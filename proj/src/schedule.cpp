#include "curveflow/schedule.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "curveflow/mlp.hpp"

namespace curveflow {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

std::array<double, CoefficientSchedule::kEmbeddingFrequencies> embedding_frequencies() {
    std::array<double, CoefficientSchedule::kEmbeddingFrequencies> f{};
    for (std::size_t k = 0; k < f.size(); ++k) {
        f[k] = static_cast<double>(k + 1) * kHalfPi;
    }
    return f;
}

double horner(const std::vector<double>& c, double t) {
    double acc = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) {
        acc = acc * t + c[k];
    }
    return acc;
}

std::vector<double> differentiate(const std::vector<double>& c) {
    std::vector<double> d;
    for (std::size_t k = 1; k < c.size(); ++k) {
        d.push_back(static_cast<double>(k) * c[k]);
    }
    return d;
}

void check_polynomial(const std::vector<double>& c, double at0, double at1, const char* name) {
    double total = 0.0;
    for (double v : c) {
        total += v;
    }
    const double c0 = c.empty() ? 0.0 : c[0];
    if (c0 != at0 || std::abs(total - at1) > 1e-12) {
        throw ConfigError(std::string("polynomial ") + name + "(t) violates the boundary conditions",
                          std::string("schedule.poly_") + name);
    }
}

}  // namespace

void check_unit_interval(double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw DomainError("time " + std::to_string(t) + " outside [0, 1]");
    }
}

std::string_view to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::neural:
            return "neural";
        case ScheduleKind::linear:
            return "linear";
        case ScheduleKind::trigonometric:
            return "trigonometric";
        case ScheduleKind::polynomial:
            return "polynomial";
    }
    return "unknown";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
    if (name == "neural") return ScheduleKind::neural;
    if (name == "linear") return ScheduleKind::linear;
    if (name == "trigonometric") return ScheduleKind::trigonometric;
    if (name == "polynomial") return ScheduleKind::polynomial;
    throw ConfigError("unknown schedule kind '" + std::string(name) + "'", "schedule.kind");
}

std::string_view to_string(ResidualInit init) { return init == ResidualInit::glorot ? "glorot" : "zero"; }

ResidualInit parse_residual_init(std::string_view name) {
    if (name == "glorot") return ResidualInit::glorot;
    if (name == "zero") return ResidualInit::zero;
    throw ConfigError("unknown residual init '" + std::string(name) + "'", "schedule.init");
}

// ---------------------------------------------------------------------------

GridSpec::GridSpec(std::size_t intervals) : intervals_(intervals) {
    if (intervals < 4) {
        throw ConfigError("grid needs at least 4 intervals, got " + std::to_string(intervals), "train.grid_m");
    }
}

std::vector<double> GridSpec::nodes() const {
    std::vector<double> out(intervals_ + 1);
    for (std::size_t i = 0; i <= intervals_; ++i) {
        out[i] = node(i);
    }
    return out;
}

std::vector<double> GridSpec::interior_nodes() const {
    std::vector<double> out(intervals_ - 1);
    for (std::size_t i = 1; i < intervals_; ++i) {
        out[i - 1] = node(i);
    }
    return out;
}

// ---------------------------------------------------------------------------

CoefficientSchedule CoefficientSchedule::linear() {
    ScheduleOptions o;
    o.kind = ScheduleKind::linear;
    return CoefficientSchedule(o);
}

CoefficientSchedule CoefficientSchedule::trigonometric() {
    ScheduleOptions o;
    o.kind = ScheduleKind::trigonometric;
    return CoefficientSchedule(o);
}

CoefficientSchedule CoefficientSchedule::polynomial(std::vector<double> a_coeffs, std::vector<double> b_coeffs) {
    check_polynomial(a_coeffs, 1.0, 0.0, "a");
    check_polynomial(b_coeffs, 0.0, 1.0, "b");
    ScheduleOptions o;
    o.kind = ScheduleKind::polynomial;
    o.poly_a = std::move(a_coeffs);
    o.poly_b = std::move(b_coeffs);
    return CoefficientSchedule(o);
}

CoefficientSchedule CoefficientSchedule::neural(std::size_t hidden, std::uint64_t seed, ResidualInit init) {
    if (hidden == 0) {
        throw ConfigError("residual network width must be positive", "schedule.hidden");
    }
    ScheduleOptions o;
    o.kind = ScheduleKind::neural;
    o.hidden = hidden;
    o.init = init;
    CoefficientSchedule s(o);
    CounterRng rng(seed, 0x5C4ED);
    const std::array<std::size_t, 4> sizes{2 * kEmbeddingFrequencies, hidden, hidden, 1};
    for (const char* prefix : {"phi", "psi"}) {
        add_glorot_mlp(s.params_, prefix, sizes, rng);
        if (init == ResidualInit::zero) {
            for (auto& [name, m] : s.params_) {
                if (name.starts_with(prefix)) {
                    std::fill(m.values().begin(), m.values().end(), 0.0);
                }
            }
        }
    }
    return s;
}

CoefficientSchedule CoefficientSchedule::create(const ScheduleOptions& options, std::uint64_t seed) {
    switch (options.kind) {
        case ScheduleKind::neural:
            return neural(options.hidden, seed, options.init);
        case ScheduleKind::linear:
            return linear();
        case ScheduleKind::trigonometric:
            return trigonometric();
        case ScheduleKind::polynomial:
            return polynomial(options.poly_a, options.poly_b);
    }
    throw ConfigError("unknown schedule kind", "schedule.kind");
}

CoefficientSchedule CoefficientSchedule::from_parameters(const ScheduleOptions& options, ParameterSet params) {
    CoefficientSchedule s = create(options, 0);
    if (!s.params_.congruent(params)) {
        throw ShapeError("stored schedule parameters do not match the schedule layout");
    }
    s.params_ = std::move(params);
    return s;
}

// ---------------------------------------------------------------------------

std::pair<double, double> CoefficientSchedule::closed_form(double t) const {
    switch (options_.kind) {
        case ScheduleKind::linear:
            return {1.0 - t, t};
        case ScheduleKind::trigonometric:
            // cos(pi t / 2) written as sin(pi (1 - t) / 2) so both endpoints are exact.
            return {std::sin(kHalfPi * (1.0 - t)), std::sin(kHalfPi * t)};
        case ScheduleKind::polynomial:
            return {horner(options_.poly_a, t), horner(options_.poly_b, t)};
        case ScheduleKind::neural:
            break;
    }
    throw std::logic_error("closed_form on a neural schedule");
}

PointDerivatives CoefficientSchedule::exact_derivatives(double t) const {
    switch (options_.kind) {
        case ScheduleKind::linear:
            return {-1.0, 1.0, 0.0, 0.0};
        case ScheduleKind::trigonometric: {
            const double s = std::sin(kHalfPi * t), c = std::cos(kHalfPi * t);
            return {-kHalfPi * s, kHalfPi * c, -kHalfPi * kHalfPi * c, -kHalfPi * kHalfPi * s};
        }
        case ScheduleKind::polynomial: {
            const auto da = differentiate(options_.poly_a), db = differentiate(options_.poly_b);
            return {horner(da, t), horner(db, t), horner(differentiate(da), t), horner(differentiate(db), t)};
        }
        case ScheduleKind::neural:
            break;
    }
    throw std::logic_error("exact derivatives requested for a neural schedule");
}

std::pair<Var, Var> CoefficientSchedule::residuals_on_tape(Tape& tape, const VarMap& vars,
                                                           std::span<const double> ts) const {
    if (options_.kind != ScheduleKind::neural) {
        Matrix ra(ts.size(), 1), rb(ts.size(), 1);
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const auto [a, b] = closed_form(ts[i]);
            ra[i] = a - (1.0 - ts[i]);
            rb[i] = b - ts[i];
        }
        return {tape.constant(std::move(ra)), tape.constant(std::move(rb))};
    }
    const auto freqs = embedding_frequencies();
    Var features = tape.constant(sinusoidal_features(ts, freqs));
    Matrix envelope(ts.size(), 1);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        envelope[i] = ts[i] * (1.0 - ts[i]);
    }
    Var env = tape.constant(std::move(envelope));
    Var f = mlp_forward(vars, "phi", features, kResidualLayers, Activation::tanh);
    Var g = mlp_forward(vars, "psi", features, kResidualLayers, Activation::tanh);
    return {mul(env, f), mul(env, g)};
}

std::pair<Matrix, Matrix> CoefficientSchedule::residual_values(std::span<const double> ts) const {
    Tape tape;
    VarMap vars = tape.constants(params_);
    auto [ra, rb] = residuals_on_tape(tape, vars, ts);
    return {ra.value(), rb.value()};
}

std::pair<double, double> CoefficientSchedule::values(double t) const {
    check_unit_interval(t);
    if (options_.kind != ScheduleKind::neural) {
        return closed_form(t);
    }
    const double ts[1] = {t};
    auto [ra, rb] = residual_values(ts);
    return {(1.0 - t) + ra[0], t + rb[0]};
}

double CoefficientSchedule::a(double t) const { return values(t).first; }

double CoefficientSchedule::b(double t) const { return values(t).second; }

PointDerivatives CoefficientSchedule::derivatives(double t, double h, DerivativeMethod method) const {
    const double ts[1] = {t};
    return derivatives(ts, h, method).front();
}

std::vector<PointDerivatives> CoefficientSchedule::derivatives(std::span<const double> ts, double h,
                                                               DerivativeMethod method) const {
    for (double t : ts) {
        check_unit_interval(t);
    }
    std::vector<PointDerivatives> out(ts.size());
    if (options_.kind != ScheduleKind::neural && method == DerivativeMethod::automatic) {
        for (std::size_t i = 0; i < ts.size(); ++i) {
            out[i] = exact_derivatives(ts[i]);
        }
        return out;
    }
    if (!(h > 0.0 && h <= 0.5)) {
        throw ConfigError("difference step must lie in (0, 0.5]", "h");
    }
    // Five stencil points per t: lo, hi for the first derivative and
    // c - h, c, c + h for the second, with c clamped to [h, 1 - h].
    const std::size_t n = ts.size();
    std::vector<double> points(5 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = std::clamp(ts[i], h, 1.0 - h);
        points[i] = std::max(0.0, ts[i] - h);
        points[n + i] = std::min(1.0, ts[i] + h);
        points[2 * n + i] = c - h;
        points[3 * n + i] = c;
        points[4 * n + i] = c + h;
    }
    const auto [ra, rb] = residual_values(points);
    for (std::size_t i = 0; i < n; ++i) {
        const double span = points[n + i] - points[i];
        out[i].a_dot = -1.0 + (ra[n + i] - ra[i]) / span;
        out[i].b_dot = 1.0 + (rb[n + i] - rb[i]) / span;
        out[i].a_ddot = (ra[4 * n + i] - 2.0 * ra[3 * n + i] + ra[2 * n + i]) / (h * h);
        out[i].b_ddot = (rb[4 * n + i] - 2.0 * rb[3 * n + i] + rb[2 * n + i]) / (h * h);
    }
    return out;
}

DerivativeGrid CoefficientSchedule::grid_derivatives(const GridSpec& grid, bool exact) const {
    Tape tape;
    VarMap vars = tape.constants(params_);
    const GridDerivativeVars v = grid_derivatives_on_tape(tape, vars, grid, exact);
    auto copy = [](Var x) {
        auto s = x.value().values();
        return std::vector<double>(s.begin(), s.end());
    };
    return DerivativeGrid{grid, copy(v.a_dot), copy(v.b_dot), copy(v.a_ddot), copy(v.b_ddot)};
}

TrajectoryCoefficients CoefficientSchedule::coefficients_on_tape(Tape& tape, const VarMap& vars,
                                                                 std::span<const double> ts, double h) const {
    for (double t : ts) {
        check_unit_interval(t);
    }
    const std::size_t n = ts.size();
    Matrix base_a(n, 1), base_b(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        base_a[i] = 1.0 - ts[i];
        base_b[i] = ts[i];
    }
    if (options_.kind != ScheduleKind::neural) {
        Matrix a(n, 1), b(n, 1), ad(n, 1), bd(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            std::tie(a[i], b[i]) = closed_form(ts[i]);
            const PointDerivatives d = exact_derivatives(ts[i]);
            ad[i] = d.a_dot;
            bd[i] = d.b_dot;
        }
        return {tape.constant(std::move(a)), tape.constant(std::move(b)), tape.constant(std::move(ad)),
                tape.constant(std::move(bd))};
    }
    if (!(h > 0.0 && h <= 0.5)) {
        throw ConfigError("difference step must lie in (0, 0.5]", "h");
    }
    std::vector<double> points(3 * n);
    Matrix inv_span(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        points[i] = ts[i];
        points[n + i] = std::max(0.0, ts[i] - h);
        points[2 * n + i] = std::min(1.0, ts[i] + h);
        inv_span[i] = 1.0 / (points[2 * n + i] - points[n + i]);
    }
    auto [ra, rb] = residuals_on_tape(tape, vars, points);
    Var span = tape.constant(std::move(inv_span));
    auto first_derivative = [&](Var r, double base) {
        return add_scalar(mul(sub(slice_rows(r, 2 * n, n), slice_rows(r, n, n)), span), base);
    };
    return {add(tape.constant(std::move(base_a)), slice_rows(ra, 0, n)),
            add(tape.constant(std::move(base_b)), slice_rows(rb, 0, n)), first_derivative(ra, -1.0),
            first_derivative(rb, 1.0)};
}

GridDerivativeVars CoefficientSchedule::grid_derivatives_on_tape(Tape& tape, const VarMap& vars,
                                                                 const GridSpec& grid, bool exact) const {
    const std::size_t m = grid.intervals();
    if (exact) {
        if (options_.kind == ScheduleKind::neural) {
            throw ConfigError("exact grid derivatives are only available for analytic schedules");
        }
        Matrix ad(m - 1, 1), bd(m - 1, 1), add_(m - 1, 1), bdd(m - 1, 1);
        for (std::size_t i = 1; i < m; ++i) {
            const PointDerivatives d = exact_derivatives(grid.node(i));
            ad[i - 1] = d.a_dot;
            bd[i - 1] = d.b_dot;
            add_[i - 1] = d.a_ddot;
            bdd[i - 1] = d.b_ddot;
        }
        return {tape.constant(std::move(ad)), tape.constant(std::move(bd)), tape.constant(std::move(add_)),
                tape.constant(std::move(bdd))};
    }
    const std::vector<double> nodes = grid.nodes();
    auto [ra, rb] = residuals_on_tape(tape, vars, nodes);
    const double half_inv_dt = 0.5 * static_cast<double>(m);
    const double inv_dt2 = static_cast<double>(m) * static_cast<double>(m);
    auto first = [&](Var r, double base) {
        return add_scalar(scale(sub(slice_rows(r, 2, m - 1), slice_rows(r, 0, m - 1)), half_inv_dt), base);
    };
    auto second = [&](Var r) {
        Var outer = add(slice_rows(r, 2, m - 1), slice_rows(r, 0, m - 1));
        return scale(sub(outer, scale(slice_rows(r, 1, m - 1), 2.0)), inv_dt2);
    };
    return {first(ra, -1.0), first(rb, 1.0), second(ra), second(rb)};
}

}  // namespace curveflow
