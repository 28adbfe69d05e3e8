#include "curveflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "curveflow/losses.hpp"
#include "curveflow/random.hpp"
#include "curveflow/trajectory.hpp"

namespace curveflow {

namespace {

Matrix subsample(const Matrix& m, std::size_t max_points, CounterRng& rng) {
    if (m.rows() <= max_points) {
        return m;
    }
    std::vector<std::size_t> idx(m.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < max_points; ++i) {
        std::swap(idx[i], idx[i + rng.below(m.rows() - i)]);
    }
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(max_points));
    Matrix out(max_points, m.cols());
    for (std::size_t i = 0; i < max_points; ++i) {
        std::copy_n(m.row_ptr(idx[i]), m.cols(), out.row_ptr(i));
    }
    return out;
}

double mean_pairwise_distance(const Matrix& a, const Matrix& b) {
    const std::size_t d = a.cols();
    double total = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* x = a.row_ptr(i);
        double row = 0.0;
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* y = b.row_ptr(j);
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = x[k] - y[k];
                s += diff * diff;
            }
            row += std::sqrt(s);
        }
        total += row;
    }
    return total / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

void check_sets(const Matrix& a, const Matrix& b) {
    if (a.rows() == 0 || b.rows() == 0) {
        throw ConfigError("point sets must be non-empty");
    }
    if (a.cols() != b.cols()) {
        throw ShapeError("point sets have dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.cols()));
    }
}

}  // namespace

EnergyDistance energy_distance_report(const Matrix& a, const Matrix& b, std::size_t max_points, std::uint64_t seed) {
    check_sets(a, b);
    // Subsample streams depend only on the set size and the cross term is
    // summed in a canonical order, so swapping the arguments is exact.
    const CounterRng root(seed, 0xED);
    EnergyDistance out;
    out.subsampled = a.rows() > max_points || b.rows() > max_points;
    CounterRng rng_a = root.split(a.rows());
    CounterRng rng_b = root.split(b.rows());
    const Matrix sa = subsample(a, max_points, rng_a);
    const Matrix sb = subsample(b, max_points, rng_b);
    const bool a_first = std::lexicographical_compare(sa.values().begin(), sa.values().end(), sb.values().begin(),
                                                      sb.values().end());
    const double ab = a_first ? mean_pairwise_distance(sa, sb) : mean_pairwise_distance(sb, sa);
    const double aa = mean_pairwise_distance(sa, sa);
    const double bb = mean_pairwise_distance(sb, sb);
    out.value = std::max(0.0, 2.0 * ab - (aa + bb));
    return out;
}

double energy_distance(const Matrix& a, const Matrix& b) { return energy_distance_report(a, b).value; }

double projected_wasserstein(const Matrix& a, const Matrix& b, std::span<const double> direction) {
    check_sets(a, b);
    if (a.rows() != b.rows()) {
        throw ConfigError("sliced Wasserstein needs equally sized point sets, got " + std::to_string(a.rows()) +
                          " and " + std::to_string(b.rows()));
    }
    if (direction.size() != a.cols()) {
        throw ShapeError("projection direction has the wrong dimension");
    }
    double norm = 0.0;
    for (double v : direction) {
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) {
        throw ConfigError("projection direction must be non-zero");
    }
    auto project = [&](const Matrix& m) {
        std::vector<double> p(m.rows());
        for (std::size_t i = 0; i < m.rows(); ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < m.cols(); ++k) {
                s += m(i, k) * direction[k];
            }
            p[i] = s / norm;
        }
        std::sort(p.begin(), p.end());
        return p;
    };
    const auto pa = project(a), pb = project(b);
    double total = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        total += std::abs(pa[i] - pb[i]);
    }
    return total / static_cast<double>(pa.size());
}

double sliced_wasserstein(const Matrix& a, const Matrix& b, std::size_t projections, std::uint64_t seed) {
    if (projections < 1) {
        throw ConfigError("projections must be >= 1", "metrics.projections");
    }
    check_sets(a, b);
    const CounterRng root(seed, 0x5117);
    std::vector<double> dir(a.cols());
    double total = 0.0;
    for (std::size_t p = 0; p < projections; ++p) {
        CounterRng rng = root.split(p);
        double norm = 0.0;
        do {
            norm = 0.0;
            for (double& v : dir) {
                v = rng.normal();
                norm += v * v;
            }
        } while (norm == 0.0);
        total += projected_wasserstein(a, b, dir);
    }
    return total / static_cast<double>(projections);
}

ScheduleDiagnostics schedule_diagnostics(const CoefficientSchedule& schedule, const GridSpec& grid,
                                         const Matrix& x0, const Matrix& eps) {
    if (!x0.same_shape(eps) || x0.rows() == 0) {
        throw ShapeError("diagnostic pairs must be non-empty and equally shaped");
    }
    const DerivativeGrid d = schedule.grid_derivatives(grid);
    ScheduleDiagnostics out;
    out.t = grid.interior_nodes();
    out.determinant = determinant_profile(d);
    out.determinant_integral = determinant_integral(d);
    out.mean_kappa.assign(out.t.size(), 0.0);
    for (std::size_t i = 0; i < out.t.size(); ++i) {
        const PointDerivatives pd{d.a_dot[i], d.b_dot[i], d.a_ddot[i], d.b_ddot[i]};
        double total = 0.0;
        std::size_t used = 0;
        for (std::size_t p = 0; p < x0.rows(); ++p) {
            try {
                total += curvature_from_derivatives(pd, x0.row_span(p), eps.row_span(p), out.t[i]).kappa;
                ++used;
            } catch (const DegenerateTrajectoryError&) {
                ++out.degenerate_points;
            }
        }
        if (used == 0) {
            throw DegenerateTrajectoryError("every pair is degenerate at t = " + std::to_string(out.t[i]));
        }
        out.mean_kappa[i] = total / static_cast<double>(used);
    }
    return out;
}

}  // namespace curveflow
