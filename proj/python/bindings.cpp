#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "curveflow/cli.hpp"
#include "curveflow/datagen.hpp"
#include "curveflow/errors.hpp"
#include "curveflow/gradcheck.hpp"
#include "curveflow/metrics.hpp"
#include "curveflow/trajectory.hpp"

namespace py = pybind11;
using namespace curveflow;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy_n(a.data(), a.size(), m.values().begin());
    return m;
}

Array to_array(const Matrix& m) {
    Array a({m.rows(), m.cols()});
    std::copy(m.values().begin(), m.values().end(), a.mutable_data());
    return a;
}

std::vector<double> to_vector(const Array& a) {
    if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
    return {a.data(), a.data() + a.size()};
}

CoefficientSchedule make_schedule(const std::string& kind, std::size_t hidden, std::uint64_t seed,
                                  const std::string& init) {
    ScheduleOptions o;
    o.kind = parse_schedule_kind(kind);
    o.hidden = hidden;
    o.init = parse_residual_init(init);
    return CoefficientSchedule::create(o, seed);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Learned interpolation schedules for flow matching";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DegenerateTrajectoryError>(m, "DegenerateTrajectoryError", PyExc_RuntimeError);

    py::class_<CoefficientSchedule>(m, "Schedule")
        .def(py::init(&make_schedule), py::arg("kind") = "linear", py::arg("hidden") = 64, py::arg("seed") = 0,
             py::arg("init") = "glorot")
        .def_property_readonly("kind", [](const CoefficientSchedule& s) { return std::string(to_string(s.kind())); })
        .def("a", &CoefficientSchedule::a, py::arg("t"))
        .def("b", &CoefficientSchedule::b, py::arg("t"))
        .def(
            "derivatives",
            [](const CoefficientSchedule& s, double t, double h) {
                const auto d = s.derivatives(t, h);
                return py::make_tuple(d.a_dot, d.b_dot, d.a_ddot, d.b_ddot);
            },
            py::arg("t"), py::arg("h") = 1e-3, "(a', b', a'', b'') at t");

    m.def(
        "curvature",
        [](const CoefficientSchedule& s, const Array& x0, const Array& eps, double t) {
            return curvature(s, to_vector(x0), to_vector(eps), t).kappa;
        },
        py::arg("schedule"), py::arg("x0"), py::arg("eps"), py::arg("t"));

    m.def(
        "schedule_diagnostics",
        [](const CoefficientSchedule& s, std::size_t grid_m, const Array& x0, const Array& eps) {
            const auto d = schedule_diagnostics(s, GridSpec(grid_m), to_matrix(x0), to_matrix(eps));
            py::dict out;
            out["determinant_integral"] = d.determinant_integral;
            out["t"] = d.t;
            out["mean_kappa"] = d.mean_kappa;
            out["determinant"] = d.determinant;
            out["degenerate_points"] = d.degenerate_points;
            return out;
        },
        py::arg("schedule"), py::arg("grid_m"), py::arg("x0"), py::arg("eps"));

    m.def(
        "generate",
        [](const std::string& kind, std::size_t count, std::uint64_t seed, double noise_std) {
            return to_array(generate(DatasetSpec{parse_dataset_kind(kind), count, seed, noise_std}));
        },
        py::arg("kind"), py::arg("count"), py::arg("seed") = 0, py::arg("noise_std") = 0.1);

    m.def(
        "sample_noise",
        [](std::size_t count, std::size_t dim, std::uint64_t seed) { return to_array(sample_noise(count, dim, seed)); },
        py::arg("count"), py::arg("dim") = 2, py::arg("seed") = 0);

    m.def(
        "energy_distance",
        [](const Array& a, const Array& b, std::size_t max_points, std::uint64_t seed) {
            return energy_distance_report(to_matrix(a), to_matrix(b), max_points, seed).value;
        },
        py::arg("a"), py::arg("b"), py::arg("max_points") = kMaxPairwisePoints, py::arg("seed") = 0);

    m.def(
        "sliced_wasserstein",
        [](const Array& a, const Array& b, std::size_t projections, std::uint64_t seed) {
            return sliced_wasserstein(to_matrix(a), to_matrix(b), projections, seed);
        },
        py::arg("a"), py::arg("b"), py::arg("projections") = 128, py::arg("seed") = 0);

    m.def(
        "gradient_check",
        [](std::uint64_t seed) {
            const auto r = run_gradient_check(seed);
            return py::make_tuple(r.max_relative_error, r.worst_parameter, r.passed());
        },
        py::arg("seed") = 0, "(max relative error, worst parameter, passed)");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<const char*> argv{"curveflow"};
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a curveflow subcommand; returns (exit code, stdout, stderr).");
}
