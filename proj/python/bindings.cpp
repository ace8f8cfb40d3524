#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "speckle_cs/errors.hpp"
#include "speckle_cs/experiments.hpp"
#include "speckle_cs/fixtures.hpp"
#include "speckle_cs/forward_model.hpp"
#include "speckle_cs/gan_recon.hpp"
#include "speckle_cs/generator.hpp"
#include "speckle_cs/l1_solver.hpp"
#include "speckle_cs/metrics.hpp"
#include "speckle_cs/speckle.hpp"

namespace py = pybind11;
using namespace speckle_cs;

namespace {

// Images cross the boundary as (height, width) float64 arrays.
RowMajorMatrix to_array(const GrayImage& image) {
    return Eigen::Map<const RowMajorMatrix>(image.pixels().data(), image.height(), image.width());
}

GrayImage to_image(const Eigen::Ref<const RowMajorMatrix>& array) {
    const RowMajorMatrix dense = array;
    return GrayImage(static_cast<int>(dense.cols()), static_cast<int>(dense.rows()),
                     std::vector<double>(dense.data(), dense.data() + dense.size()));
}

BpdnConfig make_bpdn(double delta, int max_outer, int max_inner, double opt_tol, std::optional<double> pareto_tol) {
    BpdnConfig c;
    c.delta = delta;
    c.max_outer = max_outer;
    c.max_inner = max_inner;
    c.opt_tol = opt_tol;
    c.pareto_tol = pareto_tol;
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Compressive speckle imaging core";
    m.attr("__version__") = SPECKLE_CS_VERSION;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
    auto format = py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<MagicError>(m, "MagicError", format.ptr());
    py::register_exception<LengthError>(m, "LengthError", format.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", format.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<ReconstructionError>(m, "ReconstructionError", base.ptr());

    m.def(
        "generate_speckle",
        [](int grid, double nu, std::uint64_t seed) { return to_array(generate_speckle({grid, nu, seed})); },
        py::arg("grid") = kMnistSide, py::arg("nu") = 1.0, py::arg("seed") = 0,
        "Speckle intensity pattern |IFFT(mask * FFT(u))|^2 on a grid x grid lattice.");
    m.def(
        "low_pass",
        [](const Eigen::Ref<const RowMajorMatrix>& image, double nu) { return to_array(low_pass(to_image(image), nu)); },
        py::arg("image"), py::arg("nu"));
    m.def(
        "build_matrix",
        [](int count, double nu, std::uint64_t seed, int grid, int jobs) {
            return build_matrix(count, {grid, nu, seed}, jobs).values;
        },
        py::arg("m"), py::arg("nu"), py::arg("seed") = 0, py::arg("grid") = kMnistSide, py::arg("jobs") = 1,
        "m x grid^2 measurement matrix of flattened speckle patterns.");
    m.def(
        "measure",
        [](const RowMajorMatrix& a, const Eigen::Ref<const RowMajorMatrix>& image) {
            MeasurementMatrix mm;
            mm.values = a;
            return measure(mm, to_image(image)).values;
        },
        py::arg("A"), py::arg("image"));
    m.def(
        "simulate_acquisition",
        [](const Eigen::Ref<const RowMajorMatrix>& truth, int count, double nu, double noise, std::uint64_t seed,
           int jobs) {
            auto acq = simulate_acquisition(to_image(truth), count, nu, noise, seed, jobs);
            return py::make_tuple(acq.matrix.values, acq.signal.values);
        },
        py::arg("truth"), py::arg("m"), py::arg("nu"), py::arg("noise") = 0.0, py::arg("seed") = 0,
        py::arg("jobs") = 1, "Returns (A, y) with noise applied to both.");

    py::class_<BpdnConfig>(m, "BpdnConfig")
        .def(py::init(&make_bpdn), py::arg("delta") = 0.0, py::arg("max_outer") = 40, py::arg("max_inner") = 10000,
             py::arg("opt_tol") = 1e-6, py::arg("pareto_tol") = std::nullopt)
        .def_readwrite("delta", &BpdnConfig::delta)
        .def_readwrite("max_outer", &BpdnConfig::max_outer)
        .def_readwrite("max_inner", &BpdnConfig::max_inner)
        .def_readwrite("opt_tol", &BpdnConfig::opt_tol)
        .def_readwrite("pareto_tol", &BpdnConfig::pareto_tol);

    py::class_<SolveReport>(m, "SolveReport")
        .def_readonly("solution", &SolveReport::solution)
        .def_readonly("residual_norm", &SolveReport::residual_norm)
        .def_readonly("tau", &SolveReport::tau)
        .def_readonly("iterations", &SolveReport::iterations)
        .def_readonly("outer_iterations", &SolveReport::outer_iterations)
        .def_readonly("converged", &SolveReport::converged)
        .def_readonly("objective_trace", &SolveReport::objective_trace);

    m.def("project_l1_ball", &project_l1_ball, py::arg("v"), py::arg("tau"));
    m.def(
        "solve_lasso",
        [](const RowMajorMatrix& a, const Vector& y, double tau, const BpdnConfig& config) {
            py::gil_scoped_release release;
            return solve_lasso(a, y, tau, config);
        },
        py::arg("A"), py::arg("y"), py::arg("tau"), py::arg("config") = BpdnConfig{});
    m.def(
        "solve_bpdn",
        [](const RowMajorMatrix& a, const Vector& y, const BpdnConfig& config) {
            py::gil_scoped_release release;
            return solve_bpdn(a, y, config);
        },
        py::arg("A"), py::arg("y"), py::arg("config") = BpdnConfig{});
    m.def(
        "solve_bp",
        [](const RowMajorMatrix& a, const Vector& y, const BpdnConfig& config) {
            py::gil_scoped_release release;
            return solve_bp(a, y, config);
        },
        py::arg("A"), py::arg("y"), py::arg("config") = BpdnConfig{});

    py::class_<GeneratorModel>(m, "GeneratorModel")
        .def_property_readonly("latent_dim", &GeneratorModel::latent_dim)
        .def_property_readonly("output_size", &GeneratorModel::output_size)
        .def_property_readonly("image_shape",
                               [](const GeneratorModel& g) { return py::make_tuple(g.image_height(), g.image_width()); })
        .def_property_readonly("layer_kinds", [](const GeneratorModel& g) {
            std::vector<std::string> kinds;
            for (const auto& layer : g.layers()) kinds.push_back(layer_kind(layer));
            return kinds;
        });
    m.def("load_model", &load_model, py::arg("path"));
    m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
    m.def("fixture_model", &fixture_model, py::arg("seed") = 20240501, py::arg("latent_dim") = kDefaultLatentDim,
          py::arg("base_channels") = 16);
    m.def(
        "forward", [](const GeneratorModel& g, const Vector& z) { return to_array(forward(g, z)); }, py::arg("model"),
        py::arg("z"), "Generator output in [-1, 1] as an image.");
    m.def(
        "loss_and_gradient",
        [](const GeneratorModel& g, const Vector& z, const RowMajorMatrix& a, const Vector& y) {
            auto lg = loss_and_gradient(g, z, a, y);
            return py::make_tuple(lg.loss, lg.gradient);
        },
        py::arg("model"), py::arg("z"), py::arg("A"), py::arg("y"));

    py::class_<ReconConfig>(m, "ReconConfig")
        .def(py::init<>())
        .def_readwrite("steps", &ReconConfig::steps)
        .def_readwrite("restarts", &ReconConfig::restarts)
        .def_readwrite("lr", &ReconConfig::lr)
        .def_readwrite("beta1", &ReconConfig::beta1)
        .def_readwrite("beta2", &ReconConfig::beta2)
        .def_readwrite("epsilon", &ReconConfig::epsilon)
        .def_readwrite("seed", &ReconConfig::seed)
        .def_readwrite("plateau_stop", &ReconConfig::plateau_stop)
        .def_readwrite("jobs", &ReconConfig::jobs);
    m.def(
        "reconstruct",
        [](const GeneratorModel& g, const RowMajorMatrix& a, const Vector& y, const ReconConfig& config) {
            ReconResult result;
            {
                py::gil_scoped_release release;
                result = reconstruct(g, a, y, config);
            }
            py::dict out;
            out["image"] = to_array(result.image);
            out["latent"] = result.latent;
            out["best_loss"] = result.best_loss;
            out["best_restart"] = result.best_restart;
            out["restart_losses"] = result.restart_losses;
            out["loss_trace"] = result.loss_trace;
            out["warnings"] = result.warnings;
            return out;
        },
        py::arg("model"), py::arg("A"), py::arg("y"), py::arg("config") = ReconConfig{},
        "Multi-restart Adam search over the latent space; image is (G(z)+1)/2.");

    m.def(
        "pearson", [](const Vector& a, const Vector& b) { return pearson(a, b); }, py::arg("a"), py::arg("b"),
        "Pearson correlation of two flattened arrays; None when either is constant.");
    m.def(
        "synthetic_digit", [](int digit, std::uint64_t seed) { return to_array(synthetic_digit(digit, seed)); },
        py::arg("digit"), py::arg("seed") = 0);
    m.def(
        "aggregate",
        [](const std::vector<py::dict>& rows) {
            std::vector<CorrelationRecord> records;
            for (const auto& row : rows) {
                CorrelationRecord rec;
                rec.nu = row["nu"].cast<double>();
                rec.m = row["m"].cast<int>();
                rec.noise = row["noise"].cast<double>();
                rec.method = parse_method(row["method"].cast<std::string>());
                rec.r = row["r"].cast<std::optional<double>>();
                records.push_back(rec);
            }
            py::list out;
            for (const auto& a : aggregate(records)) {
                py::dict d;
                d["nu"] = a.nu;
                d["m"] = a.m;
                d["noise"] = a.noise;
                d["method"] = to_string(a.method);
                d["mean_r"] = a.mean;
                d["std_r"] = a.stddev;
                d["count"] = a.count;
                d["undefined"] = a.undefined;
                out.append(d);
            }
            return out;
        },
        py::arg("records"), "Mean and population std of r per (nu, m, noise, method); r=None rows are excluded.");
}
