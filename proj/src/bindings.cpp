#include "spde/analysis.hpp"
#include "spde/config.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace spde;

namespace {

Field field_from(const SpaceGrid& g, const Eigen::VectorXd& v) {
    if (v.size() != g.n_cells + 1) throw std::invalid_argument("field size mismatch");
    Field f = Field::zero(g);
    f.values = v;
    return f;
}

} // namespace

PYBIND11_MODULE(_spde, m) {
    m.doc() = "SPDE simulation and verification toolkit";
    m.attr("__version__") = "0.1.0";

    py::class_<SpaceGrid>(m, "SpaceGrid")
        .def(py::init(&SpaceGrid::make), py::arg("n_cells"))
        .def_readonly("n_cells", &SpaceGrid::n_cells)
        .def_readonly("h", &SpaceGrid::h)
        .def_readonly("nodes", &SpaceGrid::nodes);

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init(&TimeGrid::make), py::arg("T"), py::arg("m_steps"))
        .def_readonly("T", &TimeGrid::T)
        .def_readonly("m_steps", &TimeGrid::m_steps)
        .def_readonly("dt", &TimeGrid::dt)
        .def_readonly("times", &TimeGrid::times);

    py::class_<OperatorFamily>(m, "OperatorFamily")
        .def_static("constant_laplacian", &OperatorFamily::constant_laplacian,
                    py::arg("diff") = 1.0, py::arg("a0") = 0.0)
        .def_static("linear_in_time", &OperatorFamily::linear_in_time, py::arg("rate"),
                    py::arg("a0") = 0.0)
        .def_static("perturbed_cosine", &OperatorFamily::perturbed_cosine, py::arg("eps"),
                    py::arg("a0") = 0.0)
        .def_readwrite("mu", &OperatorFamily::mu)
        .def_readwrite("w", &OperatorFamily::w);

    m.def("quad_weights", &quad_weights, py::arg("grid"));
    m.def(
        "lp_norm",
        [](const SpaceGrid& g, const Eigen::VectorXd& v, double p) {
            return lp_norm(field_from(g, v), p);
        },
        py::arg("grid"), py::arg("values"), py::arg("p"));
    m.def(
        "sobolev1_norm",
        [](const SpaceGrid& g, const Eigen::VectorXd& v) {
            return sobolev1_norm(field_from(g, v));
        },
        py::arg("grid"), py::arg("values"));

    m.def(
        "assemble",
        [](const OperatorFamily& fam, const SpaceGrid& g, double t) {
            return assemble(fam, g, t).matrix;
        },
        py::arg("family"), py::arg("grid"), py::arg("t"),
        "Nodal finite-difference matrix of A(t)");
    m.def(
        "eigenvalues",
        [](const OperatorFamily& fam, const SpaceGrid& g, double t) {
            return spectrum(assemble(fam, g, t)).eigenvalues;
        },
        py::arg("family"), py::arg("grid"), py::arg("t"));
    m.def(
        "frac_power_apply",
        [](const OperatorFamily& fam, const SpaceGrid& g, double t, double theta, double w,
           const Eigen::VectorXd& v) {
            auto op = assemble(fam, g, t);
            return Eigen::VectorXd(frac_power(op, theta, w).matrix * v);
        },
        py::arg("family"), py::arg("grid"), py::arg("t"), py::arg("theta"), py::arg("w"),
        py::arg("values"));

    py::enum_<Scheme>(m, "Scheme")
        .value("BackwardEuler", Scheme::BackwardEuler)
        .value("CrankNicolson", Scheme::CrankNicolson);

    py::class_<EvolutionFamily>(m, "EvolutionFamily")
        .def(py::init<OperatorFamily, SpaceGrid, TimeGrid, Scheme, int>(), py::arg("family"),
             py::arg("grid"), py::arg("tgrid"), py::arg("scheme") = Scheme::BackwardEuler,
             py::arg("substeps") = 4)
        .def(
            "apply",
            [](const EvolutionFamily& ef, double t, double s, const Eigen::VectorXd& v) {
                return Eigen::VectorXd(ef.apply(t, s, field_from(ef.grid(), v)).values);
            },
            py::arg("t"), py::arg("s"), py::arg("values"), "P(t,s) x")
        .def(
            "cocycle_defect",
            [](const EvolutionFamily& ef, double t, double r, double s,
               const Eigen::VectorXd& v) {
                return ef.cocycle_defect(t, r, s, field_from(ef.grid(), v));
            },
            py::arg("t"), py::arg("r"), py::arg("s"), py::arg("values"));

    py::class_<NoiseModel>(m, "NoiseModel")
        .def_readonly("lambdas", &NoiseModel::lambdas)
        .def_property_readonly("n_modes", &NoiseModel::n_modes)
        .def("to_json", &NoiseModel::to_json);
    m.def("make_model", &make_model, py::arg("gamma"), py::arg("N"), py::arg("grid"));
    m.def(
        "sample_increments",
        [](const NoiseModel& nm, const TimeGrid& tg, std::uint64_t seed) {
            return sample(nm, tg, seed).increments;
        },
        py::arg("model"), py::arg("tgrid"), py::arg("seed"),
        "N(0,dt) increment matrix, one row per mode");
    m.def("counter_gauss", &counter_gauss, py::arg("seed"), py::arg("stream"),
          py::arg("counter"));

    m.def(
        "run_scenario",
        [](const std::string& config_text) {
            Scenario sc;
            try {
                sc = parse_scenario(config_text);
            } catch (const std::runtime_error& e) {
                throw std::invalid_argument(e.what());
            }
            return run_ensemble(sc.build()).to_json();
        },
        py::arg("config_text"),
        "Parse a scenario config, run it with its configured checks, return the report JSON");
    m.def(
        "validate_scenario",
        [](const std::string& config_text) {
            Scenario sc;
            try {
                sc = parse_scenario(config_text);
            } catch (const std::runtime_error& e) {
                throw std::invalid_argument(e.what());
            }
            (void)sc.build();
        },
        py::arg("config_text"), "Raise on any hypothesis or grammar violation");
}
