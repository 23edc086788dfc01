#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "bubblelab/cli.hpp"
#include "bubblelab/concentration.hpp"
#include "bubblelab/lorentz.hpp"
#include "bubblelab/monotonicity.hpp"

namespace py = pybind11;
using namespace bubblelab;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Critical-exponent bubble diagnostics";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_ArithmeticError);

  m.def("set_threads", &parallel::set_threads, py::arg("count"));
  m.def("critical_exponent", &critical_exponent, py::arg("n"));

  py::enum_<DerivativeMode>(m, "DerivativeMode")
      .value("Auto", DerivativeMode::Auto)
      .value("Analytic", DerivativeMode::Analytic)
      .value("FiniteDifference", DerivativeMode::FiniteDifference);
  py::enum_<Formulation>(m, "Formulation")
      .value("A", Formulation::A)
      .value("B", Formulation::B)
      .value("C", Formulation::C);

  py::class_<Bubble>(m, "Bubble")
      .def(py::init<Point, double, int>(), py::arg("center"), py::arg("scale") = 1.0,
           py::arg("sign") = 1)
      .def_readwrite("center", &Bubble::center)
      .def_readwrite("scale", &Bubble::scale)
      .def_readwrite("sign", &Bubble::sign);

  py::class_<ScalarField>(m, "ScalarField")
      .def_property_readonly("dimension", &ScalarField::dimension)
      .def_property_readonly("kind", [](const ScalarField& u) { return to_string(u.kind()); })
      .def("__call__", [](const ScalarField& u, const Point& x) { return u(x); })
      .def("gradient", [](const ScalarField& u, const Point& x) { return gradient(u, x); },
           py::arg("x"))
      .def("laplacian", [](const ScalarField& u, const Point& x) { return laplacian(u, x); },
           py::arg("x"));

  m.def("aubin_talenti", py::overload_cast<int, double, const Point&, int>(&aubin_talenti),
        py::arg("n"), py::arg("delta"), py::arg("center"), py::arg("sign") = 1);
  m.def("aubin_talenti", py::overload_cast<int, double>(&aubin_talenti), py::arg("n"),
        py::arg("delta") = 1.0);
  m.def("superpose", &superpose, py::arg("n"), py::arg("bubbles"));
  m.def("constant_field", &constant_field, py::arg("n"), py::arg("c"));
  m.def("zero_field", &zero_field, py::arg("n"));
  m.def("combine", &combine, py::arg("a"), py::arg("alpha"), py::arg("b"), py::arg("beta"));
  m.def("rescale", &rescale, py::arg("u"), py::arg("y"), py::arg("delta"));

  m.def("pde_residual",
        [](const ScalarField& u, const Point& x, double h, DerivativeMode mode) {
          return pde_residual(u, x, h, mode);
        },
        py::arg("u"), py::arg("x"), py::arg("h") = 0.0, py::arg("mode") = DerivativeMode::Auto);

  py::class_<PohozaevBreakdown>(m, "PohozaevBreakdown")
      .def_readonly("terms", &PohozaevBreakdown::terms)
      .def_readonly("residual", &PohozaevBreakdown::residual)
      .def_readonly("relative", &PohozaevBreakdown::relative)
      .def_readonly("printed_residual", &PohozaevBreakdown::printed_residual);
  m.def("pohozaev_residual",
        [](const ScalarField& u, const Point& x, double r) { return pohozaev_residual(u, x, r); },
        py::arg("u"), py::arg("x"), py::arg("r"));

  m.def("energy_E",
        [](const ScalarField& u, const Point& x, double r, Formulation f) {
          return energy_E(u, x, r, f);
        },
        py::arg("u"), py::arg("x"), py::arg("r"), py::arg("formulation") = Formulation::B);
  m.def(
      "monotonicity_profile",
      [](const ScalarField& u, const Point& x, double rmin, double rmax, int count) {
        const MonotonicityProfile p = profile(u, x, RadialGrid::log_spaced(rmin, rmax, count));
        py::dict d;
        d["radii"] = p.radii.radii;
        d["E"] = p.values;
        d["monotone"] = check_monotone(p).passed();
        d["nonnegative"] = check_positive(p).passed();
        return d;
      },
      py::arg("u"), py::arg("x"), py::arg("rmin") = 0.05, py::arg("rmax") = 5.0,
      py::arg("count") = 40);

  py::class_<LorentzIndex>(m, "LorentzIndex")
      .def(py::init<double, double>(), py::arg("p"), py::arg("q"))
      .def_static("weak", &LorentzIndex::weak, py::arg("p"))
      .def_readwrite("p", &LorentzIndex::p)
      .def_readwrite("q", &LorentzIndex::q);
  m.def(
      "lorentz_norm",
      [](const std::vector<double>& values, const std::vector<double>& measures, LorentzIndex idx) {
        SampledFunction f;
        f.values = values;
        f.measures = measures;
        return lorentz_norm(f, idx);
      },
      py::arg("values"), py::arg("measures"), py::arg("index"));
  m.def(
      "rearrange",
      [](const std::vector<double>& values, const std::vector<double>& measures) {
        SampledFunction f;
        f.values = values;
        f.measures = measures;
        const RearrangementTable t = rearrange(f);
        return py::make_tuple(t.breakpoints, t.levels);
      },
      py::arg("values"), py::arg("measures"));

  py::class_<BubbleConstant>(m, "BubbleConstant")
      .def_readonly("dimension", &BubbleConstant::dimension)
      .def_readonly("value", &BubbleConstant::value)
      .def_readonly("error_bound", &BubbleConstant::error_bound)
      .def_readonly("points", &BubbleConstant::points);
  m.def("bubble_constant", &bubble_constant, py::arg("n"), py::arg("points") = 128);
  m.def("standard_ball_energy", &standard_ball_energy, py::arg("n"), py::arg("radius"));
  m.def("scaled_measure", &scaled_measure, py::arg("u"), py::arg("y"), py::arg("lam"),
        py::arg("r"));

  py::class_<ScaleSchedule>(m, "ScaleSchedule")
      .def(py::init<double, double>(), py::arg("amplitude") = 1.0, py::arg("base") = 4.0)
      .def("at", &ScaleSchedule::at, py::arg("k"));
  py::class_<SequenceEntry>(m, "SequenceEntry")
      .def(py::init<Point, ScaleSchedule, int>(), py::arg("center"),
           py::arg("schedule") = ScaleSchedule{}, py::arg("sign") = 1);
  py::class_<ConcentrationSequence>(m, "ConcentrationSequence")
      .def_readonly("dimension", &ConcentrationSequence::dimension)
      .def_readonly("measured_budget", &ConcentrationSequence::measured_budget)
      .def("field", &ConcentrationSequence::field, py::arg("k"));
  m.def(
      "make_sequence",
      [](int n, std::vector<SequenceEntry> entries, double budget) {
        return make_sequence(n, std::move(entries), budget);
      },
      py::arg("n"), py::arg("entries"),
      py::arg("budget") = std::numeric_limits<double>::infinity());
  m.def(
      "neck_energy",
      [](const ConcentrationSequence& seq, int k, double R, double outer) {
        return neck_energy(seq, k, R, outer).total;
      },
      py::arg("seq"), py::arg("k"), py::arg("R"), py::arg("outer") = 0.5);
  m.def(
      "quantization_report",
      [](const ConcentrationSequence& seq) {
        const DefectReport rep = quantization_report(seq);
        py::list points;
        for (const PointReport& p : rep.points) {
          py::dict d;
          d["x"] = p.x;
          d["n_hat"] = p.n_hat;
          d["ratio"] = p.ratio;
          d["bubbles"] = p.inventory.size();
          points.append(d);
        }
        py::dict out;
        out["lambda0"] = rep.lambda0.value;
        out["epsilon0"] = rep.epsilon0;
        out["points"] = points;
        return out;
      },
      py::arg("seq"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
