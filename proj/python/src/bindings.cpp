#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "oscgap/error.hpp"
#include "oscgap/frequencies.hpp"
#include "oscgap/lab.hpp"
#include "oscgap/spectral.hpp"
#include "oscgap/symbols.hpp"

namespace py = pybind11;
using namespace oscgap;
using nlohmann::json;

namespace {

py::object to_python(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_python(const py::handle& obj) {
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

lab::Scenario scenario_of(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) return lab::load_scenario(obj.cast<std::string>());
  if (py::isinstance<py::dict>(obj)) return lab::scenario_from_json(from_python(obj));
  throw py::type_error("scenario must be a built-in name, a file path or a dict");
}

PhasePoint point_of(const std::vector<double>& z) {
  if (z.size() % 2 != 0) throw DomainError("phase point needs interleaved (x, xi) pairs");
  return PhasePoint(z);
}

std::string repr(const WickSymbol& a) {
  std::ostringstream os;
  os << "WickSymbol(dim=" << a.dim() << ", terms=" << a.size() << ", degree=" << a.degree() << ")";
  return os.str();
}

py::list terms_of(const WickSymbol& a) {
  py::list out;
  for (const auto& [k, c] : a.terms()) {
    std::vector<int> alpha(k.begin(), k.begin() + a.dim()), beta(k.begin() + a.dim(), k.end());
    out.append(py::make_tuple(alpha, beta, c));
  }
  return out;
}

py::dict module_info(const ResonanceModule& m) {
  py::dict d;
  d["dim"] = m.dim;
  d["rank"] = m.rank();
  d["d_omega"] = m.d_omega();
  d["basis"] = m.basis_ll();
  d["approximate"] = m.approximate;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral gaps of damped perturbed harmonic oscillators";
  m.attr("__version__") = lab::kToolVersion;

  static py::exception<Error> base(m, "OscgapError", PyExc_RuntimeError);
  static py::exception<DomainError> domain(m, "DomainError", base.ptr());
  static py::exception<ScenarioError> scenario(m, "ScenarioError", base.ptr());
  static py::exception<NumericError> numeric(m, "NumericError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DomainError& e) {
      PyErr_SetString(domain.ptr(), e.what());
    } catch (const ScenarioError& e) {
      PyErr_SetString(scenario.ptr(), e.what());
    } catch (const NumericError& e) {
      PyErr_SetString(numeric.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), e.what());
    }
  });

  py::class_<WickSymbol>(m, "WickSymbol", "Polynomial symbol in zeta and zeta-bar with complex coefficients")
      .def(py::init<int>(), py::arg("dim"))
      .def_static("constant", &WickSymbol::constant, py::arg("dim"), py::arg("c"))
      .def_static("monomial", &WickSymbol::monomial, py::arg("alpha"), py::arg("beta"), py::arg("c") = Complex(1.0))
      .def_static("zeta", &WickSymbol::zeta, py::arg("dim"), py::arg("j"))
      .def_static("zeta_bar", &WickSymbol::zeta_bar, py::arg("dim"), py::arg("j"))
      .def_static(
          "harmonic",
          [](const std::vector<double>& omega) {
            return WickSymbol::harmonic(std::vector<Complex>(omega.begin(), omega.end()));
          },
          py::arg("omega"))
      .def_property_readonly("dim", &WickSymbol::dim)
      .def_property_readonly("degree", &WickSymbol::degree)
      .def("is_zero", &WickSymbol::is_zero)
      .def("is_real", [](const WickSymbol& a, double tol) { return a.is_real_approx(tol); }, py::arg("tol") = 1e-12)
      .def("coefficient", &WickSymbol::coefficient, py::arg("alpha"), py::arg("beta"))
      .def("terms", &terms_of, "List of (alpha, beta, coefficient)")
      .def("l1_norm", &WickSymbol::l1_norm)
      .def("conj", &WickSymbol::conj)
      .def("__call__", [](const WickSymbol& a, const std::vector<double>& z) { return a.eval(point_of(z)); },
           py::arg("z"), "Evaluate at interleaved (x1, xi1, x2, xi2, ...)")
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(py::self * py::self)
      .def(py::self * Complex())
      .def(Complex() * py::self)
      .def(-py::self)
      .def("__repr__", &repr);

  m.def("poisson", [](const WickSymbol& a, const WickSymbol& b) { return poisson(a, b); }, py::arg("a"), py::arg("b"),
        "Poisson bracket {a, b} = d_xi a d_x b - d_x a d_xi b");
  m.def("moyal", [](const WickSymbol& a, const WickSymbol& b, double h) { return moyal(a, b, Complex(h)); },
        py::arg("a"), py::arg("b"), py::arg("hbar"), "Weyl-Moyal product a # b");
  m.def("resonance_module",
        [](const std::vector<std::string>& omega) { return module_info(resonance_module(FrequencyVector::parse(omega))); },
        py::arg("omega"), "Resonance module of a frequency vector given as exact strings");
  m.def(
      "average",
      [](const WickSymbol& a, const std::vector<std::string>& omega) {
        return average(a, resonance_module(FrequencyVector::parse(omega)));
      },
      py::arg("a"), py::arg("omega"), "Flow average of a along the oscillator with frequencies omega");

  m.def(
      "windowed_spectrum",
      [](const WickSymbol& V, const WickSymbol& A, const std::vector<double>& omega, double hbar, double delta,
         double E, double W) {
        const auto H = WickSymbol::harmonic(std::vector<Complex>(omega.begin(), omega.end()));
        const auto rec = windowed_spectrum(H, V, A, omega, hbar, delta, E, W);
        const auto n = static_cast<Eigen::Index>(rec.entries.size());
        Eigen::VectorXcd lam(n);
        Eigen::VectorXd alpha(n), beta(n);
        std::vector<bool> edge;
        for (Eigen::Index i = 0; i < n; ++i) {
          const auto& e = rec.entries[static_cast<std::size_t>(i)];
          lam(i) = e.lambda;
          alpha(i) = e.alpha;
          beta(i) = e.beta;
          edge.push_back(e.edge_flag);
        }
        py::dict d;
        d["hbar"] = rec.hbar;
        d["delta"] = rec.delta;
        d["basis"] = rec.basis;
        d["max_residual"] = rec.max_residual;
        d["eigenvalues"] = lam;
        d["alpha"] = alpha;
        d["beta"] = beta;
        d["edge"] = edge;
        return d;
      },
      py::arg("V"), py::arg("A"), py::arg("omega"), py::arg("hbar"), py::arg("delta"), py::arg("E") = 1.0,
      py::arg("W") = 0.25, "Eigenvalues of Op(H) + delta Op(V) + i hbar Op(A) near the energy E");

  m.def("builtin_names", &lab::builtin_names);
  m.def("load_scenario", [](const py::object& s) { return to_python(lab::to_json(scenario_of(s))); },
        py::arg("scenario"), "Canonical dict of a built-in name, file path or dict");
  m.def("scenario_hash", [](const py::object& s) { return lab::scenario_hash(scenario_of(s)); }, py::arg("scenario"));
  m.def(
      "run",
      [](const py::object& s, const std::vector<std::string>& only, bool use_cache,
         const std::optional<std::filesystem::path>& out_dir, const std::string& format, int threads) {
        const lab::Scenario sc = scenario_of(s);
        lab::RunOptions opts;
        opts.use_cache = use_cache;
        opts.only = only;
        opts.threads = threads;
        lab::RunManifest manifest;
        {
          py::gil_scoped_release release;
          manifest = lab::run_pipeline(sc, opts);
          if (out_dir) lab::emit(manifest, *out_dir, format);
        }
        json stages = json::object();
        for (const auto& st : manifest.stages)
          stages[st.name] = {{"status", st.status}, {"error", st.error}, {"digest", st.digest}, {"output", st.output}};
        py::dict d;
        d["summary"] = to_python(lab::summary(manifest));
        d["stages"] = to_python(stages);
        d["complete"] = manifest.complete();
        return d;
      },
      py::arg("scenario"), py::arg("only") = std::vector<std::string>{}, py::arg("use_cache") = false,
      py::arg("out_dir") = std::nullopt, py::arg("format") = "csv", py::arg("threads") = 1,
      "Run the pipeline stages; returns the summary and every stage output");
  m.def("verify_manifest", [](const std::filesystem::path& dir) {
    std::string problem;
    const bool ok = lab::verify_manifest(dir, &problem);
    return py::make_tuple(ok, problem);
  });
}
