#include "cutlocus/cdc_tracer.hpp"
#include "cutlocus/conjugate_analysis.hpp"
#include "cutlocus/jobs.hpp"
#include "cutlocus/manifolds.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace cutlocus;

namespace {

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::vector<double> from_vec(const Vec& v) { return {v.data(), v.data() + v.size()}; }

std::string run(const std::string& job_json, int threads, double tol) {
  const JobSpec job = parse_job(nlohmann::json::parse(job_json));
  RunSettings s;
  s.threads = threads;
  s.tol = tol;
  JobOutcome o;
  {
    py::gil_scoped_release nogil;
    o = run_job(job, s);
  }
  return nlohmann::json{{"command", job.command}, {"artifacts", o.artifacts}, {"summary", o.summary}}.dump();
}

double lambda1(const std::string& manifold_json, const std::vector<double>& source, double theta, double t_max) {
  auto m = manifold_from_json(nlohmann::json::parse(manifold_json));
  PointRayFamily fam(m, m->project(to_vec(source)));
  return lambda_k(fam, Vec::Constant(1, theta), 1, t_max).value;
}

py::dict trace(const std::string& form, const std::vector<double>& start) {
  auto map = canonical_form_map(canonical_form_from_string(form));
  const CDCurve c = trace_cdc(*map, to_vec(start));
  std::vector<std::vector<double>> pts;
  for (const auto& s : c.samples) pts.push_back(from_vec(s.x));
  py::dict d;
  d["points"] = pts;
  d["stop"] = to_string(c.stop);
  d["radius_drop"] = c.radius_drop();
  d["image_length"] = c.image_length;
  return d;
}

py::dict d4(double a, double b, const std::string& kind) {
  const D4Roots r = d4_root_analysis(a, b, d4_kind_from_string(kind));
  py::dict d;
  d["roots"] = r.roots;
  d["coefficients"] = r.coefficients;
  d["chamber"] = r.chamber;
  d["placement_ok"] = r.placement_ok;
  return d;
}

}  // namespace

PYBIND11_MODULE(_cutlocus, m) {
  m.doc() = "Cut loci, conjugate loci and CDC tracing";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
  static py::exception<DomainError> domain(m, "DomainError", base.ptr());
  static py::exception<CompatibilityError> compat(m, "CompatibilityError", base.ptr());
  static py::exception<UnsupportedError> unsupported(m, "UnsupportedError", base.ptr());
  static py::exception<NumericalError> numerical(m, "NumericalError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config, e.what());
    } catch (const DomainError& e) {
      py::set_error(domain, e.what());
    } catch (const CompatibilityError& e) {
      py::set_error(compat, e.what());
    } catch (const UnsupportedError& e) {
      py::set_error(unsupported, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    } catch (const nlohmann::json::exception& e) {
      py::set_error(config, e.what());
    }
  });

  m.def("_run_job", &run, py::arg("job_json"), py::arg("threads") = 0, py::arg("tol") = 0.0);
  m.def("_lambda1", &lambda1, py::arg("manifold_json"), py::arg("source"), py::arg("theta"), py::arg("t_max"));
  m.def("trace_cdc", &trace, py::arg("form"), py::arg("start"),
        "Trace a conjugate descending curve of a canonical model (A2, A3, D4_minus, ...).");
  m.def("d4_roots", &d4, py::arg("a"), py::arg("b"), py::arg("kind") = "minus");
  m.def("job_commands", &job_commands);
}
