#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "fdpband/diagnostics.hpp"
#include "fdpband/envelope.hpp"
#include "fdpband/fdp.hpp"
#include "fdpband/io.hpp"
#include "fdpband/selection.hpp"
#include "fdpband/simulate.hpp"

namespace py = pybind11;
using namespace fdpband;

namespace {

std::vector<std::vector<double>> matrix_rows(const UniformSampleMatrix& m) {
  std::vector<std::vector<double>> out(m.rows());
  for (std::size_t b = 0; b < m.rows(); ++b)
    out[b].assign(m.row(b).begin(), m.row(b).end());
  return out;
}

}  // namespace

PYBIND11_MODULE(_fdpband, m) {
  m.doc() =
      "Simultaneous FDP/FCP upper bounds for conformal p-values via Monte "
      "Carlo envelope calibration";

  py::register_exception<config_error>(m, "ConfigError");
  py::register_exception<data_error>(m, "DataError");
  py::register_exception<numeric_error>(m, "NumericError");

  py::enum_<SampleMode>(m, "SampleMode")
      .value("Conformal", SampleMode::Conformal)
      .value("IidUniform", SampleMode::IidUniform);
  py::enum_<StatKind>(m, "StatKind")
      .value("KS", StatKind::KS)
      .value("HC", StatKind::HC)
      .value("THC", StatKind::THC)
      .value("BJ", StatKind::BJ)
      .value("Pointwise", StatKind::Pointwise);
  py::enum_<Direction>(m, "Direction")
      .value("Upper", Direction::Upper)
      .value("Lower", Direction::Lower);
  py::enum_<Scale>(m, "Scale")
      .value("Proportion", Scale::Proportion)
      .value("Count", Scale::Count);

  py::class_<SamplerConfig>(m, "SamplerConfig")
      .def(py::init([](std::size_t n, std::size_t m_, std::size_t B,
                       std::uint64_t seed, SampleMode mode) {
             return SamplerConfig{n, m_, B, seed, mode};
           }),
           py::arg("n"), py::arg("m"), py::arg("B"), py::arg("seed") = 0,
           py::arg("mode") = SampleMode::Conformal)
      .def_readwrite("n", &SamplerConfig::n)
      .def_readwrite("m", &SamplerConfig::m)
      .def_readwrite("B", &SamplerConfig::B)
      .def_readwrite("seed", &SamplerConfig::seed)
      .def_readwrite("mode", &SamplerConfig::mode);

  py::class_<UniformSampleMatrix>(m, "UniformSampleMatrix")
      .def_property_readonly("rows", &UniformSampleMatrix::rows)
      .def_property_readonly("cols", &UniformSampleMatrix::cols)
      .def("at", &UniformSampleMatrix::at, py::arg("b"), py::arg("j"))
      .def("row",
           [](const UniformSampleMatrix& self, std::size_t b) {
             return std::vector<double>(self.row(b).begin(),
                                        self.row(b).end());
           })
      .def("to_list", &matrix_rows);

  m.def("sample_conformal", &sample_conformal, py::arg("config"));
  m.def("sample_iid", &sample_iid, py::arg("config"));

  py::class_<SummaryStatisticSpec>(m, "SummaryStatisticSpec")
      .def_readwrite("kind", &SummaryStatisticSpec::kind)
      .def_readwrite("ell", &SummaryStatisticSpec::ell)
      .def_readwrite("r", &SummaryStatisticSpec::r)
      .def_readwrite("beta", &SummaryStatisticSpec::beta)
      .def_readwrite("t0", &SummaryStatisticSpec::t0)
      .def_static("ks", &SummaryStatisticSpec::ks)
      .def_static("hc", &SummaryStatisticSpec::hc, py::arg("beta") = 0.5)
      .def_static("thc", &SummaryStatisticSpec::thc, py::arg("ell") = 0.01,
                  py::arg("r") = 0.99, py::arg("beta") = 0.5)
      .def_static("bj", &SummaryStatisticSpec::bj)
      .def_static("pointwise", &SummaryStatisticSpec::pointwise, py::arg("t0"),
                  py::arg("beta") = 0.5);

  m.def("ks_statistic", [](std::vector<double> values) {
    return ks_statistic(EcdfCurve(std::move(values)));
  });
  m.def(
      "thc_statistic",
      [](std::vector<double> values, const SummaryStatisticSpec& spec) {
        return thc_statistic(EcdfCurve(std::move(values)), spec);
      },
      py::arg("values"), py::arg("spec"));
  m.def(
      "bj_statistic",
      [](std::vector<double> values, bool one_sided) {
        return bj_statistic(EcdfCurve(std::move(values)), one_sided);
      },
      py::arg("values"), py::arg("one_sided") = false);
  m.def(
      "pointwise_statistic",
      [](std::vector<double> values, double t0, double mu0, double sigma0) {
        return pointwise_statistic(EcdfCurve(std::move(values)), t0, mu0,
                                   sigma0);
      },
      py::arg("values"), py::arg("t0"), py::arg("mu0"), py::arg("sigma0"));

  py::class_<EnvelopeFunction>(m, "EnvelopeFunction")
      .def("eval", &EnvelopeFunction::eval, py::arg("t"))
      .def("mono_eval", &EnvelopeFunction::mono_eval, py::arg("t"))
      .def("sigma", &EnvelopeFunction::sigma, py::arg("t"))
      .def_property_readonly("cutoff", &EnvelopeFunction::cutoff)
      .def_property_readonly("direction", &EnvelopeFunction::direction)
      .def_property_readonly("n", &EnvelopeFunction::n)
      .def_property_readonly("m", &EnvelopeFunction::m)
      .def_property_readonly("delta", &EnvelopeFunction::delta)
      .def("to_json",
           [](const EnvelopeFunction& self) { return self.to_json().dump(); })
      .def_static("from_json", [](const std::string& text) {
        return EnvelopeFunction::from_json(nlohmann::json::parse(text));
      });

  py::class_<EnvelopeFamily>(m, "EnvelopeFamily")
      .def_property_readonly("m", &EnvelopeFamily::m)
      .def_property_readonly("n", &EnvelopeFamily::n)
      .def_property_readonly("delta", &EnvelopeFamily::delta)
      .def_property_readonly("cutoffs", &EnvelopeFamily::cutoffs)
      .def("member", &EnvelopeFamily::member, py::arg("r"),
           py::return_value_policy::reference_internal)
      .def("count_bound", &EnvelopeFamily::count_bound, py::arg("r"),
           py::arg("t"))
      .def("count_bound_mono", &EnvelopeFamily::count_bound_mono, py::arg("r"),
           py::arg("t"))
      .def("to_json",
           [](const EnvelopeFamily& self) { return self.to_json().dump(); })
      .def_static("from_json", [](const std::string& text) {
        return EnvelopeFamily::from_json(nlohmann::json::parse(text));
      });

  m.def("calibrate_cutoff", &calibrate_cutoff, py::arg("samples"),
        py::arg("spec"), py::arg("delta"),
        py::arg("direction") = Direction::Upper);
  m.def("build_envelope", &build_envelope, py::arg("cutoff"), py::arg("spec"),
        py::arg("n"), py::arg("m"), py::arg("delta"),
        py::arg("direction") = Direction::Upper,
        py::arg("mode") = SampleMode::Conformal, py::arg("B_used") = 0,
        py::arg("seed") = 0);
  m.def("calibrate_family", &calibrate_family, py::arg("samples"),
        py::arg("spec"), py::arg("delta"),
        py::arg("direction") = Direction::Upper);

  py::class_<PValueVector>(m, "PValueVector")
      .def(py::init([](std::vector<double> p, std::size_t n,
                       std::optional<std::vector<std::uint8_t>> mask,
                       bool jitter_ties) {
             return PValueVector::create(std::move(p), n, std::move(mask),
                                         jitter_ties);
           }),
           py::arg("p"), py::arg("n"), py::arg("null_mask") = py::none(),
           py::arg("jitter_ties") = false)
      .def_readonly("p", &PValueVector::p)
      .def_readonly("null_mask", &PValueVector::null_mask)
      .def_readonly("n", &PValueVector::n)
      .def_property_readonly("m", &PValueVector::m);

  py::class_<FdpBoundCurve>(m, "FdpBoundCurve")
      .def_readonly("eval_points", &FdpBoundCurve::eval_points)
      .def_readonly("rejections", &FdpBoundCurve::rejections)
      .def_readonly("bound_naive", &FdpBoundCurve::bound_naive)
      .def_readonly("bound_refined", &FdpBoundCurve::bound_refined)
      .def_readonly("bound_combined", &FdpBoundCurve::bound_combined)
      .def_readonly("fdp_true", &FdpBoundCurve::fdp_true)
      .def_readonly("mhat0", &FdpBoundCurve::mhat0)
      .def_readonly("delta", &FdpBoundCurve::delta);

  m.def("make_eval_grid",
        [](const std::vector<double>& p, std::size_t points) {
          return make_eval_grid(p, points);
        },
        py::arg("pvalues"), py::arg("uniform_points") = 512);
  m.def("fdp_naive",
        [](const PValueVector& p, const EnvelopeFunction& G,
           const std::vector<double>& grid) { return fdp_naive(p, G, grid); },
        py::arg("p"), py::arg("envelope"), py::arg("grid"));
  m.def("self_refine",
        [](const PValueVector& p, const std::function<double(double)>& fn,
           const std::vector<double>& grid) {
          return self_refine(p, fn, grid);
        },
        py::arg("p"), py::arg("count_bound"), py::arg("grid"));
  m.def("estimate_m0", &estimate_m0, py::arg("p"), py::arg("family"));
  m.def("fdp_combined",
        [](const PValueVector& p, const EnvelopeFamily& family,
           const std::vector<double>& grid) {
          return fdp_combined(p, family, grid);
        },
        py::arg("p"), py::arg("family"), py::arg("grid"));
  m.def("fdp_single_envelope",
        [](const PValueVector& p, const EnvelopeFunction& G,
           const std::vector<double>& grid, bool refine) {
          return fdp_single_envelope(p, G, grid, refine);
        },
        py::arg("p"), py::arg("envelope"), py::arg("grid"),
        py::arg("refine") = true);

  py::class_<SelectionProblem>(m, "SelectionProblem")
      .def(py::init([](std::vector<std::vector<double>> calib,
                       std::vector<std::vector<double>> test,
                       std::optional<std::vector<double>> truth,
                       std::uint64_t seed) {
             SelectionProblem problem;
             for (const auto& row : calib) {
               if (row.size() != 3)
                 throw data_error("calib rows must be [muhat, y, c]");
               problem.calib.push_back({row[0], row[1], row[2]});
             }
             for (const auto& row : test) {
               if (row.size() != 2)
                 throw data_error("test rows must be [muhat, c]");
               problem.test.push_back({row[0], row[1]});
             }
             problem.test_truth = std::move(truth);
             problem.seed = seed;
             problem.validate();
             return problem;
           }),
           py::arg("calib"), py::arg("test"), py::arg("test_truth") = py::none(),
           py::arg("seed") = 0)
      .def_property_readonly("n", &SelectionProblem::n)
      .def_property_readonly("m", &SelectionProblem::m);

  m.def("selection_pvalues", &selection_pvalues, py::arg("problem"),
        py::arg("tie_aware") = false);
  m.def("oracle_pvalues", &oracle_pvalues, py::arg("problem"),
        py::arg("tie_aware") = false);
  m.def("fdp_selection",
        [](const PValueVector& p, const EnvelopeFunction& G,
           const std::vector<double>& grid, bool refine) {
          return fdp_selection(p, G, grid, refine);
        },
        py::arg("p"), py::arg("envelope"), py::arg("grid"),
        py::arg("refine") = true);

  m.def("fcp_bound", &fcp_bound, py::arg("envelope"), py::arg("alpha"));
  m.def("ecdf_variance",
        [](std::size_t n, std::size_t m_, double t) {
          const auto res = ecdf_variance({n, m_, t});
          return py::make_tuple(res.var, res.c, res.rho);
        },
        py::arg("n"), py::arg("m"), py::arg("t"));

  py::class_<CcvThresholds>(m, "CcvThresholds")
      .def_readonly("b", &CcvThresholds::b)
      .def_readonly("n", &CcvThresholds::n)
      .def_readonly("delta", &CcvThresholds::delta)
      .def("adjust", &CcvThresholds::adjust, py::arg("p"));

  m.def("ccv_thresholds", &ccv_thresholds, py::arg("envelope"), py::arg("n"));
  m.def("ccv_adjust", &ccv_adjust, py::arg("p"), py::arg("thresholds"));
  m.def("bh_threshold",
        [](const std::vector<double>& p, double alpha) {
          const auto res = bh_threshold(p, alpha);
          return py::make_tuple(res.threshold, res.k);
        },
        py::arg("pvalues"), py::arg("alpha"));

  py::class_<OutlierSimConfig>(m, "OutlierSimConfig")
      .def(py::init<>())
      .def_readwrite("dim", &OutlierSimConfig::dim)
      .def_readwrite("n_train", &OutlierSimConfig::n_train)
      .def_readwrite("n_calib", &OutlierSimConfig::n_calib)
      .def_readwrite("n_test", &OutlierSimConfig::n_test)
      .def_readwrite("support_size", &OutlierSimConfig::support_size)
      .def_readwrite("purity", &OutlierSimConfig::purity)
      .def_readwrite("a", &OutlierSimConfig::a)
      .def_readwrite("knn", &OutlierSimConfig::knn)
      .def_readwrite("seed", &OutlierSimConfig::seed);
  m.def("gen_outlier_data", &gen_outlier_data, py::arg("config"),
        py::arg("trial"));

  py::class_<SelectionSimConfig>(m, "SelectionSimConfig")
      .def(py::init<>())
      .def_readwrite("n_calib", &SelectionSimConfig::n_calib)
      .def_readwrite("n_test", &SelectionSimConfig::n_test)
      .def_readwrite("dim", &SelectionSimConfig::dim)
      .def_readwrite("n_fit", &SelectionSimConfig::n_fit)
      .def_readwrite("noise_sd", &SelectionSimConfig::noise_sd)
      .def_readwrite("c", &SelectionSimConfig::c)
      .def_readwrite("seed", &SelectionSimConfig::seed);
  m.def("gen_selection_data", &gen_selection_data, py::arg("config"),
        py::arg("trial"));
}
