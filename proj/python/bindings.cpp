#include <optional>
#include <string>
#include <vector>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "widedoa/baselines.hpp"
#include "widedoa/config.hpp"
#include "widedoa/errors.hpp"
#include "widedoa/esprit.hpp"
#include "widedoa/evaluation.hpp"
#include "widedoa/geometry.hpp"
#include "widedoa/subspace.hpp"

namespace py = pybind11;
using namespace widedoa;

namespace {

// (B, P, P) complex array plus B frequencies -> per-bin covariances.
std::vector<BinCovariance> to_bins(
    const py::array_t<Complex, py::array::c_style | py::array::forcecast>& covs,
    const std::vector<double>& freqs) {
  if (covs.ndim() != 3 || covs.shape(1) != covs.shape(2)) {
    throw DomainError("covariances must have shape (bins, P, P)");
  }
  if (static_cast<std::size_t>(covs.shape(0)) != freqs.size()) {
    throw DomainError("one frequency per covariance is required");
  }
  const auto p = static_cast<Eigen::Index>(covs.shape(1));
  const auto view = covs.unchecked<3>();
  std::vector<BinCovariance> out;
  for (py::ssize_t b = 0; b < covs.shape(0); ++b) {
    CMatrix m(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) m(i, j) = view(b, i, j);
    out.push_back({static_cast<int>(b), freqs[static_cast<std::size_t>(b)], std::move(m), 0});
  }
  return out;
}

py::dict solution_dict(const EspritSolution& s) {
  py::dict d;
  d["doas_deg"] = s.doas_deg;
  d["psi_eigenvalues"] = s.psi_eigenvalues;
  d["out_of_range"] = s.out_of_range;
  d["frequency_used"] = s.frequency_used;
  d["subspace_gap"] = s.subspace_gap;
  d["weak_gap"] = s.weak_gap;
  return d;
}

py::dict peaks_dict(const PeakEstimate& p) {
  py::dict d;
  d["doas_deg"] = p.doas_deg;
  d["insufficient_peaks"] = p.insufficient_peaks;
  d["estimates_pooled"] = p.estimates_pooled;
  return d;
}

RunConfig make_config(const std::optional<std::string>& preset,
                      const std::optional<std::string>& config_text) {
  RunConfig cfg = preset ? preset_config(*preset) : RunConfig{};
  if (config_text) cfg = parse_config(*config_text, cfg);
  return cfg;
}

py::list reports_list(const std::vector<RunReport>& reports) {
  py::list out;
  for (const auto& r : reports) {
    py::dict d;
    d["algorithm"] = r.algorithm;
    d["scenario"] = r.scenario;
    d["mae_deg"] = r.mae;
    d["sde_deg"] = r.sde;
    d["total_time_s"] = r.total_time;
    d["blocks_excluded"] = r.blocks_excluded;
    py::list blocks;
    for (const auto& b : r.blocks) {
      py::dict bd;
      bd["block"] = b.block_index;
      bd["t_start"] = b.t_start;
      bd["t_end"] = b.t_end;
      bd["estimates_deg"] = b.estimates;
      bd["truth_deg"] = b.truth;
      bd["abs_error_deg"] = b.per_source_error;
      bd["flagged"] = b.flagged;
      blocks.append(bd);
    }
    d["blocks"] = blocks;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Wideband ESPRIT direction-of-arrival estimation";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  // IoError carries the path in its message.
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<ArrayGeometry>(m, "ArrayGeometry")
      .def(py::init([](int sensors, double spacing, double sound_speed) {
             ArrayGeometry g{sensors, spacing, sound_speed};
             g.validate();
             return g;
           }),
           py::arg("sensors") = 5, py::arg("spacing") = 0.044, py::arg("sound_speed") = 343.0)
      .def_readonly("sensors", &ArrayGeometry::num_sensors)
      .def_readonly("spacing", &ArrayGeometry::spacing)
      .def_readonly("sound_speed", &ArrayGeometry::sound_speed)
      .def("__repr__", [](const ArrayGeometry& g) {
        return "ArrayGeometry(sensors=" + std::to_string(g.num_sensors) +
               ", spacing=" + std::to_string(g.spacing) +
               ", sound_speed=" + std::to_string(g.sound_speed) + ")";
      });

  m.def("steering_matrix",
        [](const ArrayGeometry& g, double f, const std::vector<double>& doas) {
          return steering_matrix(g, f, doas);
        },
        py::arg("geometry"), py::arg("frequency"), py::arg("doas_deg"));
  m.def("lowest_aliasing_frequency", &lowest_aliasing_frequency, py::arg("geometry"));

  m.def("narrowband_esprit",
        [](const Eigen::MatrixXcd& cov, double f, int q, const ArrayGeometry& g) {
          return solution_dict(narrowband_esprit({0, f, cov, 0}, q, g));
        },
        py::arg("covariance"), py::arg("frequency"), py::arg("num_sources"), py::arg("geometry"));
  m.def("wideband_esprit_single",
        [](const py::array_t<Complex, py::array::c_style | py::array::forcecast>& covs,
           const std::vector<double>& freqs, const ArrayGeometry& g) {
          return solution_dict(wideband_esprit_single(to_bins(covs, freqs), g));
        },
        py::arg("covariances"), py::arg("frequencies"), py::arg("geometry"));
  m.def("wideband_esprit_multi",
        [](const py::array_t<Complex, py::array::c_style | py::array::forcecast>& covs,
           const std::vector<double>& freqs, int q, const ArrayGeometry& g,
           const std::string& mode) {
          AccumulationMode am;
          if (mode == "batch") am = AccumulationMode::kBatch;
          else if (mode == "iterative") am = AccumulationMode::kIterative;
          else throw DomainError("mode must be 'batch' or 'iterative'");
          return solution_dict(wideband_esprit_multi(to_bins(covs, freqs), q, g, am));
        },
        py::arg("covariances"), py::arg("frequencies"), py::arg("num_sources"),
        py::arg("geometry"), py::arg("mode") = "batch");
  m.def("hist_esprit",
        [](const py::array_t<Complex, py::array::c_style | py::array::forcecast>& covs,
           const std::vector<double>& freqs, int q, const ArrayGeometry& g, double bin_width) {
          HistogramConfig cfg;
          cfg.bin_width = bin_width;
          return peaks_dict(hist_esprit(to_bins(covs, freqs), q, g, cfg));
        },
        py::arg("covariances"), py::arg("frequencies"), py::arg("num_sources"),
        py::arg("geometry"), py::arg("bin_width") = 1.0);
  m.def("css_localize",
        [](const py::array_t<Complex, py::array::c_style | py::array::forcecast>& covs,
           const std::vector<double>& freqs, int q, const ArrayGeometry& g,
           const std::vector<double>& initial_doas, double grid_resolution) {
          CssConfig cfg;
          cfg.initial_doas = initial_doas;
          cfg.grid_resolution = grid_resolution;
          return peaks_dict(css_localize(to_bins(covs, freqs), q, g, cfg));
        },
        py::arg("covariances"), py::arg("frequencies"), py::arg("num_sources"),
        py::arg("geometry"), py::arg("initial_doas") = std::vector<double>{},
        py::arg("grid_resolution") = 0.1);

  m.def("score_block",
        [](const std::vector<double>& est, const std::vector<double>& truth) {
          return score_block(est, truth).abs_errors;
        },
        py::arg("estimates_deg"), py::arg("truth_deg"),
        "Absolute errors under the minimum-cost one-to-one assignment, in truth order.");
  m.def("algorithm_names", [] {
    std::vector<std::string> out;
    for (Algorithm a : all_algorithms()) out.emplace_back(algorithm_name(a));
    return out;
  });
  m.def("preset_names", &preset_names);

  m.def("effective_config",
        [](std::optional<std::string> preset, std::optional<std::string> config) {
          return to_config_text(make_config(preset, config));
        },
        py::arg("preset") = py::none(), py::arg("config") = py::none(),
        "Resolved configuration text for a preset and/or INI overlay.");

  m.def("simulate",
        [](std::optional<std::string> preset, std::optional<std::string> config) {
          const RunConfig cfg = make_config(preset, config);
          cfg.validate();
          Scenario sc;
          {
            py::gil_scoped_release release;
            sc = synthesize_scenario(cfg.scenario);
          }
          py::list timeline;
          for (const auto& seg : sc.truth) {
            timeline.append(py::make_tuple(seg.interval.start, seg.interval.end, seg.doas_deg));
          }
          return py::make_tuple(RMatrix(sc.signal.samples), sc.signal.sample_rate, timeline);
        },
        py::arg("preset") = py::none(), py::arg("config") = py::none(),
        "Returns (samples[P, N], sample_rate, [(t_start, t_end, doas_deg), ...]).");

  m.def("evaluate",
        [](std::optional<std::string> preset, std::optional<std::string> config) {
          const RunConfig cfg = make_config(preset, config);
          cfg.validate();
          std::vector<RunReport> reports;
          {
            py::gil_scoped_release release;
            reports = run_experiment(cfg.scenario, cfg.experiment);
          }
          return reports_list(reports);
        },
        py::arg("preset") = py::none(), py::arg("config") = py::none());

  m.def("localize",
        [](const RMatrix& samples, double sample_rate, int num_sources,
           const std::string& algorithm, std::optional<std::string> preset,
           std::optional<std::string> config) {
          RunConfig cfg = make_config(preset, config);
          cfg.experiment.stft.sample_rate = sample_rate;
          const Algorithm algo = parse_algorithm(algorithm);
          std::vector<BlockLocalization> blocks;
          {
            py::gil_scoped_release release;
            blocks = localize_signal({samples, sample_rate}, num_sources,
                                     cfg.scenario.geometry, cfg.experiment, algo);
          }
          py::list out;
          for (const auto& b : blocks) {
            py::dict d;
            d["block"] = b.block_index;
            d["t_start"] = b.t_start;
            d["t_end"] = b.t_end;
            d["doas_deg"] = b.doas_deg;
            d["flagged"] = b.flagged;
            out.append(d);
          }
          return out;
        },
        py::arg("samples"), py::arg("sample_rate"), py::arg("num_sources"),
        py::arg("algorithm") = "proposed-multi-batch", py::arg("preset") = py::none(),
        py::arg("config") = py::none());
}
