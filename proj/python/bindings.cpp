#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "epam/catalog.hpp"
#include "epam/config.hpp"
#include "epam/dataset.hpp"
#include "epam/error.hpp"
#include "epam/eval.hpp"
#include "epam/gpr.hpp"
#include "epam/synthetic.hpp"
#include "epam/text.hpp"
#include "epam/trace.hpp"

namespace py = pybind11;
using namespace epam;

namespace {

py::dict report_dict(const eval::Report& r) {
  py::dict d;
  d["n"] = r.n;
  d["rmse_j"] = r.rmse_j;
  d["pct_rmse"] = r.pct_rmse;
  d["mean_target_j"] = r.mean_target_j;
  d["lml"] = r.lml;
  d["coverage95"] = r.coverage95;
  d["unseen_fraction"] = r.unseen_fraction;
  d["unseen_by_feature"] = r.unseen_by_feature;
  py::list groups;
  for (const auto& g : r.groups) {
    py::dict row;
    row["soc"] = g.soc;
    row["dnn_model"] = g.dnn_model;
    row["source"] = g.source;
    row["n"] = g.n;
    row["rmse_j"] = g.rmse_j;
    row["pct_rmse"] = g.pct_rmse;
    row["coverage95"] = g.coverage95;
    row["unseen_fraction"] = g.unseen_fraction;
    groups.append(row);
  }
  d["groups"] = groups;
  return d;
}

std::vector<catalog::DeviceProfile> pick_devices(const std::optional<std::vector<std::string>>& names) {
  if (!names) return catalog::devices();
  std::vector<catalog::DeviceProfile> out;
  for (const auto& n : *names) {
    const auto d = catalog::find_device(n);
    if (!d) throw ValidationError("unknown device '" + n + "'");
    out.push_back(*d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_epam, m) {
  m.doc() = "Gaussian-process energy prediction for mobile AI application cycles";

  static py::exception<ValidationError> validation_error(m, "ValidationError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::set_error(validation_error, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    }
  });

  py::class_<dataset::CycleRecord>(m, "CycleRecord")
      .def(py::init<>())
      .def_readwrite("soc", &dataset::CycleRecord::soc)
      .def_readwrite("cpu_freq_ghz", &dataset::CycleRecord::cpu_freq_ghz)
      .def_readwrite("cores", &dataset::CycleRecord::cores)
      .def_readwrite("ram_gb", &dataset::CycleRecord::ram_gb)
      .def_readwrite("source", &dataset::CycleRecord::source)
      .def_readwrite("threads", &dataset::CycleRecord::threads)
      .def_readwrite("app_type", &dataset::CycleRecord::app_type)
      .def_readwrite("dnn_model", &dataset::CycleRecord::dnn_model)
      .def_readwrite("dnn_layers", &dataset::CycleRecord::dnn_layers)
      .def_readwrite("memory_mb", &dataset::CycleRecord::memory_mb)
      .def_readwrite("processing_ms", &dataset::CycleRecord::processing_ms)
      .def_readwrite("inference_ms", &dataset::CycleRecord::inference_ms)
      .def_readwrite("energy_j", &dataset::CycleRecord::energy_j)
      .def("__eq__", [](const dataset::CycleRecord& a, const dataset::CycleRecord& b) { return a == b; })
      .def("__repr__", [](const dataset::CycleRecord& r) {
        return "<CycleRecord " + r.soc + " " + r.dnn_model + " " + r.source + " " +
               text::format_double(r.energy_j) + " J>";
      });

  m.def("load_records", &dataset::load_records, py::arg("csv_text"), "Parse dataset CSV text.");
  m.def("write_records", &dataset::write_records, py::arg("records"), "Serialize records as dataset CSV text.");

  m.def(
      "sample_records",
      [](std::size_t n, std::uint64_t seed, double noise_cv, std::optional<std::vector<std::string>> devices) {
        synthetic::SampleOptions o;
        o.devices = pick_devices(devices);
        synthetic::TrendConfig t;
        t.noise_cv = noise_cv;
        return synthetic::sample_records(n, o, t, seed).records;
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("noise_cv") = 0.05, py::arg("devices") = py::none(),
      "Draw synthetic cycle records from the built-in catalogs.");

  py::class_<gp::TrainedModel>(m, "Model")
      .def_readonly("lml", &gp::TrainedModel::lml)
      .def_readonly("iterations", &gp::TrainedModel::iterations)
      .def_readonly("converged", &gp::TrainedModel::converged)
      .def_readonly("warnings", &gp::TrainedModel::warnings)
      .def_property_readonly("column_names", [](const gp::TrainedModel& t) { return t.encoding.column_names; })
      .def_property_readonly("hyperparams",
                             [](const gp::TrainedModel& t) {
                               const auto& h = t.posterior.hyperparams();
                               py::dict d;
                               d["signal_var"] = h.signal_var;
                               d["lengthscales"] = Eigen::VectorXd(h.lengthscales);
                               d["noise_var"] = h.noise_var;
                               return d;
                             })
      .def(
          "predict",
          [](const gp::TrainedModel& t, const std::vector<dataset::CycleRecord>& records) {
            const auto preds = gp::predict_batch(t, records);
            const auto n = static_cast<py::ssize_t>(preds.size());
            py::array_t<double> mean(n);
            py::array_t<double> std(n);
            py::array_t<bool> unseen(n);
            auto pm = mean.mutable_unchecked<1>();
            auto ps = std.mutable_unchecked<1>();
            auto pu = unseen.mutable_unchecked<1>();
            for (py::ssize_t i = 0; i < n; ++i) {
              const auto& p = preds[static_cast<std::size_t>(i)];
              pm(i) = p.mean;
              ps(i) = p.stddev();
              pu(i) = p.unseen_level;
            }
            return py::make_tuple(mean, std, unseen);
          },
          py::arg("records"), "Returns (mean_j, std_j, unseen_level) arrays.")
      .def("save", [](const gp::TrainedModel& t) { return py::bytes(gp::save_model(t)); })
      .def_static(
          "load", [](const py::bytes& b) { return gp::load_model(std::string(b)); }, py::arg("data"));

  m.def(
      "fit",
      [](const std::vector<dataset::CycleRecord>& records, int max_iters, int restarts, std::uint64_t seed,
         std::optional<double> noise_var, std::size_t max_exact) {
        gp::FitConfig c;
        c.optim.max_iters = max_iters;
        c.optim.restarts = restarts;
        c.optim.seed = seed;
        c.fixed_noise_var = noise_var;
        c.max_exact = max_exact;
        py::gil_scoped_release release;
        return gp::fit(dataset::encode(records), c);
      },
      py::arg("records"), py::arg("max_iters") = 200, py::arg("restarts") = 3, py::arg("seed") = 0,
      py::arg("noise_var") = py::none(), py::arg("max_exact") = 4000,
      "Encode records and fit the GP by maximizing the log marginal likelihood.");

  m.def(
      "evaluate",
      [](const gp::TrainedModel& t, const std::vector<dataset::CycleRecord>& test) {
        return report_dict(eval::report(t, test));
      },
      py::arg("model"), py::arg("test"));
  m.def(
      "format_report",
      [](const gp::TrainedModel& t, const std::vector<dataset::CycleRecord>& test) {
        return eval::format_report(eval::report(t, test));
      },
      py::arg("model"), py::arg("test"));

  m.def(
      "rmse", [](std::vector<double> pred, std::vector<double> y) { return eval::rmse(pred, y); }, py::arg("pred"),
      py::arg("y"));
  m.def(
      "pct_rmse", [](double r, std::vector<double> y) { return eval::pct_rmse(r, y); }, py::arg("rmse_j"),
      py::arg("y"));
  m.def(
      "coverage",
      [](std::vector<double> mean, std::vector<double> var, std::vector<double> y, double level) {
        return eval::coverage(mean, var, y, level);
      },
      py::arg("mean"), py::arg("variance"), py::arg("y"), py::arg("level") = 0.95);

  m.def(
      "log_marginal_likelihood",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double signal_var, const Eigen::VectorXd& lengthscales,
         double noise_var) {
        const gp::Hyperparams h{signal_var, lengthscales, noise_var};
        h.validate();
        const auto l = gp::log_marginal_likelihood(X, y, h);
        return py::make_tuple(l.value, l.gradient);
      },
      py::arg("X"), py::arg("y"), py::arg("signal_var"), py::arg("lengthscales"), py::arg("noise_var"),
      "Value and gradient over [log signal_var, log lengthscales..., log noise_var].");

  m.def(
      "emit_trace",
      [](const std::string& plan_text, std::uint64_t seed) {
        const auto plan = config::parse_trace_plan(plan_text);
        const auto em = synthetic::emit_power_trace(plan.plan, *catalog::find_device(plan.device), seed);
        py::dict d;
        d["power_csv"] = em.power_csv;
        d["latency_csv"] = em.latency_csv;
        d["truth_csv"] = trace::write_cycle_energies(em.ground_truth);
        d["base_power_mw"] = em.base_power_mw;
        d["quiet_window"] = py::make_tuple(em.quiet_window.start, em.quiet_window.end);
        return d;
      },
      py::arg("plan"), py::arg("seed") = 0, "Generate a power capture and latency log from a trace plan file.");

  m.def(
      "ingest",
      [](const std::string& power_csv, const std::string& latency_csv, std::pair<double, double> quiet_window,
         double marker_threshold_mw, double marker_min_ms, const std::string& power_form,
         const std::set<std::string>& exclude) {
        const auto t = trace::parse_power_csv(power_csv, trace::parse_power_form(power_form));
        const auto log = trace::parse_latency_log(latency_csv);
        const double base = trace::estimate_base_power(t, {quiet_window.first, quiet_window.second});
        double offset = 0.0;
        if (log.marker) {
          offset = trace::align_clocks(t, log, {base, marker_threshold_mw, marker_min_ms / 1000.0});
        } else {
          for (const auto& c : log.cycles) {
            if (c.clock == trace::Clock::device) throw ValidationError("device-clock cycles need a marker row to align");
          }
        }
        const auto e = trace::cycle_energies(t, log, base, offset, exclude);
        py::dict d;
        d["energies_csv"] = trace::write_cycle_energies(e);
        d["base_power_mw"] = base;
        d["clock_offset_s"] = offset;
        std::vector<double> totals;
        for (const auto& c : e.cycles) totals.push_back(c.total_j);
        d["totals_j"] = totals;
        d["clamped_segments"] = e.clamped_segments;
        return d;
      },
      py::arg("power_csv"), py::arg("latency_csv"), py::arg("quiet_window"), py::arg("marker_threshold_mw") = 100.0,
      py::arg("marker_min_ms") = 50.0, py::arg("power_form") = "power", py::arg("exclude") = std::set<std::string>{},
      "Per-cycle net energy from a power capture and latency log.");
}
