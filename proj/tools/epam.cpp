// epam: ingest -> dataset -> train -> predict -> eval, plus synthetic data.
//
// Exit status: 0 success, 2 invalid input, 3 numerical failure. Failures
// print one `ERROR <code> <message>` line on stderr.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epam/catalog.hpp"
#include "epam/config.hpp"
#include "epam/dataset.hpp"
#include "epam/error.hpp"
#include "epam/eval.hpp"
#include "epam/gpr.hpp"
#include "epam/synthetic.hpp"
#include "epam/text.hpp"
#include "epam/trace.hpp"

namespace {

using namespace epam;

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view data) {
  if (path == "-") {
    std::cout << data;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

config::RunConfig load_config(const std::string& path) {
  auto rc = config::parse_run_config(path.empty() ? std::string() : read_file(path));
  for (const auto& d : rc.defaulted) std::cerr << "config default " << d << "\n";
  return rc;
}

std::vector<double> parse_fractions(const std::string& s) {
  std::vector<double> out;
  for (auto f : text::split(s, ',')) out.push_back(text::parse_double(f, "fraction"));
  if (out.size() != 3) throw ValidationError("--fractions needs three values: train,val,test");
  return out;
}

// ---- ingest ----------------------------------------------------------------

struct IngestArgs {
  std::string power, latency, quiet, form, config, out;
  double threshold = 0.0, min_ms = 0.0;
  std::vector<std::string> exclude;
};

int run_ingest(const IngestArgs& a, const CLI::App& cmd) {
  auto rc = load_config(a.config);
  auto& in = rc.ingest;
  if (!a.quiet.empty()) in.quiet_window = config::parse_window(a.quiet);
  if (cmd.count("--marker-threshold")) in.marker_threshold_mw = a.threshold;
  if (cmd.count("--marker-min-ms")) in.marker_min_ms = a.min_ms;
  if (!a.form.empty()) in.power_form = trace::parse_power_form(a.form);
  for (const auto& e : a.exclude) in.exclude_segments.insert(e);
  if (!in.quiet_window) throw ValidationError("a quiet window is required (--quiet-window a,b)");
  if (!(in.marker_threshold_mw > 0.0) || !(in.marker_min_ms > 0.0)) {
    throw ValidationError("marker threshold and minimum duration must be positive");
  }

  const auto trace = trace::parse_power_csv(read_file(a.power), in.power_form);
  const auto log = trace::parse_latency_log(read_file(a.latency));
  const double base = trace::estimate_base_power(trace, *in.quiet_window);

  double offset = 0.0;
  if (log.marker) {
    offset = trace::align_clocks(trace, log, {base, in.marker_threshold_mw, in.marker_min_ms / 1000.0});
  } else {
    for (const auto& c : log.cycles) {
      if (c.clock == trace::Clock::device) throw ValidationError("device-clock cycles need a marker row to align");
    }
  }
  const auto energies = trace::cycle_energies(trace, log, base, offset, in.exclude_segments);
  write_file(a.out, trace::write_cycle_energies(energies));
  std::cerr << "base_power_mw=" << text::format_double(base) << "\n"
            << "clock_offset_s=" << text::format_double(offset) << "\n"
            << "cycles=" << energies.cycles.size() << "\n";
  if (energies.clamped_segments > 0) {
    std::cerr << "warning: " << energies.clamped_segments << " segment(s) below base power clamped to 0 J\n";
  }
  return 0;
}

// ---- dataset split -----------------------------------------------------------

struct SplitArgs {
  std::string in, mode = "random", fractions = "0.743,0.170,0.087", test_device, prefix;
  std::uint64_t seed = 0;
};

int run_split(const SplitArgs& a) {
  dataset::SplitSpec spec;
  if (a.mode == "random") {
    spec.mode = dataset::SplitSpec::Mode::random;
  } else if (a.mode == "by-device" || a.mode == "by_device") {
    spec.mode = dataset::SplitSpec::Mode::by_device;
    if (a.test_device.empty()) throw ValidationError("--mode by-device needs --test-device");
  } else {
    throw ValidationError("unknown split mode '" + a.mode + "' (random, by-device)");
  }
  const auto f = parse_fractions(a.fractions);
  spec.fractions = {f[0], f[1], f[2]};
  spec.seed = a.seed;
  spec.test_device = a.test_device;
  const auto parts = dataset::split(dataset::load_records(read_file(a.in)), spec);
  write_file(a.prefix + "_train.csv", dataset::write_records(parts.train));
  write_file(a.prefix + "_val.csv", dataset::write_records(parts.val));
  write_file(a.prefix + "_test.csv", dataset::write_records(parts.test));
  std::cerr << "train=" << parts.train.size() << " val=" << parts.val.size() << " test=" << parts.test.size() << "\n";
  return 0;
}

// ---- train / predict / eval --------------------------------------------------

struct TrainArgs {
  std::string data, config, out, val;
};

int run_train(const TrainArgs& a) {
  const auto rc = load_config(a.config);
  const auto records = dataset::load_records(read_file(a.data));
  if (records.size() < 2) throw ValidationError("training needs at least 2 records");
  const auto model = gp::fit(dataset::encode(records), rc.fit);
  for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";
  write_file(a.out, gp::save_model(model));
  std::cerr << "lml=" << text::format_double(model.lml) << " iterations=" << model.iterations
            << " converged=" << (model.converged ? "true" : "false") << "\n";
  if (!a.val.empty()) {
    const auto r = eval::report(model, dataset::load_records(read_file(a.val)));
    std::cerr << "val_rmse_j=" << text::format_double(r.rmse_j) << " val_pct_rmse=" << text::format_double(r.pct_rmse)
              << " val_coverage95=" << text::format_double(r.coverage95) << "\n";
  }
  return 0;
}

std::string prediction_row(const gp::Prediction& p) {
  return text::format_double(p.mean) + "," + text::format_double(p.stddev()) + "," + (p.unseen_level ? "1" : "0") +
         "\n";
}

constexpr std::string_view kPredictionHeader = "mean_j,std_j,unseen_level\n";

struct PredictArgs {
  std::string model, in = "-", out = "-";
  bool stream = false;
};

int run_predict(const PredictArgs& a) {
  const auto model = gp::load_model(read_file(a.model));
  if (!a.stream) {
    const auto preds = gp::predict_batch(model, dataset::load_records(read_file(a.in)));
    std::string out(kPredictionHeader);
    for (const auto& p : preds) out += prediction_row(p);
    write_file(a.out, out);
    return 0;
  }

  std::ifstream file;
  std::istream* in = &std::cin;
  if (a.in != "-") {
    file.open(a.in, std::ios::binary);
    if (!file) throw ValidationError("cannot open '" + a.in + "'");
    in = &file;
  }
  std::ofstream ofile;
  std::ostream* out = &std::cout;
  if (a.out != "-") {
    ofile.open(a.out, std::ios::binary | std::ios::trunc);
    if (!ofile) throw ValidationError("cannot write '" + a.out + "'");
    out = &ofile;
  }
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  *out << kPredictionHeader << std::flush;
  while (std::getline(*in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (text::trim(line) == dataset::kDatasetHeader) continue;
      throw ValidationError("line 1: expected header '" + std::string(dataset::kDatasetHeader) + "'");
    }
    const auto record = dataset::parse_record_row(line, line_no);
    *out << prediction_row(gp::predict(model, record)) << std::flush;
  }
  if (!header_seen) throw ValidationError("empty query stream");
  return 0;
}

struct EvalArgs {
  std::string model, test, out;
};

int run_eval(const EvalArgs& a) {
  const auto model = gp::load_model(read_file(a.model));
  const auto r = eval::report(model, dataset::load_records(read_file(a.test)));
  write_file(a.out, eval::format_report(r));
  return 0;
}

// ---- synth -------------------------------------------------------------------

struct SynthRecordsArgs {
  std::size_t n = 2000;
  std::uint64_t seed = 0;
  std::string out, devices, config;
  double noise_cv = 0.05;
};

int run_synth_records(const SynthRecordsArgs& a, const CLI::App& cmd) {
  auto rc = load_config(a.config);
  if (cmd.count("--noise-cv")) rc.synth.noise_cv = a.noise_cv;
  synthetic::SampleOptions opts;
  if (!a.devices.empty()) {
    opts.devices.clear();
    for (auto name : text::split(a.devices, ',')) {
      const auto d = catalog::find_device(name);
      if (!d) throw ValidationError("unknown device '" + std::string(name) + "'");
      opts.devices.push_back(*d);
    }
  }
  const std::uint64_t seed = cmd.count("--seed") ? a.seed : rc.seed;
  const auto sampled = synthetic::sample_records(a.n, opts, rc.synth, seed);
  write_file(a.out, dataset::write_records(sampled.records));
  return 0;
}

struct SynthTraceArgs {
  std::string plan, prefix;
  std::uint64_t seed = 0;
};

int run_synth_trace(const SynthTraceArgs& a) {
  const auto plan = config::parse_trace_plan(read_file(a.plan));
  const auto device = catalog::find_device(plan.device);
  const auto emission = synthetic::emit_power_trace(plan.plan, *device, a.seed);
  write_file(a.prefix + "_power.csv", emission.power_csv);
  write_file(a.prefix + "_latency.csv", emission.latency_csv);
  write_file(a.prefix + "_truth.csv", trace::write_cycle_energies(emission.ground_truth));
  std::cerr << "base_power_mw=" << text::format_double(emission.base_power_mw) << "\n"
            << "quiet_window=" << text::format_double(emission.quiet_window.start) << ","
            << text::format_double(emission.quiet_window.end) << "\n";
  return 0;
}

int fail(int code, const std::string& msg) {
  std::cerr << "ERROR " << code << " " << msg << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EPAM: Gaussian-process energy prediction for mobile AI application cycles"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Integrate per-segment cycle energy from a power capture and latency log");
  c_ingest->add_option("--power", ingest.power, "Power CSV (t_s,power_mW or t_s,current_mA,voltage_V)")->required();
  c_ingest->add_option("--latency", ingest.latency, "Latency log CSV (cycle_id,segment,start_s,end_s,clock)")->required();
  c_ingest->add_option("--quiet-window", ingest.quiet, "Base-power window 'a,b' in monitor seconds");
  c_ingest->add_option("--marker-threshold", ingest.threshold, "Marker height above base power, mW (default 100)");
  c_ingest->add_option("--marker-min-ms", ingest.min_ms, "Minimum marker duration, ms (default 50)");
  c_ingest->add_option("--power-form", ingest.form, "power | current-voltage");
  c_ingest->add_option("--exclude-segment", ingest.exclude, "Segment label left out of energies (repeatable)");
  c_ingest->add_option("--config", ingest.config, "Run config ([ingest] section)");
  c_ingest->add_option("--out", ingest.out, "Output cycle energies CSV")->required();

  auto* c_dataset = app.add_subcommand("dataset", "Dataset utilities");
  c_dataset->require_subcommand(1);
  SplitArgs split;
  auto* c_split = c_dataset->add_subcommand("split", "Split a dataset into train/val/test files");
  c_split->add_option("--in", split.in, "Dataset CSV")->required();
  c_split->add_option("--mode", split.mode, "random | by-device")->capture_default_str();
  c_split->add_option("--fractions", split.fractions, "train,val,test fractions")->capture_default_str();
  c_split->add_option("--seed", split.seed, "Permutation seed")->capture_default_str();
  c_split->add_option("--test-device", split.test_device, "Held-out SoC or catalog device (by-device)");
  c_split->add_option("--out-prefix", split.prefix, "Writes <prefix>_{train,val,test}.csv")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Fit the GP model");
  c_train->add_option("--data", train.data, "Training dataset CSV")->required();
  c_train->add_option("--config", train.config, "Run config ([fit] section and seed)");
  c_train->add_option("--out", train.out, "Model file")->required();
  c_train->add_option("--val", train.val, "Validation CSV; metrics are printed to stderr");

  PredictArgs predict;
  auto* c_predict = app.add_subcommand("predict", "Predict cycle energy (columns mean_j,std_j,unseen_level)");
  c_predict->add_option("--model", predict.model, "Model file")->required();
  c_predict->add_option("--in", predict.in, "Query CSV in dataset format, '-' for stdin")->capture_default_str();
  c_predict->add_option("--out", predict.out, "Prediction CSV, '-' for stdout")->capture_default_str();
  c_predict->add_flag("--stream", predict.stream, "Answer each query row before reading the next");

  EvalArgs evaluate;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a model on a test set");
  c_eval->add_option("--model", evaluate.model, "Model file")->required();
  c_eval->add_option("--test", evaluate.test, "Test dataset CSV")->required();
  c_eval->add_option("--out", evaluate.out, "Report file (key=value lines and a group table)")->required();

  auto* c_synth = app.add_subcommand("synth", "Synthetic data");
  c_synth->require_subcommand(1);
  SynthRecordsArgs records;
  auto* c_records = c_synth->add_subcommand("records", "Sample a cycle dataset from the catalogs");
  c_records->add_option("--n", records.n, "Number of records")->capture_default_str();
  c_records->add_option("--seed", records.seed, "Seed (default: config seed)");
  c_records->add_option("--out", records.out, "Dataset CSV")->required();
  c_records->add_option("--noise-cv", records.noise_cv, "Cycle noise coefficient of variation (default 0.05)");
  c_records->add_option("--devices", records.devices, "Comma-separated catalog devices (default: all)");
  c_records->add_option("--config", records.config, "Run config ([synth] section)");
  SynthTraceArgs trace_args;
  auto* c_trace = c_synth->add_subcommand("trace", "Emit a power capture, latency log and ground truth");
  c_trace->add_option("--plan", trace_args.plan, "Trace plan file")->required();
  c_trace->add_option("--seed", trace_args.seed, "Noise seed")->capture_default_str();
  c_trace->add_option("--out-prefix", trace_args.prefix, "Writes <prefix>_{power,latency,truth}.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, e.what());
  }

  try {
    if (*c_ingest) return run_ingest(ingest, *c_ingest);
    if (*c_split) return run_split(split);
    if (*c_train) return run_train(train);
    if (*c_predict) return run_predict(predict);
    if (*c_eval) return run_eval(evaluate);
    if (*c_records) return run_synth_records(records, *c_records);
    if (*c_trace) return run_synth_trace(trace_args);
  } catch (const ValidationError& e) {
    return fail(2, e.what());
  } catch (const NumericalError& e) {
    return fail(3, e.what());
  } catch (const std::exception& e) {
    return fail(2, e.what());
  }
  return fail(2, "no command");
}
