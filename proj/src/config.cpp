#include "epam/config.hpp"

#include <functional>
#include <map>
#include <utility>

#include "epam/catalog.hpp"
#include "epam/error.hpp"
#include "epam/text.hpp"

namespace epam::config {
namespace {

std::string at_line(std::size_t line, const std::string& msg) { return "line " + std::to_string(line) + ": " + msg; }

// Key table for one section: setters parse the value, echo prints the current one.
struct Field {
  std::function<void(std::string_view)> set;
  std::function<std::string()> echo;
};

using Table = std::map<std::string, Field>;

Field real(double& v) {
  return {[&v](std::string_view s) { v = text::parse_double(s, "value"); }, [&v] { return text::format_double(v); }};
}

Field integer(int& v) {
  return {[&v](std::string_view s) {
            const auto x = text::parse_int(s, "value");
            if (x < 0 || x > 1'000'000'000) throw ValidationError("integer out of range");
            v = static_cast<int>(x);
          },
          [&v] { return std::to_string(v); }};
}

Field count(std::size_t& v) {
  return {[&v](std::string_view s) {
            const auto x = text::parse_int(s, "value");
            if (x < 0) throw ValidationError("count must be non-negative");
            v = static_cast<std::size_t>(x);
          },
          [&v] { return std::to_string(v); }};
}

Field seed(std::uint64_t& v) {
  return {[&v](std::string_view s) {
            const auto x = text::parse_int(s, "seed");
            if (x < 0) throw ValidationError("seed must be non-negative");
            v = static_cast<std::uint64_t>(x);
          },
          [&v] { return std::to_string(v); }};
}

void apply(const std::vector<Entry>& entries, std::map<std::string, Table>& tables,
           std::vector<std::string>* defaulted) {
  std::set<std::pair<std::string, std::string>> given;
  for (const auto& e : entries) {
    const auto t = tables.find(e.section);
    if (t == tables.end()) throw ValidationError(at_line(e.line, "unknown section [" + e.section + "]"));
    const auto f = t->second.find(e.key);
    if (f == t->second.end()) {
      const std::string where = e.section.empty() ? e.key : e.section + "." + e.key;
      throw ValidationError(at_line(e.line, "unknown key '" + where + "'"));
    }
    try {
      f->second.set(e.value);
    } catch (const ValidationError& err) {
      throw ValidationError(at_line(e.line, e.key + ": " + err.what()));
    }
    given.emplace(e.section, e.key);
  }
  if (!defaulted) return;
  for (const auto& [section, table] : tables) {
    for (const auto& [key, field] : table) {
      if (given.count({section, key})) continue;
      defaulted->push_back((section.empty() ? key : section + "." + key) + " = " + field.echo());
    }
  }
}

}  // namespace

std::vector<Entry> parse_sections(std::string_view text) {
  std::vector<Entry> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::string section;
  std::size_t line_no = 0;
  for (auto raw : text::lines(text)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(at_line(line_no, "unterminated section header"));
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ValidationError(at_line(line_no, "empty section name"));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ValidationError(at_line(line_no, "expected key = value"));
    std::string key(text::trim(line.substr(0, eq)));
    auto value = text::trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw ValidationError(at_line(line_no, "empty key"));
    if (!seen.emplace(section, key).second) throw ValidationError(at_line(line_no, "duplicate key '" + key + "'"));
    out.push_back({section, std::move(key), std::string(value), line_no});
  }
  return out;
}

bool parse_bool(std::string_view s, std::string_view what) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ValidationError(std::string(what) + ": expected true or false, got '" + std::string(s) + "'");
}

trace::Window parse_window(std::string_view s) {
  const auto parts = text::split(s, ',');
  if (parts.size() != 2) throw ValidationError("window must be 'start,end'");
  trace::Window w{text::parse_double(parts[0], "window start"), text::parse_double(parts[1], "window end")};
  if (!(w.start < w.end)) throw ValidationError("window start must precede its end");
  return w;
}

synthetic::Processor parse_processor(std::string_view s) {
  if (s == "cpu1") return synthetic::Processor::cpu1;
  if (s == "cpu4") return synthetic::Processor::cpu4;
  if (s == "gpu") return synthetic::Processor::gpu;
  if (s == "nnapi") return synthetic::Processor::nnapi;
  throw ValidationError("unknown processor '" + std::string(s) + "' (cpu1, cpu4, gpu, nnapi)");
}

RunConfig parse_run_config(std::string_view text) {
  const auto entries = parse_sections(text);
  RunConfig rc;
  bool fit_seed_given = false;
  for (const auto& e : entries) fit_seed_given |= (e.section == "fit" && e.key == "seed");

  auto& o = rc.fit.optim;
  auto& in = rc.ingest;
  auto& t = rc.synth;
  std::map<std::string, Table> tables;
  tables[""] = {{"seed", seed(rc.seed)}};
  tables["fit"] = {
      {"max_iters", integer(o.max_iters)},
      {"grad_tol", real(o.grad_tol)},
      {"restarts", integer(o.restarts)},
      {"seed", seed(o.seed)},
      {"max_exact", count(rc.fit.max_exact)},
      {"contraction", real(o.contraction)},
      {"sufficient_increase", real(o.sufficient_increase)},
      {"max_step", real(o.max_step)},
      {"perturbation_scale", real(o.perturbation_scale)},
      {"noise_var", {[&](std::string_view s) { rc.fit.fixed_noise_var = text::parse_double(s, "noise_var"); },
                     [&] { return rc.fit.fixed_noise_var ? text::format_double(*rc.fit.fixed_noise_var) : "learned"; }}},
  };
  tables["ingest"] = {
      {"quiet_window", {[&](std::string_view s) { in.quiet_window = parse_window(s); },
                        [&] {
                          return in.quiet_window ? text::format_double(in.quiet_window->start) + "," +
                                                       text::format_double(in.quiet_window->end)
                                                 : std::string("unset");
                        }}},
      {"marker_threshold_mw", real(in.marker_threshold_mw)},
      {"marker_min_ms", real(in.marker_min_ms)},
      {"power_form", {[&](std::string_view s) { in.power_form = trace::parse_power_form(s); },
                      [&] { return std::string(in.power_form == trace::PowerForm::power ? "power" : "current_voltage"); }}},
      {"exclude_segments", {[&](std::string_view s) {
                              in.exclude_segments.clear();
                              for (auto p : text::split(s, ',')) {
                                if (!p.empty()) in.exclude_segments.emplace(p);
                              }
                            },
                            [&] {
                              std::string v;
                              for (const auto& x : in.exclude_segments) v += (v.empty() ? "" : ",") + x;
                              return v.empty() ? std::string("none") : v;
                            }}},
  };
  tables["synth"] = {
      {"quant_energy_factor", real(t.quant_energy_factor)},
      {"quant_latency_factor", real(t.quant_latency_factor)},
      {"gpu_vs_cpu1_energy_factor", real(t.gpu_vs_cpu1_energy_factor)},
      {"gpu_vs_cpu4_energy_factor", real(t.gpu_vs_cpu4_energy_factor)},
      {"gpu_vs_cpu1_latency_factor", real(t.gpu_vs_cpu1_latency_factor)},
      {"cpu4_vs_cpu1_latency_factor", real(t.cpu4_vs_cpu1_latency_factor)},
      {"quant_multithread_energy_factor", real(t.quant_multithread_energy_factor)},
      {"nnapi_regression_energy_factor", real(t.nnapi_regression_energy_factor)},
      {"nnapi_regression_latency_factor", real(t.nnapi_regression_latency_factor)},
      {"nnapi_speech_energy_factor", real(t.nnapi_speech_energy_factor)},
      {"nnapi_speech_latency_factor", real(t.nnapi_speech_latency_factor)},
      {"noise_cv", real(t.noise_cv)},
      {"measurement_cv", real(t.measurement_cv)},
      {"memory_cv", real(t.memory_cv)},
      {"memory_base_mb", real(t.memory_base_mb)},
      {"memory_slope", real(t.memory_slope)},
      {"gpu_memory_factor", real(t.gpu_memory_factor)},
  };
  apply(entries, tables, &rc.defaulted);
  if (!fit_seed_given) o.seed = rc.seed;
  rc.fit.validate();
  rc.synth.validate();
  if (!(in.marker_threshold_mw > 0.0) || !(in.marker_min_ms > 0.0)) {
    throw ValidationError("marker threshold and minimum duration must be positive");
  }
  return rc;
}

TracePlanFile parse_trace_plan(std::string_view text) {
  const auto entries = parse_sections(text);
  TracePlanFile out;
  auto& p = out.plan;
  int cycles = 1;
  std::string model;
  std::string processor = "cpu1";
  bool initiation = false;
  std::map<std::string, Table> tables;
  tables["trace"] = {
      {"device", {[&](std::string_view s) { out.device = std::string(s); }, [&] { return out.device; }}},
      {"cycles", integer(cycles)},
      {"model", {[&](std::string_view s) { model = std::string(s); }, [&] { return model; }}},
      {"processor", {[&](std::string_view s) { processor = std::string(s); }, [&] { return processor; }}},
      {"initiation", {[&](std::string_view s) { initiation = parse_bool(s, "initiation"); },
                      [&] { return std::string(initiation ? "true" : "false"); }}},
      {"interval_s", real(p.interval_s)},
      {"lead_s", real(p.lead_s)},
      {"marker", {[&](std::string_view s) { p.marker = parse_bool(s, "marker"); },
                  [&] { return std::string(p.marker ? "true" : "false"); }}},
      {"marker_level_mw", real(p.marker_level_mw)},
      {"marker_duration_s", real(p.marker_duration_s)},
      {"marker_gap_s", real(p.marker_gap_s)},
      {"cycle_gap_s", real(p.cycle_gap_s)},
      {"tail_s", real(p.tail_s)},
      {"noise_mw", real(p.noise_mw)},
      {"clock_offset_s", real(p.clock_offset_s)},
      {"log_clock", {[&](std::string_view s) {
                       if (s == "device") p.log_clock = trace::Clock::device;
                       else if (s == "monitor") p.log_clock = trace::Clock::monitor;
                       else throw ValidationError("log_clock must be device or monitor");
                     },
                     [&] { return std::string(p.log_clock == trace::Clock::device ? "device" : "monitor"); }}},
  };
  std::vector<Entry> trace_entries;
  std::vector<synthetic::PlanSegment> segments;
  for (const auto& e : entries) {
    if (e.section != "segments") {
      trace_entries.push_back(e);
      continue;
    }
    const auto parts = text::split(e.value, ',');
    if (parts.size() != 2 && parts.size() != 3) {
      throw ValidationError(at_line(e.line, "segment must be 'duration_s, level_mw[, level_end_mw]'"));
    }
    try {
      synthetic::PlanSegment seg{e.key, text::parse_double(parts[0], "duration"),
                                 text::parse_double(parts[1], "level"), std::nullopt};
      if (parts.size() == 3) seg.level_end_mw = text::parse_double(parts[2], "level_end");
      segments.push_back(std::move(seg));
    } catch (const ValidationError& err) {
      throw ValidationError(at_line(e.line, err.what()));
    }
  }
  apply(trace_entries, tables, nullptr);

  const auto device = catalog::find_device(out.device);
  if (!device) throw ValidationError("unknown device '" + out.device + "'");
  if (cycles < 0) throw ValidationError("cycles must be non-negative");
  if (segments.empty() && !model.empty()) {
    const auto m = catalog::find_model(model);
    if (!m) throw ValidationError("unknown model '" + model + "'");
    const synthetic::Condition c{*device, *m, parse_processor(processor)};
    if (!synthetic::supports(c.model, c.processor)) throw ValidationError("model does not run on " + processor);
    segments = synthetic::cycle_plan(c, synthetic::TrendConfig{}, initiation);
  }
  for (int i = 0; i < cycles && !segments.empty(); ++i) p.cycles.push_back(segments);
  return out;
}

}  // namespace epam::config
