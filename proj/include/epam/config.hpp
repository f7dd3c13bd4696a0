#pragma once

// Sectioned key=value configuration files for runs and trace plans.
//
//   seed = 7
//   [fit]
//   restarts = 3
//
// '#' starts a comment; values may be wrapped in double quotes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "epam/gpr.hpp"
#include "epam/synthetic.hpp"
#include "epam/trace.hpp"

namespace epam::config {

struct Entry {
  std::string section;  // empty for top-level keys
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Entries in file order. Duplicate keys within a section are rejected.
std::vector<Entry> parse_sections(std::string_view text);

struct IngestConfig {
  std::optional<trace::Window> quiet_window;
  double marker_threshold_mw = 100.0;
  double marker_min_ms = 50.0;
  trace::PowerForm power_form = trace::PowerForm::power;
  std::set<std::string> exclude_segments;
};

struct RunConfig {
  std::uint64_t seed = 0;  // default for fit.seed
  gp::FitConfig fit;
  IngestConfig ingest;
  synthetic::TrendConfig synth;
  std::vector<std::string> defaulted;  // "section.key = value" for every key left out
};

/// Unknown sections or keys are errors.
RunConfig parse_run_config(std::string_view text);

struct TracePlanFile {
  synthetic::TracePlan plan;
  std::string device = "device-1";
};

/// `[trace]` holds TracePlan scalars plus `device` and `cycles` (repeat
/// count); `[segments]` lists `label = duration_s, level_mw[, level_end_mw]`
/// in order. Without segments, `model` and `processor` in `[trace]` select a
/// catalog cycle (`initiation = true` prepends the start-up spike).
TracePlanFile parse_trace_plan(std::string_view text);

bool parse_bool(std::string_view s, std::string_view what);
trace::Window parse_window(std::string_view s);
synthetic::Processor parse_processor(std::string_view s);

}  // namespace epam::config
