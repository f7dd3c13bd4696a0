#pragma once

// Power-monitor ingestion: parse captures and latency logs, align the two
// clocks through a marker pulse, and integrate net energy per segment.

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace epam::trace {

inline constexpr double kNominalInterval = 0.0002;  // seconds

struct PowerSample {
  double t = 0.0;     // seconds since capture start
  double p_mw = 0.0;  // milliwatts
};

/// Immutable, strictly time-ordered power capture.
class PowerTrace {
 public:
  /// Validates ordering and sign. When `nominal_interval` is not given it is
  /// taken as the median spacing of the samples.
  explicit PowerTrace(std::vector<PowerSample> samples,
                      std::optional<double> nominal_interval = std::nullopt);

  std::span<const PowerSample> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  double nominal_interval() const { return nominal_interval_; }
  double start() const { return samples_.front().t; }
  double end() const { return samples_.back().t; }

  /// Linear interpolation of power at `t` inside the span.
  double power_at(double t) const;

 private:
  std::vector<PowerSample> samples_;
  double nominal_interval_ = kNominalInterval;
};

enum class PowerForm {
  power,            // t_s,power_mW
  current_voltage,  // t_s,current_mA,voltage_V
};

PowerForm parse_power_form(std::string_view name);

/// Parses the monitor CSV. Errors carry the 1-based line number.
PowerTrace parse_power_csv(std::string_view text, PowerForm form = PowerForm::power);
std::string write_power_csv(const PowerTrace& trace);

enum class Clock { device, monitor };

struct SegmentMark {
  std::string label;
  double start = 0.0;
  double end = 0.0;
};

struct CycleLog {
  long long cycle_id = 0;
  std::vector<SegmentMark> marks;  // ordered by start, non-overlapping
  Clock clock = Clock::device;
};

/// Reserved segment label carrying the device-clock time of the sync pulse.
inline constexpr std::string_view kMarkerLabel = "marker";

struct LatencyLog {
  std::vector<CycleLog> cycles;  // ascending cycle_id
  std::optional<SegmentMark> marker;
  Clock marker_clock = Clock::device;
};

LatencyLog parse_latency_log(std::string_view text);
std::string write_latency_log(const LatencyLog& log);

struct Window {
  double start = 0.0;
  double end = 0.0;
};

/// Median power over a quiet window holding at least 10 samples.
double estimate_base_power(const PowerTrace& trace, Window quiet);

struct MarkerSpec {
  double base_mw = 0.0;
  double threshold_mw = 100.0;   // above base
  double min_duration_s = 0.05;
};

/// A run of samples held above base + threshold.
struct Pulse {
  double start = 0.0;
  double end = 0.0;
  double duration() const { return end - start; }
};

std::vector<Pulse> find_pulses(const PowerTrace& trace, const MarkerSpec& spec);

/// Returns `offset` with device_time + offset = monitor_time. The marker is
/// the first qualifying pulse whose duration matches the logged marker
/// duration. No match is an error, as is a second match starting before the
/// first logged segment; both list the candidates.
double align_clocks(const PowerTrace& trace, const LatencyLog& log, const MarkerSpec& spec);

/// Trapezoidal energy in joules over [start, end], interpolating linearly at
/// both boundaries.
double integrate(const PowerTrace& trace, double start, double end);

struct SegmentEnergy {
  std::string label;
  double start = 0.0;  // monitor clock
  double end = 0.0;
  double energy_j = 0.0;  // net of base power, clamped at zero
};

struct CycleEnergy {
  long long cycle_id = 0;
  std::vector<SegmentEnergy> segments;
  double total_j = 0.0;
  double base_mw = 0.0;
};

struct CycleEnergies {
  std::vector<CycleEnergy> cycles;
  std::size_t clamped_segments = 0;
};

/// Net energy of every logged segment. Device-clock cycles are shifted by
/// `offset`; labels in `excluded` are left out of both segments and totals.
CycleEnergies cycle_energies(const PowerTrace& trace, const LatencyLog& log, double base_mw,
                             double offset, const std::set<std::string>& excluded = {});

/// Long-format CSV: cycle_id,segment,duration_s,energy_j with a `total` row per cycle.
std::string write_cycle_energies(const CycleEnergies& energies);

}  // namespace epam::trace
