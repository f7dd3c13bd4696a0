#include "epam/trace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "epam/error.hpp"
#include "epam/text.hpp"

namespace epam::trace {
namespace {

// Slack for boundary comparisons after clock shifts (seconds).
constexpr double kSpanTolerance = 1e-9;

std::string at_line(std::size_t line) { return " at line " + std::to_string(line); }

double median_of(std::vector<double> v) {
  const auto n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

// Neumaier-compensated running sum.
class Accumulator {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double lerp_at(const PowerSample& a, const PowerSample& b, double t) {
  return a.p_mw + (b.p_mw - a.p_mw) * ((t - a.t) / (b.t - a.t));
}

std::string describe(const std::vector<Pulse>& pulses) {
  std::ostringstream os;
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    if (i) os << ", ";
    os << "[" << pulses[i].start << ", " << pulses[i].end << "]";
  }
  return pulses.empty() ? std::string("none") : os.str();
}

Clock parse_clock(std::string_view s, std::size_t line) {
  if (s == "device") return Clock::device;
  if (s == "monitor") return Clock::monitor;
  throw ValidationError("unknown clock '" + std::string(s) + "'" + at_line(line));
}

const char* clock_name(Clock c) { return c == Clock::device ? "device" : "monitor"; }

}  // namespace

PowerTrace::PowerTrace(std::vector<PowerSample> samples, std::optional<double> nominal_interval)
    : samples_(std::move(samples)) {
  if (samples_.empty()) throw ValidationError("power trace has no samples");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!std::isfinite(s.t) || !std::isfinite(s.p_mw)) {
      throw ValidationError("non-finite power sample at index " + std::to_string(i));
    }
    if (s.p_mw < 0.0) throw ValidationError("negative power at index " + std::to_string(i));
    if (i > 0 && !(s.t > samples_[i - 1].t)) {
      throw ValidationError("timestamps not strictly increasing at index " + std::to_string(i));
    }
  }
  if (nominal_interval) {
    if (!(*nominal_interval > 0.0)) throw ValidationError("nominal interval must be positive");
    nominal_interval_ = *nominal_interval;
  } else if (samples_.size() >= 2) {
    std::vector<double> gaps(samples_.size() - 1);
    for (std::size_t i = 1; i < samples_.size(); ++i) gaps[i - 1] = samples_[i].t - samples_[i - 1].t;
    nominal_interval_ = median_of(std::move(gaps));
  }
}

double PowerTrace::power_at(double t) const {
  if (t < start() || t > end()) throw ValidationError("time outside trace span");
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                                   [](double v, const PowerSample& s) { return v < s.t; });
  if (it == samples_.end()) return samples_.back().p_mw;
  if (it == samples_.begin()) return it->p_mw;
  return lerp_at(*(it - 1), *it, t);
}

PowerForm parse_power_form(std::string_view name) {
  if (name == "power") return PowerForm::power;
  if (name == "current-voltage" || name == "current_voltage") return PowerForm::current_voltage;
  throw ValidationError("unknown power form '" + std::string(name) + "'");
}

PowerTrace parse_power_csv(std::string_view text, PowerForm form) {
  const auto rows = text::lines(text);
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<PowerSample> samples;
  const std::string_view expected =
      form == PowerForm::power ? "t_s,power_mW" : "t_s,current_mA,voltage_V";
  const std::size_t columns = form == PowerForm::power ? 2 : 3;

  for (const auto raw : rows) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    if (!have_header) {
      if (line != expected) {
        throw ValidationError("expected header '" + std::string(expected) + "'" + at_line(line_no));
      }
      have_header = true;
      continue;
    }
    const auto fields = text::split(line, ',');
    if (fields.size() != columns) {
      throw ValidationError("malformed row: expected " + std::to_string(columns) + " fields" +
                            at_line(line_no));
    }
    PowerSample s;
    try {
      s.t = text::parse_double(fields[0], "t_s");
      if (form == PowerForm::power) {
        s.p_mw = text::parse_double(fields[1], "power_mW");
      } else {
        s.p_mw = text::parse_double(fields[1], "current_mA") *
                 text::parse_double(fields[2], "voltage_V");
      }
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("malformed row: ") + e.what() + at_line(line_no));
    }
    if (!std::isfinite(s.t) || !std::isfinite(s.p_mw)) {
      throw ValidationError("malformed row: non-finite value" + at_line(line_no));
    }
    if (s.p_mw < 0.0) throw ValidationError("negative power" + at_line(line_no));
    if (!samples.empty() && !(s.t > samples.back().t)) {
      throw ValidationError("non-monotone timestamp" + at_line(line_no));
    }
    samples.push_back(s);
  }
  if (!have_header) throw ValidationError("empty power file");
  if (samples.empty()) throw ValidationError("power file has no samples");
  return PowerTrace(std::move(samples));
}

std::string write_power_csv(const PowerTrace& trace) {
  std::string out = "t_s,power_mW\n";
  for (const auto& s : trace.samples()) {
    out += text::format_double(s.t);
    out += ',';
    out += text::format_double(s.p_mw);
    out += '\n';
  }
  return out;
}

LatencyLog parse_latency_log(std::string_view text) {
  const auto rows = text::lines(text);
  std::size_t line_no = 0;
  bool have_header = false;
  LatencyLog log;
  std::map<long long, CycleLog> cycles;
  std::map<long long, std::size_t> first_line;

  for (const auto raw : rows) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    if (!have_header) {
      if (line != "cycle_id,segment,start_s,end_s,clock") {
        throw ValidationError("expected header 'cycle_id,segment,start_s,end_s,clock'" +
                              at_line(line_no));
      }
      have_header = true;
      continue;
    }
    const auto f = text::split(line, ',');
    if (f.size() != 5) throw ValidationError("malformed row: expected 5 fields" + at_line(line_no));
    SegmentMark mark;
    long long id = 0;
    try {
      id = text::parse_int(f[0], "cycle_id");
      mark.start = text::parse_double(f[2], "start_s");
      mark.end = text::parse_double(f[3], "end_s");
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("malformed row: ") + e.what() + at_line(line_no));
    }
    mark.label = std::string(f[1]);
    if (mark.label.empty()) throw ValidationError("empty segment label" + at_line(line_no));
    if (!std::isfinite(mark.start) || !std::isfinite(mark.end)) {
      throw ValidationError("non-finite segment time" + at_line(line_no));
    }
    if (!(mark.end > mark.start)) throw ValidationError("segment end <= start" + at_line(line_no));
    const Clock clock = parse_clock(f[4], line_no);

    if (mark.label == kMarkerLabel) {
      if (log.marker) throw ValidationError("duplicate marker row" + at_line(line_no));
      log.marker = std::move(mark);
      log.marker_clock = clock;
      continue;
    }
    auto [it, inserted] = cycles.try_emplace(id);
    if (inserted) {
      it->second.cycle_id = id;
      it->second.clock = clock;
      first_line[id] = line_no;
    } else if (it->second.clock != clock) {
      throw ValidationError("mixed clocks within cycle " + std::to_string(id) + at_line(line_no));
    }
    it->second.marks.push_back(std::move(mark));
  }
  if (!have_header) throw ValidationError("empty latency log");

  for (auto& [id, cycle] : cycles) {
    std::stable_sort(cycle.marks.begin(), cycle.marks.end(),
                     [](const SegmentMark& a, const SegmentMark& b) { return a.start < b.start; });
    for (std::size_t k = 1; k < cycle.marks.size(); ++k) {
      if (cycle.marks[k].start < cycle.marks[k - 1].end) {
        throw ValidationError("overlapping segments '" + cycle.marks[k - 1].label + "' and '" +
                              cycle.marks[k].label + "' in cycle " + std::to_string(id) +
                              " (first row" + at_line(first_line[id]) + ")");
      }
    }
    log.cycles.push_back(std::move(cycle));
  }
  return log;
}

std::string write_latency_log(const LatencyLog& log) {
  std::string out = "cycle_id,segment,start_s,end_s,clock\n";
  auto row = [&out](long long id, const SegmentMark& m, Clock c) {
    out += std::to_string(id) + ',' + m.label + ',' + text::format_double(m.start) + ',' +
           text::format_double(m.end) + ',' + clock_name(c) + '\n';
  };
  if (log.marker) row(0, *log.marker, log.marker_clock);
  for (const auto& c : log.cycles) {
    for (const auto& m : c.marks) row(c.cycle_id, m, c.clock);
  }
  return out;
}

double estimate_base_power(const PowerTrace& trace, Window quiet) {
  if (!(quiet.start < quiet.end)) throw ValidationError("quiet window start must precede end");
  if (quiet.start < trace.start() - kSpanTolerance || quiet.end > trace.end() + kSpanTolerance) {
    throw ValidationError("quiet window outside trace span");
  }
  std::vector<double> values;
  for (const auto& s : trace.samples()) {
    if (s.t >= quiet.start && s.t <= quiet.end) values.push_back(s.p_mw);
  }
  if (values.size() < 10) {
    throw ValidationError("quiet window holds " + std::to_string(values.size()) +
                          " samples; at least 10 required");
  }
  return median_of(std::move(values));
}

std::vector<Pulse> find_pulses(const PowerTrace& trace, const MarkerSpec& spec) {
  const double level = spec.base_mw + spec.threshold_mw;
  const double min_len = spec.min_duration_s - 0.5 * trace.nominal_interval();
  std::vector<Pulse> pulses;
  std::optional<Pulse> run;
  for (const auto& s : trace.samples()) {
    if (s.p_mw > level) {
      if (!run) run = Pulse{s.t, s.t};
      run->end = s.t;
    } else if (run) {
      if (run->duration() >= min_len) pulses.push_back(*run);
      run.reset();
    }
  }
  if (run && run->duration() >= min_len) pulses.push_back(*run);
  return pulses;
}

double align_clocks(const PowerTrace& trace, const LatencyLog& log, const MarkerSpec& spec) {
  if (!log.marker) throw ValidationError("latency log has no marker row");
  const auto pulses = find_pulses(trace, spec);
  const double logged = log.marker->end - log.marker->start;
  const double slack = std::max(2.0 * trace.nominal_interval(), 0.1 * logged);
  std::vector<Pulse> matches;
  for (const auto& p : pulses) {
    if (std::abs(p.duration() - logged) <= slack) matches.push_back(p);
  }
  if (matches.empty()) {
    throw ValidationError("no marker pulse found; qualifying pulses: " + describe(pulses));
  }
  // The first match is the marker. A later match is still a rival if it
  // begins before the first logged segment would, under the first match's offset.
  const double offset = matches.front().start - log.marker->start;
  std::optional<double> first_mark;
  for (const auto& c : log.cycles) {
    if (c.clock != log.marker_clock) continue;
    for (const auto& m : c.marks) {
      if (m.start > log.marker->end && (!first_mark || m.start < *first_mark)) first_mark = m.start;
    }
  }
  for (std::size_t i = 1; i < matches.size(); ++i) {
    if (!first_mark || matches[i].start < *first_mark + offset - slack) {
      throw ValidationError("ambiguous marker pulses: " + describe(matches));
    }
  }
  return offset;
}

double integrate(const PowerTrace& trace, double a, double b) {
  if (!(a < b)) throw ValidationError("integration interval must have start < end");
  if (a < trace.start() - kSpanTolerance || b > trace.end() + kSpanTolerance) {
    throw ValidationError("integration interval outside trace span");
  }
  a = std::max(a, trace.start());
  b = std::min(b, trace.end());
  if (!(a < b)) return 0.0;

  const auto s = trace.samples();
  const auto by_time = [](const PowerSample& x, double v) { return x.t < v; };
  // i: first sample strictly after a; j: first sample at or after b.
  const auto i = static_cast<std::size_t>(
      std::upper_bound(s.begin(), s.end(), a, [](double v, const PowerSample& x) { return v < x.t; }) -
      s.begin());
  const auto j = static_cast<std::size_t>(std::lower_bound(s.begin(), s.end(), b, by_time) - s.begin());

  const double pa = lerp_at(s[i - 1], s[i], a);
  const double pb = lerp_at(s[j - 1], s[j], b);
  if (i == j) return 0.5 * (pa + pb) * (b - a) / 1000.0;

  Accumulator acc;
  acc.add(0.5 * (pa + s[i].p_mw) * (s[i].t - a));
  for (std::size_t k = i; k + 1 < j; ++k) {
    acc.add(0.5 * (s[k].p_mw + s[k + 1].p_mw) * (s[k + 1].t - s[k].t));
  }
  acc.add(0.5 * (s[j - 1].p_mw + pb) * (b - s[j - 1].t));
  return acc.value() / 1000.0;
}

CycleEnergies cycle_energies(const PowerTrace& trace, const LatencyLog& log, double base_mw,
                             double offset, const std::set<std::string>& excluded) {
  CycleEnergies out;
  for (const auto& cycle : log.cycles) {
    const double shift = cycle.clock == Clock::device ? offset : 0.0;
    CycleEnergy ce;
    ce.cycle_id = cycle.cycle_id;
    ce.base_mw = base_mw;
    for (const auto& mark : cycle.marks) {
      if (excluded.count(mark.label)) continue;
      const double s = mark.start + shift;
      const double e = mark.end + shift;
      if (s < trace.start() - kSpanTolerance || e > trace.end() + kSpanTolerance) {
        throw ValidationError("segment '" + mark.label + "' of cycle " +
                              std::to_string(cycle.cycle_id) + " lies outside the trace after alignment");
      }
      double net = integrate(trace, s, e) - base_mw * (e - s) / 1000.0;
      if (net < 0.0) {
        net = 0.0;
        ++out.clamped_segments;
      }
      ce.segments.push_back({mark.label, s, e, net});
      ce.total_j += net;
    }
    out.cycles.push_back(std::move(ce));
  }
  return out;
}

std::string write_cycle_energies(const CycleEnergies& energies) {
  std::string out = "cycle_id,segment,duration_s,energy_j\n";
  for (const auto& c : energies.cycles) {
    double duration = 0.0;
    for (const auto& s : c.segments) {
      out += std::to_string(c.cycle_id) + ',' + s.label + ',' + text::format_double(s.end - s.start) +
             ',' + text::format_double(s.energy_j) + '\n';
      duration += s.end - s.start;
    }
    out += std::to_string(c.cycle_id) + ",total," + text::format_double(duration) + ',' +
           text::format_double(c.total_j) + '\n';
  }
  return out;
}

}  // namespace epam::trace
