#include "epam/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <Eigen/Cholesky>

#include "epam/error.hpp"
#include "epam/random.hpp"
#include "epam/text.hpp"

namespace epam::synthetic {
namespace {

using catalog::DeviceProfile;
using catalog::ModelProfile;

double energy_factor(const Condition& c, const TrendConfig& t) {
  switch (c.processor) {
    case Processor::cpu1:
      return 1.0;
    case Processor::cpu4:
      return c.model.quantized ? t.quant_multithread_energy_factor
                               : t.gpu_vs_cpu1_energy_factor / t.gpu_vs_cpu4_energy_factor;
    case Processor::gpu:
      return t.gpu_vs_cpu1_energy_factor;
    case Processor::nnapi:
      if (c.model.nnapi_regression) return t.nnapi_regression_energy_factor;
      if (c.model.app_type == "speech") return t.nnapi_speech_energy_factor;
      return c.device.nnapi_energy_factor;
  }
  return 1.0;
}

double latency_factor(const Condition& c, const TrendConfig& t) {
  switch (c.processor) {
    case Processor::cpu1:
      return 1.0;
    case Processor::cpu4:
      return t.cpu4_vs_cpu1_latency_factor;
    case Processor::gpu:
      return t.gpu_vs_cpu1_latency_factor;
    case Processor::nnapi:
      if (c.model.nnapi_regression) return t.nnapi_regression_latency_factor;
      if (c.model.app_type == "speech") return t.nnapi_speech_latency_factor;
      return c.device.nnapi_latency_factor;
  }
  return 1.0;
}

std::string partner_name(const std::string& float_name) {
  const std::string suffix = "-Float";
  if (float_name.size() < suffix.size() || float_name.compare(float_name.size() - suffix.size(), suffix.size(), suffix) != 0) {
    return {};
  }
  return float_name.substr(0, float_name.size() - suffix.size()) + "-Quant";
}

void append(SampledRecords& out, dataset::CycleRecord r, double expected, const std::string& device) {
  out.records.push_back(std::move(r));
  out.noiseless_energy.push_back(expected);
  out.device_names.push_back(device);
}

dataset::CycleRecord noisy_record(const Condition& c, const TrendConfig& trends, std::mt19937_64& rng) {
  auto r = noiseless_record(c, trends);
  const double shared = random::lognormal_factor(rng, trends.noise_cv);
  const double measurement = random::lognormal_factor(rng, trends.measurement_cv);
  const double memory = random::lognormal_factor(rng, trends.memory_cv);
  r.energy_j *= shared * measurement;
  r.processing_ms *= shared;
  r.inference_ms *= shared;
  r.memory_mb *= memory;
  return r;
}

long long to_samples(double seconds, double interval, const char* what) {
  const auto k = std::llround(seconds / interval);
  if (seconds < 0.0 || (seconds > 0.0 && k < 1)) {
    throw ValidationError(std::string(what) + " must be a non-negative multiple of the sample interval");
  }
  return k;
}

}  // namespace

void TrendConfig::validate() const {
  const double factors[] = {quant_energy_factor,           quant_latency_factor,
                            gpu_vs_cpu1_energy_factor,     gpu_vs_cpu4_energy_factor,
                            gpu_vs_cpu1_latency_factor,    cpu4_vs_cpu1_latency_factor,
                            quant_multithread_energy_factor, nnapi_regression_energy_factor,
                            nnapi_regression_latency_factor, nnapi_speech_energy_factor,
                            nnapi_speech_latency_factor,   gpu_memory_factor};
  for (double f : factors) {
    if (!(f > 0.0 && f < 2.0)) throw ValidationError("trend factors must lie in (0, 2)");
  }
  if (!(noise_cv >= 0.0) || !(measurement_cv >= 0.0) || !(memory_cv >= 0.0)) {
    throw ValidationError("coefficients of variation must be non-negative");
  }
  if (!(memory_base_mb >= 0.0) || !(memory_slope >= 0.0)) throw ValidationError("memory model must be non-negative");
}

std::string_view source_name(Processor p) {
  switch (p) {
    case Processor::cpu1:
    case Processor::cpu4:
      return "CPU";
    case Processor::gpu:
      return "GPU";
    case Processor::nnapi:
      return "NNAPI";
  }
  return "CPU";
}

int thread_count(Processor p) { return p == Processor::cpu4 ? 4 : 1; }

const std::vector<Processor>& all_processors() {
  static const std::vector<Processor> v = {Processor::cpu1, Processor::cpu4, Processor::gpu, Processor::nnapi};
  return v;
}

bool supports(const ModelProfile& model, Processor p) { return p != Processor::gpu || model.supports_gpu; }

dataset::CycleRecord noiseless_record(const Condition& c, const TrendConfig& trends) {
  const auto& m = c.model;
  const auto& d = c.device;
  dataset::CycleRecord r;
  r.soc = d.soc;
  r.cpu_freq_ghz = d.cpu_freq_max_ghz;
  r.cores = d.cores;
  r.ram_gb = d.ram_gb;
  r.source = std::string(source_name(c.processor));
  r.threads = thread_count(c.processor);
  r.app_type = m.app_type;
  r.dnn_model = m.name;
  r.dnn_layers = m.layers;
  r.memory_mb = (trends.memory_base_mb + trends.memory_slope * m.model_size_mb) *
                (c.processor == Processor::gpu ? trends.gpu_memory_factor : 1.0);
  r.processing_ms = m.base_processing_ms * d.latency_scale;
  r.inference_ms = m.base_inference_ms * (m.quantized ? trends.quant_latency_factor : 1.0) * d.latency_scale *
                   latency_factor(c, trends);
  r.energy_j = m.base_energy_j * (m.quantized ? trends.quant_energy_factor : 1.0) * d.device_scale *
               energy_factor(c, trends);
  return r;
}

SampledRecords sample_records(std::size_t n, const SampleOptions& options, const TrendConfig& trends,
                              std::uint64_t seed) {
  trends.validate();
  if (n < 1) throw ValidationError("sample_records needs n >= 1");
  if (options.devices.empty()) throw ValidationError("empty device catalog");
  if (options.processors.empty()) throw ValidationError("no processors allowed");
  std::vector<ModelProfile> usable;
  for (const auto& m : options.models) {
    if (std::any_of(options.processors.begin(), options.processors.end(), [&](Processor p) { return supports(m, p); })) {
      usable.push_back(m);
    }
  }
  if (usable.empty()) throw ValidationError("empty model catalog for the allowed processors");

  std::mt19937_64 rng(seed);
  SampledRecords out;
  for (std::size_t i = 0; i < n; ++i) {
    Condition c;
    c.device = options.devices[random::bounded(rng, options.devices.size())];
    c.model = usable[random::bounded(rng, usable.size())];
    std::vector<Processor> allowed;
    for (auto p : options.processors) {
      if (supports(c.model, p)) allowed.push_back(p);
    }
    c.processor = allowed[random::bounded(rng, allowed.size())];
    const double expected = noiseless_record(c, trends).energy_j;
    append(out, noisy_record(c, trends, rng), expected, c.device.name);
  }
  return out;
}

std::pair<SampledRecords, SampledRecords> sample_quantization_pairs(std::size_t n,
                                                                    const std::vector<DeviceProfile>& devices,
                                                                    const TrendConfig& trends, std::uint64_t seed) {
  trends.validate();
  if (devices.empty()) throw ValidationError("empty device catalog");
  std::vector<std::pair<ModelProfile, ModelProfile>> pairs;
  for (const auto& m : catalog::models()) {
    if (m.quantized) continue;
    if (const auto q = catalog::find_model(partner_name(m.name))) pairs.emplace_back(m, *q);
  }
  if (pairs.empty()) throw ValidationError("catalog has no float/quantized pairs");

  std::mt19937_64 rng(seed);
  SampledRecords floats;
  SampledRecords quants;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& device = devices[random::bounded(rng, devices.size())];
    const auto& pair = pairs[random::bounded(rng, pairs.size())];
    const Condition cf{device, pair.first, Processor::cpu1};
    const Condition cq{device, pair.second, Processor::cpu1};
    const double ef = noiseless_record(cf, trends).energy_j;
    const double eq = noiseless_record(cq, trends).energy_j;
    append(floats, noisy_record(cf, trends, rng), ef, device.name);
    append(quants, noisy_record(cq, trends, rng), eq, device.name);
  }
  return {std::move(floats), std::move(quants)};
}

Eigen::VectorXd sample_gp_prior_at(const Eigen::MatrixXd& X, const gp::Hyperparams& h, std::uint64_t seed) {
  if (!(h.signal_var > 0.0) || !(h.noise_var >= 0.0)) throw ValidationError("invalid prior hyperparameters");
  if (X.cols() != h.dims()) throw ValidationError("prior inputs do not match hyperparameter dimension");
  const auto n = X.rows();

  // Deduplicate rows so repeated inputs share one latent value exactly.
  std::map<std::vector<double>, Eigen::Index> seen;
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> unique_rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> key(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index m = 0; m < X.cols(); ++m) key[static_cast<std::size_t>(m)] = X(i, m);
    const auto [it, inserted] = seen.emplace(std::move(key), static_cast<Eigen::Index>(unique_rows.size()));
    if (inserted) unique_rows.push_back(i);
    slot[static_cast<std::size_t>(i)] = it->second;
  }
  Eigen::MatrixXd U(static_cast<Eigen::Index>(unique_rows.size()), X.cols());
  for (std::size_t k = 0; k < unique_rows.size(); ++k) U.row(static_cast<Eigen::Index>(k)) = X.row(unique_rows[k]);

  const auto factor = gp::factorize(gp::kernel_matrix(U, h), h.signal_var);
  std::mt19937_64 rng(seed);
  Eigen::VectorXd z(U.rows());
  for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = random::standard_normal(rng);
  const Eigen::VectorXd f = factor.lower.triangularView<Eigen::Lower>() * z;

  Eigen::VectorXd y(n);
  const double noise_sd = std::sqrt(h.noise_var);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = f(slot[static_cast<std::size_t>(i)]) + noise_sd * random::standard_normal(rng);
  }
  return y;
}

PriorDraw sample_gp_prior(std::size_t n, std::size_t d, const gp::Hyperparams& h, std::uint64_t seed) {
  if (n < 1) throw ValidationError("prior draw needs n >= 1");
  std::mt19937_64 rng(seed);
  PriorDraw draw;
  draw.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < draw.X.rows(); ++i) {
    for (Eigen::Index m = 0; m < draw.X.cols(); ++m) draw.X(i, m) = random::uniform(rng, -2.0, 2.0);
  }
  draw.y = sample_gp_prior_at(draw.X, h, rng());
  return draw;
}

TraceEmission emit_power_trace(const TracePlan& plan, const DeviceProfile& device, std::uint64_t seed) {
  const double dt = plan.interval_s;
  if (!(dt > 0.0)) throw ValidationError("sample interval must be positive");
  const double rate = 1.0 / dt;
  const double base = device.base_power_mw;

  // Sample-index timeline in the monitor clock.
  struct Span {
    long long cycle;
    std::string label;
    long long a, b;  // first and last sample
    double v0, v1;
  };
  std::vector<Span> spans;
  long long k = to_samples(plan.lead_s, dt, "lead");
  if (k < 10) throw ValidationError("lead must hold at least 10 samples for base estimation");
  const long long quiet_end = k - 2;
  std::optional<std::pair<long long, long long>> marker;
  if (plan.marker) {
    const long long len = to_samples(plan.marker_duration_s, dt, "marker duration");
    marker = std::make_pair(k, k + len);
    k += len + std::max<long long>(1, to_samples(plan.marker_gap_s, dt, "marker gap"));
  }
  const long long gap = std::max<long long>(1, to_samples(plan.cycle_gap_s, dt, "cycle gap"));
  for (std::size_t ci = 0; ci < plan.cycles.size(); ++ci) {
    for (const auto& seg : plan.cycles[ci]) {
      const long long len = to_samples(seg.duration_s, dt, "segment duration");
      if (len < 1) throw ValidationError("segment '" + seg.label + "' is shorter than one sample");
      if (seg.label.empty() || seg.label == trace::kMarkerLabel) throw ValidationError("invalid segment label");
      spans.push_back({static_cast<long long>(ci) + 1, seg.label, k, k + len, seg.level_mw,
                       seg.level_end_mw.value_or(seg.level_mw)});
      k += len;
    }
    k += gap;
  }
  const long long total = k + std::max<long long>(1, to_samples(plan.tail_s, dt, "tail"));

  // Noise-free level above base at every sample. A segment spans samples
  // a..b inclusive; where segments touch, the later one owns the shared sample.
  std::vector<double> level(static_cast<std::size_t>(total + 1), 0.0);
  if (marker) {
    for (long long i = marker->first; i <= marker->second; ++i) level[static_cast<std::size_t>(i)] = plan.marker_level_mw;
  }
  for (const auto& s : spans) {
    for (long long i = s.a; i <= s.b; ++i) {
      const double frac = static_cast<double>(i - s.a) / static_cast<double>(s.b - s.a);
      level[static_cast<std::size_t>(i)] = s.v0 + (s.v1 - s.v0) * frac;
    }
  }

  TraceEmission out;
  out.base_power_mw = base;
  out.clock_offset_s = plan.clock_offset_s;
  out.quiet_window = {0.0, static_cast<double>(quiet_end) / rate};

  // Closed form on the piecewise-linear curve: the segment's own ramp up to
  // sample b-1, then the last interval towards whatever sample b holds.
  std::map<long long, trace::CycleEnergy> truth;
  for (std::size_t ci = 0; ci < plan.cycles.size(); ++ci) {
    auto& ce = truth[static_cast<long long>(ci) + 1];
    ce.cycle_id = static_cast<long long>(ci) + 1;
    ce.base_mw = base;
  }
  for (const auto& s : spans) {
    const double len = static_cast<double>(s.b - s.a);
    const double w = s.v0 + (s.v1 - s.v0) * (len - 1.0) / len;
    const double own = 0.5 * (s.v0 + w) * (len - 1.0) / rate;
    const double edge = 0.5 * (w + level[static_cast<std::size_t>(s.b)]) / rate;
    const double joules = (own + edge) / 1000.0;
    auto& ce = truth[s.cycle];
    ce.segments.push_back({s.label, static_cast<double>(s.a) / rate, static_cast<double>(s.b) / rate, joules});
    ce.total_j += joules;
  }
  for (auto& [id, ce] : truth) out.ground_truth.cycles.push_back(std::move(ce));

  std::mt19937_64 rng(seed);
  std::string power = "t_s,power_mW\n";
  power.reserve(static_cast<std::size_t>(total + 1) * 24);
  for (long long i = 0; i <= total; ++i) {
    double p = base + level[static_cast<std::size_t>(i)];
    if (plan.noise_mw > 0.0) p = std::max(0.0, p + plan.noise_mw * random::standard_normal(rng));
    power += text::format_double(static_cast<double>(i) / rate);
    power += ',';
    power += text::format_double(p);
    power += '\n';
  }
  out.power_csv = std::move(power);

  const bool device_clock = plan.log_clock == trace::Clock::device;
  const double shift = device_clock ? plan.clock_offset_s : 0.0;
  trace::LatencyLog log;
  log.marker_clock = plan.log_clock;
  if (marker) {
    log.marker = trace::SegmentMark{std::string(trace::kMarkerLabel),
                                    static_cast<double>(marker->first) / rate - shift,
                                    static_cast<double>(marker->second) / rate - shift};
  }
  for (const auto& ce : out.ground_truth.cycles) {
    if (ce.segments.empty()) continue;
    trace::CycleLog cl;
    cl.cycle_id = ce.cycle_id;
    cl.clock = plan.log_clock;
    for (const auto& s : ce.segments) cl.marks.push_back({s.label, s.start - shift, s.end - shift});
    log.cycles.push_back(std::move(cl));
  }
  out.latency_csv = trace::write_latency_log(log);
  return out;
}

std::vector<PlanSegment> cycle_plan(const Condition& c, const TrendConfig& trends, bool with_initiation) {
  const auto r = noiseless_record(c, trends);
  const double share = c.model.inference_energy_share;
  const double proc_s = r.processing_ms / 1000.0;
  const double inf_s = r.inference_ms / 1000.0;
  std::vector<PlanSegment> plan;
  if (with_initiation) plan.push_back({"initiation", 0.03, 1200.0, std::nullopt});
  plan.push_back({"processing", proc_s, (1.0 - share) * r.energy_j / proc_s * 1000.0, std::nullopt});
  plan.push_back({"inference", inf_s, share * r.energy_j / inf_s * 1000.0, std::nullopt});
  return plan;
}

}  // namespace epam::synthetic
