#pragma once

// Seeded generators: cycle datasets shaped by the device/model catalogs and
// the measured processor and quantization trends, GP prior draws, and
// power traces with matching latency logs and analytic ground truth.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "epam/catalog.hpp"
#include "epam/dataset.hpp"
#include "epam/gpr.hpp"
#include "epam/trace.hpp"

namespace epam::synthetic {

struct TrendConfig {
  double quant_energy_factor = 0.75;
  double quant_latency_factor = 0.87;
  double gpu_vs_cpu1_energy_factor = 0.73;
  double gpu_vs_cpu4_energy_factor = 0.75;
  double gpu_vs_cpu1_latency_factor = 0.92;
  double cpu4_vs_cpu1_latency_factor = 0.96;
  double quant_multithread_energy_factor = 1.03;
  double nnapi_regression_energy_factor = 1.45;
  double nnapi_regression_latency_factor = 1.40;
  double nnapi_speech_energy_factor = 0.70;
  double nnapi_speech_latency_factor = 0.75;
  double noise_cv = 0.05;         // shared by energy and latencies of a cycle
  double measurement_cv = 0.01;   // energy only
  double memory_cv = 0.02;
  double memory_base_mb = 60.0;
  double memory_slope = 3.0;      // runtime MB per MB of model size
  double gpu_memory_factor = 1.15;

  void validate() const;
};

enum class Processor { cpu1, cpu4, gpu, nnapi };

std::string_view source_name(Processor p);
int thread_count(Processor p);
const std::vector<Processor>& all_processors();
bool supports(const catalog::ModelProfile& model, Processor p);

struct Condition {
  catalog::DeviceProfile device;
  catalog::ModelProfile model;
  Processor processor = Processor::cpu1;
};

/// Expected (noise-free) record for a condition.
dataset::CycleRecord noiseless_record(const Condition& c, const TrendConfig& trends);

struct SampleOptions {
  std::vector<catalog::DeviceProfile> devices = catalog::devices();
  std::vector<catalog::ModelProfile> models = catalog::models();
  std::vector<Processor> processors = all_processors();
};

struct SampledRecords {
  std::vector<dataset::CycleRecord> records;
  std::vector<double> noiseless_energy;
  std::vector<std::string> device_names;
};

/// Uniform device and model, then a uniform processor among those the model
/// supports. Deterministic per seed.
SampledRecords sample_records(std::size_t n, const SampleOptions& options, const TrendConfig& trends,
                              std::uint64_t seed);

/// Float/quantized pairs under identical single-thread CPU conditions with
/// independent noise: first = float records, second = quantized.
std::pair<SampledRecords, SampledRecords> sample_quantization_pairs(
    std::size_t n, const std::vector<catalog::DeviceProfile>& devices, const TrendConfig& trends,
    std::uint64_t seed);

struct PriorDraw {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

/// X uniform in [-2, 2]^d; y ~ N(0, K(X) + noise_var I). noise_var may be 0 here.
PriorDraw sample_gp_prior(std::size_t n, std::size_t d, const gp::Hyperparams& h, std::uint64_t seed);

/// Draws y from the prior at supplied inputs; duplicate rows share one latent value.
Eigen::VectorXd sample_gp_prior_at(const Eigen::MatrixXd& X, const gp::Hyperparams& h, std::uint64_t seed);

struct PlanSegment {
  std::string label;
  double duration_s = 0.0;
  double level_mw = 0.0;                  // above base power
  std::optional<double> level_end_mw;     // linear ramp across the segment
};

struct TracePlan {
  std::vector<std::vector<PlanSegment>> cycles;
  double interval_s = trace::kNominalInterval;
  double lead_s = 0.5;  // quiet capture before the marker
  bool marker = true;
  double marker_level_mw = 300.0;
  double marker_duration_s = 0.1;
  double marker_gap_s = 0.3;
  double cycle_gap_s = 0.2;
  double tail_s = 0.2;
  double noise_mw = 0.0;
  double clock_offset_s = 0.0;  // device_time + offset = monitor_time
  trace::Clock log_clock = trace::Clock::device;
};

struct TraceEmission {
  std::string power_csv;
  std::string latency_csv;
  trace::CycleEnergies ground_truth;  // monitor clock, all segments
  double base_power_mw = 0.0;
  double clock_offset_s = 0.0;
  trace::Window quiet_window;
};

/// Power is base + piecewise-linear segment levels sampled on the plan grid;
/// each level change completes at its boundary sample. Ground truth is the
/// closed-form integral of the noise-free curve.
TraceEmission emit_power_trace(const TracePlan& plan, const catalog::DeviceProfile& device, std::uint64_t seed);

/// Processing and inference segments whose noise-free net energy matches the
/// condition's expected cycle energy; optionally preceded by an initiation spike.
std::vector<PlanSegment> cycle_plan(const Condition& c, const TrendConfig& trends, bool with_initiation = false);

}  // namespace epam::synthetic
