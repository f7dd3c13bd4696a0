#pragma once

// Built-in device and DNN model catalogs. Hardware columns mirror the
// published device and model tables; the energy/latency calibration columns
// are generator settings anchored to the measured per-cycle figures.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epam::catalog {

struct DeviceProfile {
  std::string name;  // "device-1" ... "device-4"
  std::string soc;
  double cpu_freq_max_ghz = 0.0;
  int cores = 0;
  double ram_gb = 0.0;
  double base_power_mw = 0.0;
  double device_scale = 1.0;   // energy multiplier relative to device-1
  double latency_scale = 1.0;  // latency multiplier relative to device-1
  double nnapi_energy_factor = 1.0;
  double nnapi_latency_factor = 1.0;
};

struct ModelProfile {
  std::string name;
  std::string app_type;  // vision | nlp | speech
  int layers = 0;
  double model_size_mb = 0.0;
  bool quantized = false;
  bool supports_gpu = false;
  bool nnapi_regression = false;  // NNAPI raises latency and energy
  // Reference cycle on device-1 with a single-thread CPU. For quantized
  // models these are the float-equivalent values; the quantization factors
  // are applied on top.
  double base_inference_ms = 0.0;
  double base_processing_ms = 0.0;
  double base_energy_j = 0.0;
  double inference_energy_share = 0.5;
};

const std::vector<DeviceProfile>& devices();
const std::vector<ModelProfile>& models();

std::optional<DeviceProfile> find_device(std::string_view name);
std::optional<ModelProfile> find_model(std::string_view name);

}  // namespace epam::catalog
