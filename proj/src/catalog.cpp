#include "epam/catalog.hpp"

#include <algorithm>

namespace epam::catalog {

const std::vector<DeviceProfile>& devices() {
  // name, soc, GHz, cores, RAM, base mW, energy scale, latency scale, NNAPI E, NNAPI L
  static const std::vector<DeviceProfile> table = {
      {"device-1", "Kirin 9000", 3.13, 8, 8.0, 210.0, 1.0, 1.0, 0.85, 0.80},
      {"device-2", "Snapdragon 865", 2.84, 8, 8.0, 190.0, 0.93 * 0.97, 0.93, 0.87, 0.82},
      {"device-3", "Helio P70", 2.0, 8, 4.0, 160.0, 1.18 * 0.85, 1.18, 1.08, 1.10},
      {"device-4", "Snapdragon 665", 2.0, 8, 4.0, 150.0, 1.36 * 0.85, 1.36, 1.10, 1.12},
  };
  return table;
}

const std::vector<ModelProfile>& models() {
  // name, app, layers, MB, quantized, GPU, NNAPI regression, inf ms, proc ms, J, inference share
  static const std::vector<ModelProfile> table = {
      {"MobileNetV1-Float", "vision", 31, 16.9, false, true, false, 55.0, 30.0, 0.30, 0.6},
      {"MobileNetV1-Quant", "vision", 31, 4.3, true, false, false, 55.0, 30.0, 0.30, 0.6},
      {"EfficientNetLite-Float", "vision", 62, 18.6, false, true, false, 80.0, 30.0, 0.42, 0.65},
      {"EfficientNetLite-Quant", "vision", 65, 5.4, true, false, true, 80.0, 30.0, 0.42, 0.65},
      {"NASNetMobile-Float", "vision", 663, 21.4, false, true, true, 190.0, 30.0, 0.95, 0.8},
      {"MobileBERT-QA", "nlp", 2541, 100.7, false, false, false, 1150.0, 2400.0, 5.7, 0.45},
      {"TF-ASR", "speech", 8, 3.8, false, false, false, 45.0, 35.0, 0.16185, 0.55},
  };
  return table;
}

std::optional<DeviceProfile> find_device(std::string_view name) {
  const auto& d = devices();
  const auto it = std::find_if(d.begin(), d.end(), [&](const DeviceProfile& p) { return p.name == name; });
  if (it == d.end()) return std::nullopt;
  return *it;
}

std::optional<ModelProfile> find_model(std::string_view name) {
  const auto& m = models();
  const auto it = std::find_if(m.begin(), m.end(), [&](const ModelProfile& p) { return p.name == name; });
  if (it == m.end()) return std::nullopt;
  return *it;
}

}  // namespace epam::catalog
