#pragma once

// Cycle records, the feature schema, design-matrix encoding and splits.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace epam::dataset {

enum class FeatureKind { numeric, categorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::string units;
};

struct FeatureSchema {
  std::vector<FeatureSpec> features;
  std::string target = "energy_j";
  std::string target_units = "J";

  /// The twelve-feature layout matching the dataset CSV columns.
  static FeatureSchema standard();

  /// Names unique and known to CycleRecord, kinds consistent with the record field.
  void validate() const;
};

/// One application cycle. Column names in the CSV follow the member names.
struct CycleRecord {
  std::string soc;
  double cpu_freq_ghz = 0.0;
  double cores = 0.0;
  double ram_gb = 0.0;
  std::string source;  // CPU | GPU | NNAPI
  double threads = 1.0;
  std::string app_type;  // vision | nlp | speech
  std::string dnn_model;
  double dnn_layers = 0.0;
  double memory_mb = 0.0;
  double processing_ms = 0.0;
  double inference_ms = 0.0;
  double energy_j = 0.0;

  friend bool operator==(const CycleRecord&, const CycleRecord&) = default;
};

inline constexpr std::string_view kDatasetHeader =
    "soc,cpu_freq_ghz,cores,ram_gb,source,threads,app_type,dnn_model,dnn_layers,memory_mb,"
    "processing_ms,inference_ms,energy_j";

/// Throws ValidationError if the record breaks a field invariant.
void validate(const CycleRecord& r);

/// Parses the dataset CSV; errors name the offending line.
std::vector<CycleRecord> load_records(std::string_view text);
std::string write_records(const std::vector<CycleRecord>& records);

/// Parses one data row (no header).
CycleRecord parse_record_row(std::string_view line, std::size_t line_no);

double numeric_value(const CycleRecord& r, std::string_view feature);
const std::string& categorical_value(const CycleRecord& r, std::string_view feature);

struct NumericColumn {
  std::string name;
  std::size_t column = 0;
  double mean = 0.0;
  double stddev = 1.0;
};

struct CategoricalBlock {
  std::string name;
  std::size_t offset = 0;
  std::vector<std::string> levels;  // sorted
};

/// Standardized design matrix plus everything needed to encode new records
/// the same way.
struct EncodedDesign {
  FeatureSchema schema;
  Eigen::MatrixXd matrix;  // n x d
  Eigen::VectorXd targets;  // standardized
  std::vector<std::string> column_names;
  std::vector<NumericColumn> numeric;
  std::vector<CategoricalBlock> categorical;
  std::vector<std::string> dropped_constant;
  double target_mean = 0.0;
  double target_std = 1.0;

  std::size_t dims() const { return column_names.size(); }
  double destandardize(double z) const { return z * target_std + target_mean; }
};

struct EncodedRow {
  Eigen::VectorXd x;
  std::vector<std::string> unseen_features;  // categorical features with an unseen level
  bool unseen() const { return !unseen_features.empty(); }
};

/// Numerics to zero mean, unit population variance; categoricals one-hot
/// over sorted levels; constant numerics dropped. Requires >= 2 records and
/// a non-constant target.
EncodedDesign encode(const std::vector<CycleRecord>& records,
                     const FeatureSchema& schema = FeatureSchema::standard());

/// Applies a fitted encoding; unseen levels produce an all-zero block.
EncodedRow apply_encoding(const EncodedDesign& design, const CycleRecord& record);

struct SplitSpec {
  enum class Mode { random, by_device };
  Mode mode = Mode::random;
  std::array<double, 3> fractions{0.8, 0.1, 0.1};  // train, val, test
  std::uint64_t seed = 0;
  std::string test_device;  // SoC name or catalog device name

  void validate() const;
};

struct Split {
  std::vector<CycleRecord> train;
  std::vector<CycleRecord> val;
  std::vector<CycleRecord> test;
};

/// Resolves a catalog device name ("device-3") to its SoC; other names pass through.
std::string device_key(std::string_view device);

/// Random: seeded permutation, then contiguous cut. By device: all rows of
/// the test device go to test; the rest are split train/val by the
/// renormalized fractions.
Split split(const std::vector<CycleRecord>& records, const SplitSpec& spec);

/// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

}  // namespace epam::dataset
