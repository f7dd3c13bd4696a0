#include "epam/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "epam/catalog.hpp"
#include "epam/error.hpp"
#include "epam/random.hpp"
#include "epam/text.hpp"

namespace epam::dataset {
namespace {

using NumericField = double CycleRecord::*;
using CategoricalField = std::string CycleRecord::*;

const std::map<std::string, NumericField, std::less<>>& numeric_fields() {
  static const std::map<std::string, NumericField, std::less<>> m = {
      {"cpu_freq_ghz", &CycleRecord::cpu_freq_ghz}, {"cores", &CycleRecord::cores},
      {"ram_gb", &CycleRecord::ram_gb},             {"threads", &CycleRecord::threads},
      {"dnn_layers", &CycleRecord::dnn_layers},     {"memory_mb", &CycleRecord::memory_mb},
      {"processing_ms", &CycleRecord::processing_ms}, {"inference_ms", &CycleRecord::inference_ms},
      {"energy_j", &CycleRecord::energy_j},
  };
  return m;
}

const std::map<std::string, CategoricalField, std::less<>>& categorical_fields() {
  static const std::map<std::string, CategoricalField, std::less<>> m = {
      {"soc", &CycleRecord::soc},
      {"source", &CycleRecord::source},
      {"app_type", &CycleRecord::app_type},
      {"dnn_model", &CycleRecord::dnn_model},
  };
  return m;
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

// Population moments.
Moments moments(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

bool is_constant(const Moments& m) { return m.stddev <= 1e-12 * std::max(1.0, std::abs(m.mean)); }

}  // namespace

FeatureSchema FeatureSchema::standard() {
  using K = FeatureKind;
  FeatureSchema s;
  s.features = {
      {"soc", K::categorical, ""},        {"cpu_freq_ghz", K::numeric, "GHz"},
      {"cores", K::numeric, "count"},     {"ram_gb", K::numeric, "GB"},
      {"source", K::categorical, ""},     {"threads", K::numeric, "count"},
      {"app_type", K::categorical, ""},   {"dnn_model", K::categorical, ""},
      {"dnn_layers", K::numeric, "count"}, {"memory_mb", K::numeric, "MB"},
      {"processing_ms", K::numeric, "ms"}, {"inference_ms", K::numeric, "ms"},
  };
  return s;
}

void FeatureSchema::validate() const {
  if (features.empty()) throw ValidationError("schema has no features");
  if (target != "energy_j") throw ValidationError("schema target must be energy_j");
  std::set<std::string> seen;
  for (const auto& f : features) {
    if (!seen.insert(f.name).second) throw ValidationError("duplicate feature '" + f.name + "'");
    if (f.name == target) throw ValidationError("target used as a feature");
    const bool numeric = numeric_fields().count(f.name) > 0;
    const bool categorical = categorical_fields().count(f.name) > 0;
    if (!numeric && !categorical) throw ValidationError("unknown feature '" + f.name + "'");
    if ((f.kind == FeatureKind::numeric) != numeric) {
      throw ValidationError("feature '" + f.name + "' has the wrong kind");
    }
  }
}

double numeric_value(const CycleRecord& r, std::string_view feature) {
  const auto it = numeric_fields().find(feature);
  if (it == numeric_fields().end()) {
    throw ValidationError("unknown numeric feature '" + std::string(feature) + "'");
  }
  return r.*(it->second);
}

const std::string& categorical_value(const CycleRecord& r, std::string_view feature) {
  const auto it = categorical_fields().find(feature);
  if (it == categorical_fields().end()) {
    throw ValidationError("unknown categorical feature '" + std::string(feature) + "'");
  }
  return r.*(it->second);
}

void validate(const CycleRecord& r) {
  for (const auto& [name, field] : numeric_fields()) {
    const double v = r.*field;
    if (!std::isfinite(v)) throw ValidationError(name + " is not finite");
    if (v < 0.0) throw ValidationError(name + " is negative");
  }
  for (const auto& [name, field] : categorical_fields()) {
    if ((r.*field).empty()) throw ValidationError(name + " is empty");
  }
  if (r.threads < 1.0) throw ValidationError("threads must be >= 1");
  if (!(r.energy_j > 0.0)) throw ValidationError("energy_j must be positive");
}

CycleRecord parse_record_row(std::string_view line, std::size_t line_no) {
  const auto f = text::split(line, ',');
  const std::string where = " at line " + std::to_string(line_no);
  if (f.size() != 13) throw ValidationError("expected 13 fields" + where);
  CycleRecord r;
  try {
    r.soc = std::string(f[0]);
    r.cpu_freq_ghz = text::parse_double(f[1], "cpu_freq_ghz");
    r.cores = text::parse_double(f[2], "cores");
    r.ram_gb = text::parse_double(f[3], "ram_gb");
    r.source = std::string(f[4]);
    r.threads = text::parse_double(f[5], "threads");
    r.app_type = std::string(f[6]);
    r.dnn_model = std::string(f[7]);
    r.dnn_layers = text::parse_double(f[8], "dnn_layers");
    r.memory_mb = text::parse_double(f[9], "memory_mb");
    r.processing_ms = text::parse_double(f[10], "processing_ms");
    r.inference_ms = text::parse_double(f[11], "inference_ms");
    r.energy_j = text::parse_double(f[12], "energy_j");
    validate(r);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(e.what()) + where);
  }
  return r;
}

std::vector<CycleRecord> load_records(std::string_view text) {
  std::vector<CycleRecord> out;
  bool have_header = false;
  std::size_t line_no = 0;
  for (const auto raw : text::lines(text)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    if (!have_header) {
      if (line != kDatasetHeader) {
        throw ValidationError("dataset header mismatch at line " + std::to_string(line_no));
      }
      have_header = true;
      continue;
    }
    out.push_back(parse_record_row(line, line_no));
  }
  if (!have_header) throw ValidationError("empty dataset file");
  return out;
}

std::string write_records(const std::vector<CycleRecord>& records) {
  std::string out(kDatasetHeader);
  out += '\n';
  const auto num = [](double v) { return text::format_double(v); };
  for (const auto& r : records) {
    out += r.soc + ',' + num(r.cpu_freq_ghz) + ',' + num(r.cores) + ',' + num(r.ram_gb) + ',' + r.source +
           ',' + num(r.threads) + ',' + r.app_type + ',' + r.dnn_model + ',' + num(r.dnn_layers) + ',' +
           num(r.memory_mb) + ',' + num(r.processing_ms) + ',' + num(r.inference_ms) + ',' +
           num(r.energy_j) + '\n';
  }
  return out;
}

EncodedDesign encode(const std::vector<CycleRecord>& records, const FeatureSchema& schema) {
  schema.validate();
  if (records.size() < 2) throw ValidationError("encoding needs at least 2 records");
  const auto n = records.size();

  EncodedDesign design;
  design.schema = schema;

  std::vector<std::vector<double>> numeric_values;  // parallel to design.numeric
  std::vector<std::vector<const std::string*>> categorical_values;
  std::size_t d = 0;
  for (const auto& f : schema.features) {
    if (f.kind == FeatureKind::numeric) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = numeric_value(records[i], f.name);
      const auto m = moments(v);
      if (is_constant(m)) {
        design.dropped_constant.push_back(f.name);
        continue;
      }
      design.numeric.push_back({f.name, d++, m.mean, m.stddev});
      design.column_names.push_back(f.name);
      numeric_values.push_back(std::move(v));
    } else {
      std::set<std::string> levels;
      for (const auto& r : records) levels.insert(categorical_value(r, f.name));
      CategoricalBlock block{f.name, d, {levels.begin(), levels.end()}};
      for (const auto& level : block.levels) design.column_names.push_back(f.name + "=" + level);
      d += block.levels.size();
      design.categorical.push_back(std::move(block));
    }
  }

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = records[i].energy_j;
  const auto ym = moments(y);
  if (is_constant(ym)) throw ValidationError("all-constant target");
  design.target_mean = ym.mean;
  design.target_std = ym.stddev;

  design.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  design.targets.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < design.numeric.size(); ++k) {
      const auto& c = design.numeric[k];
      design.matrix(row, static_cast<Eigen::Index>(c.column)) = (numeric_values[k][i] - c.mean) / c.stddev;
    }
    for (const auto& b : design.categorical) {
      const auto& level = categorical_value(records[i], b.name);
      const auto pos = std::lower_bound(b.levels.begin(), b.levels.end(), level) - b.levels.begin();
      design.matrix(row, static_cast<Eigen::Index>(b.offset + static_cast<std::size_t>(pos))) = 1.0;
    }
    design.targets(row) = (y[i] - design.target_mean) / design.target_std;
  }
  return design;
}

EncodedRow apply_encoding(const EncodedDesign& design, const CycleRecord& record) {
  EncodedRow out;
  out.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(design.dims()));
  for (const auto& c : design.numeric) {
    out.x(static_cast<Eigen::Index>(c.column)) = (numeric_value(record, c.name) - c.mean) / c.stddev;
  }
  for (const auto& b : design.categorical) {
    const auto& level = categorical_value(record, b.name);
    const auto it = std::lower_bound(b.levels.begin(), b.levels.end(), level);
    if (it == b.levels.end() || *it != level) {
      out.unseen_features.push_back(b.name);
      continue;
    }
    out.x(static_cast<Eigen::Index>(b.offset + static_cast<std::size_t>(it - b.levels.begin()))) = 1.0;
  }
  return out;
}

void SplitSpec::validate() const {
  for (double f : fractions) {
    if (!(f > 0.0) || !std::isfinite(f)) throw ValidationError("split fractions must be positive");
  }
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split fractions must sum to 1");
  if (mode == Mode::by_device && test_device.empty()) {
    throw ValidationError("by-device split needs a test device");
  }
}

std::string device_key(std::string_view device) {
  if (const auto d = catalog::find_device(device)) return d->soc;
  return std::string(device);
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[random::bounded(rng, i)]);
  }
  return idx;
}

Split split(const std::vector<CycleRecord>& records, const SplitSpec& spec) {
  spec.validate();
  Split out;
  std::vector<CycleRecord> pool;
  double train_share = spec.fractions[0];
  double val_share = spec.fractions[1];

  if (spec.mode == SplitSpec::Mode::by_device) {
    std::set<std::string> devices;
    for (const auto& r : records) devices.insert(r.soc);
    if (devices.size() < 2) throw ValidationError("by-device split needs at least 2 distinct devices");
    const auto key = device_key(spec.test_device);
    for (const auto& r : records) (r.soc == key ? out.test : pool).push_back(r);
    const double norm = train_share + val_share;
    train_share /= norm;
    val_share /= norm;
  } else {
    pool = records;
  }

  const auto n = pool.size();
  const auto perm = permutation(n, spec.seed);
  const auto n_train = static_cast<std::size_t>(std::llround(train_share * static_cast<double>(n)));
  std::size_t n_val = n - std::min(n, n_train);
  if (spec.mode == SplitSpec::Mode::random) {
    n_val = std::min(n_val, static_cast<std::size_t>(std::llround(val_share * static_cast<double>(n))));
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = pool[perm[k]];
    if (k < n_train) {
      out.train.push_back(r);
    } else if (k < n_train + n_val) {
      out.val.push_back(r);
    } else {
      out.test.push_back(r);
    }
  }
  if (out.train.empty() || out.val.empty() || out.test.empty()) {
    throw ValidationError("split produced an empty partition (train " + std::to_string(out.train.size()) +
                          ", val " + std::to_string(out.val.size()) + ", test " +
                          std::to_string(out.test.size()) + ")");
  }
  return out;
}

}  // namespace epam::dataset
