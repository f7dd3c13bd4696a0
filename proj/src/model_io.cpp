#include <bit>
#include <cstring>

#include <zlib.h>

#include "epam/error.hpp"
#include "epam/gpr.hpp"

namespace epam::gp {
namespace {

static_assert(std::endian::native == std::endian::little, "model files are written little-endian");

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void u64(std::uint64_t v) { pod(v); }
  void f64(double v) { pod(v); }
  void str(const std::string& s) {
    u64(s.size());
    out_ += s;
  }
  void strings(const std::vector<std::string>& v) {
    u64(v.size());
    for (const auto& s : v) str(s);
  }
  void doubles(const double* p, std::size_t n) { out_.append(reinterpret_cast<const char*>(p), n * sizeof(double)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  double f64() { return pod<double>(); }
  std::size_t count() {
    const auto n = u64();
    if (n > data_.size()) throw FormatError("model payload is corrupt (count too large)");
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    const auto n = count();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<std::string> strings() {
    std::vector<std::string> v(count());
    for (auto& s : v) s = str();
    return v;
  }
  void doubles(double* p, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(p, data_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError("model payload is corrupt (unexpected end)");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(std::string_view s) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

constexpr std::size_t kHeaderSize = 6 + sizeof(std::uint32_t) + sizeof(std::uint64_t);

void write_design(Writer& w, const dataset::EncodedDesign& e) {
  w.u64(e.schema.features.size());
  for (const auto& f : e.schema.features) {
    w.str(f.name);
    w.pod<std::uint8_t>(f.kind == dataset::FeatureKind::numeric ? 0 : 1);
    w.str(f.units);
  }
  w.str(e.schema.target);
  w.str(e.schema.target_units);
  w.u64(e.numeric.size());
  for (const auto& c : e.numeric) {
    w.str(c.name);
    w.u64(c.column);
    w.f64(c.mean);
    w.f64(c.stddev);
  }
  w.u64(e.categorical.size());
  for (const auto& b : e.categorical) {
    w.str(b.name);
    w.u64(b.offset);
    w.strings(b.levels);
  }
  w.strings(e.dropped_constant);
  w.strings(e.column_names);
  w.f64(e.target_mean);
  w.f64(e.target_std);
}

dataset::EncodedDesign read_design(Reader& r) {
  dataset::EncodedDesign e;
  e.schema.features.resize(r.count());
  for (auto& f : e.schema.features) {
    f.name = r.str();
    f.kind = r.pod<std::uint8_t>() == 0 ? dataset::FeatureKind::numeric : dataset::FeatureKind::categorical;
    f.units = r.str();
  }
  e.schema.target = r.str();
  e.schema.target_units = r.str();
  e.numeric.resize(r.count());
  for (auto& c : e.numeric) {
    c.name = r.str();
    c.column = r.count();
    c.mean = r.f64();
    c.stddev = r.f64();
  }
  e.categorical.resize(r.count());
  for (auto& b : e.categorical) {
    b.name = r.str();
    b.offset = r.count();
    b.levels = r.strings();
  }
  e.dropped_constant = r.strings();
  e.column_names = r.strings();
  e.target_mean = r.f64();
  e.target_std = r.f64();
  return e;
}

}  // namespace

std::string save_model(const TrainedModel& model) {
  const auto& post = model.posterior;
  const auto& h = post.hyperparams();
  const auto n = static_cast<std::size_t>(post.inputs().rows());
  const auto d = static_cast<std::size_t>(post.inputs().cols());

  Writer w;
  write_design(w, model.encoding);
  w.f64(h.signal_var);
  w.f64(h.noise_var);
  w.u64(d);
  w.doubles(h.lengthscales.data(), d);
  w.u64(n);
  w.doubles(post.inputs().data(), n * d);
  w.doubles(post.targets().data(), n);
  w.doubles(post.alpha().data(), n);
  w.f64(post.jitter());
  for (std::size_t j = 0; j < n; ++j) {
    w.doubles(post.lower().data() + j * n + j, n - j);  // column j, from the diagonal down
  }
  w.f64(model.lml);
  w.pod<std::int32_t>(model.iterations);
  w.pod<std::uint8_t>(model.converged ? 1 : 0);
  w.strings(model.warnings);
  const std::string payload = w.take();

  Writer out;
  std::string file(kModelMagic);
  out.pod<std::uint32_t>(kModelFormatVersion);
  out.u64(payload.size());
  file += out.take();
  file += payload;
  Writer tail;
  tail.pod<std::uint32_t>(crc(payload));
  file += tail.take();
  return file;
}

TrainedModel load_model(std::string_view bytes) {
  if (bytes.size() < kModelMagic.size() || bytes.substr(0, kModelMagic.size()) != kModelMagic) {
    throw FormatError("not a model file (bad magic)");
  }
  if (bytes.size() < kHeaderSize) throw FormatError("checksum failure: model file truncated");
  Reader head(bytes.substr(kModelMagic.size(), kHeaderSize - kModelMagic.size()));
  const auto version = head.pod<std::uint32_t>();
  if (version != kModelFormatVersion) {
    throw FormatError("model format version mismatch: file has " + std::to_string(version) + ", expected " +
                      std::to_string(kModelFormatVersion));
  }
  const auto size = head.u64();
  if (bytes.size() - kHeaderSize < sizeof(std::uint32_t) || bytes.size() - kHeaderSize - sizeof(std::uint32_t) != size) {
    throw FormatError("checksum failure: model file truncated or padded");
  }
  const auto payload = bytes.substr(kHeaderSize, static_cast<std::size_t>(size));
  Reader tail(bytes.substr(kHeaderSize + payload.size()));
  if (tail.pod<std::uint32_t>() != crc(payload)) throw FormatError("checksum failure: model payload corrupt");

  Reader r(payload);
  auto design = read_design(r);
  Hyperparams h;
  h.signal_var = r.f64();
  h.noise_var = r.f64();
  const auto d = r.count();
  h.lengthscales.resize(static_cast<Eigen::Index>(d));
  r.doubles(h.lengthscales.data(), d);
  const auto n = r.count();
  MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  r.doubles(X.data(), n * d);
  VectorXd y(static_cast<Eigen::Index>(n));
  r.doubles(y.data(), n);
  VectorXd alpha(static_cast<Eigen::Index>(n));
  r.doubles(alpha.data(), n);
  const double jitter = r.f64();
  MatrixXd L = MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) r.doubles(L.data() + j * n + j, n - j);
  const double lml = r.f64();
  const auto iterations = r.pod<std::int32_t>();
  const bool converged = r.pod<std::uint8_t>() != 0;
  auto warnings = r.strings();
  if (!r.done()) throw FormatError("model payload has trailing bytes");
  if (design.dims() != d) throw FormatError("model encoding does not match input dimension");

  Posterior post(std::move(X), std::move(y), std::move(h), std::move(L), std::move(alpha), jitter);
  return TrainedModel{std::move(design), std::move(post), lml, iterations, converged, std::move(warnings)};
}

}  // namespace epam::gp
