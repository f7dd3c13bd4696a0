#include "epam/eval.hpp"

#include <cmath>
#include <numeric>
#include <tuple>

#include <boost/math/distributions/normal.hpp>

#include "epam/error.hpp"
#include "epam/text.hpp"

namespace epam::eval {
namespace {

double mean_of(std::span<const double> y) {
  return std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

struct Columns {
  std::vector<double> mean, variance, y;
  std::size_t unseen = 0;
};

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> y) {
  if (pred.size() != y.size()) throw ValidationError("rmse: length mismatch");
  if (y.empty()) throw ValidationError("rmse: empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = pred[i] - y[i];
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(y.size()));
}

double pct_rmse(double rmse_j, std::span<const double> y) {
  if (y.empty()) throw ValidationError("pct_rmse: empty targets");
  const double m = mean_of(y);
  if (!(m > 0.0)) throw ValidationError("pct_rmse: mean target must be positive");
  return 100.0 * rmse_j / m;
}

double z_value(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("coverage level must be in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

double coverage(std::span<const double> mean, std::span<const double> variance, std::span<const double> y,
                double level) {
  if (mean.size() != y.size() || variance.size() != y.size()) throw ValidationError("coverage: length mismatch");
  if (y.empty()) throw ValidationError("coverage: empty input");
  const double z = z_value(level);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(variance[i] >= 0.0)) throw ValidationError("coverage: negative variance");
    if (std::abs(y[i] - mean[i]) <= z * std::sqrt(variance[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

Report report(const gp::TrainedModel& model, const std::vector<dataset::CycleRecord>& test) {
  return report(model, test, gp::predict_batch(model, test));
}

Report report(const gp::TrainedModel& model, const std::vector<dataset::CycleRecord>& test,
              const std::vector<gp::Prediction>& predictions) {
  if (test.empty()) throw ValidationError("evaluation needs at least one test record");
  if (predictions.size() != test.size()) throw ValidationError("prediction count does not match test set");

  Columns all;
  std::map<std::tuple<std::string, std::string, std::string>, Columns> groups;
  std::map<std::string, std::size_t> unseen_counts;
  for (const auto& block : model.encoding.categorical) unseen_counts[block.name] = 0;

  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& r = test[i];
    const auto& p = predictions[i];
    auto& g = groups[{r.soc, r.dnn_model, r.source}];
    for (Columns* c : {&all, &g}) {
      c->mean.push_back(p.mean);
      c->variance.push_back(p.variance);
      c->y.push_back(r.energy_j);
      if (p.unseen_level) ++c->unseen;
    }
    for (const auto& f : p.unseen_features) ++unseen_counts[f];
  }

  const auto n = static_cast<double>(test.size());
  Report out;
  out.n = test.size();
  out.rmse_j = rmse(all.mean, all.y);
  out.pct_rmse = pct_rmse(out.rmse_j, all.y);
  out.mean_target_j = mean_of(all.y);
  out.lml = model.lml;
  out.coverage95 = coverage(all.mean, all.variance, all.y);
  out.unseen_fraction = static_cast<double>(all.unseen) / n;
  for (const auto& [name, count] : unseen_counts) out.unseen_by_feature[name] = static_cast<double>(count) / n;

  for (const auto& [key, c] : groups) {
    GroupRow row;
    std::tie(row.soc, row.dnn_model, row.source) = key;
    row.n = c.y.size();
    row.rmse_j = rmse(c.mean, c.y);
    row.pct_rmse = pct_rmse(row.rmse_j, c.y);
    row.coverage95 = coverage(c.mean, c.variance, c.y);
    row.unseen_fraction = static_cast<double>(c.unseen) / static_cast<double>(row.n);
    out.groups.push_back(std::move(row));
  }
  return out;
}

std::string format_report(const Report& r) {
  using text::format_double;
  std::string s;
  auto kv = [&s](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
  kv("n", std::to_string(r.n));
  kv("rmse_j", format_double(r.rmse_j));
  kv("pct_rmse", format_double(r.pct_rmse));
  kv("mean_target_j", format_double(r.mean_target_j));
  kv("lml", format_double(r.lml));
  kv("coverage95", format_double(r.coverage95));
  kv("unseen_fraction", format_double(r.unseen_fraction));
  for (const auto& [name, f] : r.unseen_by_feature) kv("unseen_fraction." + name, format_double(f));
  kv("reference_rmse_j", format_double(kReferenceRmseJ));
  kv("reference_pct_rmse", format_double(kReferencePctRmse));
  kv("reference_lml", format_double(kReferenceLml));
  s += "\n[groups]\nsoc,dnn_model,source,n,rmse_j,pct_rmse,coverage95,unseen_fraction\n";
  for (const auto& g : r.groups) {
    s += g.soc + "," + g.dnn_model + "," + g.source + "," + std::to_string(g.n) + "," + format_double(g.rmse_j) +
         "," + format_double(g.pct_rmse) + "," + format_double(g.coverage95) + "," +
         format_double(g.unseen_fraction) + "\n";
  }
  return s;
}

}  // namespace epam::eval
