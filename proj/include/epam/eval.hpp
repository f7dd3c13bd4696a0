#pragma once

// Error metrics, interval coverage and the evaluation report.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "epam/dataset.hpp"
#include "epam/gpr.hpp"

namespace epam::eval {

// Published headline figures, kept for side-by-side display only.
inline constexpr double kReferenceRmseJ = 0.075;
inline constexpr double kReferencePctRmse = 3.06;
inline constexpr double kReferenceLml = -144.9;

double rmse(std::span<const double> pred, std::span<const double> y);

/// 100 * rmse / mean(y).
double pct_rmse(double rmse_j, std::span<const double> y);

/// Two-sided standard normal quantile: z(0.95) = 1.959964.
double z_value(double level);

/// Fraction of y inside mean +/- z(level) * sqrt(variance).
double coverage(std::span<const double> mean, std::span<const double> variance, std::span<const double> y,
                double level = 0.95);

struct GroupRow {
  std::string soc;
  std::string dnn_model;
  std::string source;
  std::size_t n = 0;
  double rmse_j = 0.0;
  double pct_rmse = 0.0;
  double coverage95 = 0.0;
  double unseen_fraction = 0.0;
};

struct Report {
  std::size_t n = 0;
  double rmse_j = 0.0;
  double pct_rmse = 0.0;
  double mean_target_j = 0.0;
  double lml = 0.0;
  double coverage95 = 0.0;
  double unseen_fraction = 0.0;                     // rows with any unseen level
  std::map<std::string, double> unseen_by_feature;  // every categorical feature
  std::vector<GroupRow> groups;                     // sorted by (soc, dnn_model, source)
};

Report report(const gp::TrainedModel& model, const std::vector<dataset::CycleRecord>& test);
Report report(const gp::TrainedModel& model, const std::vector<dataset::CycleRecord>& test,
              const std::vector<gp::Prediction>& predictions);

/// Flat key=value lines followed by a `[groups]` CSV table.
std::string format_report(const Report& r);

}  // namespace epam::eval
