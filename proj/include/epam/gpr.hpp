#pragma once

// Exact Gaussian process regression with an ARD squared-exponential kernel.
//
// Everything above `TrainedModel` works in standardized
// units on plain matrices; TrainedModel ties a posterior to the dataset
// encoding and reports energies in joules.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "epam/dataset.hpp"
#include "epam/hyperopt.hpp"

namespace epam::gp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Kernel and noise hyperparameters. `lengthscales` holds the per-column
/// scales sigma_m; the kernel divides squared differences by sigma_m^2.
struct Hyperparams {
  double signal_var = 1.0;
  VectorXd lengthscales;
  double noise_var = 0.1;

  Eigen::Index dims() const { return lengthscales.size(); }
  void validate() const;

  /// [log signal_var, log sigma_1 .. log sigma_d, log noise_var]
  VectorXd to_log() const;
  static Hyperparams from_log(const VectorXd& theta);
};

double kernel_eval(const Eigen::Ref<const VectorXd>& xi, const Eigen::Ref<const VectorXd>& xj,
                   const Hyperparams& h);

/// Signal covariance between the rows of X (noise not included).
MatrixXd kernel_matrix(const MatrixXd& X, const Hyperparams& h);

/// Covariance between rows of A and rows of B.
MatrixXd cross_kernel(const MatrixXd& A, const MatrixXd& B, const Hyperparams& h);

inline constexpr int kMaxJitterEscalations = 6;

struct Factor {
  MatrixXd lower;       // L with L L^T = cov + jitter I
  double jitter = 0.0;  // 0 when no escalation was needed
  int escalations = 0;
};

/// Cholesky of `cov`, retrying with jitter 1e-10 * signal_var, growing x10
/// per retry, at most kMaxJitterEscalations times.
Factor factorize(const MatrixXd& cov, double signal_var);

struct Likelihood {
  double value = 0.0;
  VectorXd gradient;  // with respect to Hyperparams::to_log()
};

/// Log marginal likelihood of standardized targets y and its gradient.
Likelihood log_marginal_likelihood(const MatrixXd& X, const VectorXd& y, const Hyperparams& h,
                                   bool with_gradient = true);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // includes noise_var
};

/// Posterior conditioned on training data; immutable and thread-safe.
class Posterior {
 public:
  Posterior(MatrixXd X, VectorXd y, Hyperparams h);
  /// Rebuilds from a stored factor without refactorizing.
  Posterior(MatrixXd X, VectorXd y, Hyperparams h, MatrixXd lower, VectorXd alpha, double jitter);

  Moments predict(const Eigen::Ref<const VectorXd>& x) const;
  std::vector<Moments> predict_batch(const MatrixXd& Xs) const;

  const MatrixXd& inputs() const { return X_; }
  const VectorXd& targets() const { return y_; }
  const Hyperparams& hyperparams() const { return h_; }
  const MatrixXd& lower() const { return L_; }
  const VectorXd& alpha() const { return alpha_; }
  double jitter() const { return jitter_; }
  double log_marginal_likelihood() const;

 private:
  void solve_alpha();

  MatrixXd X_;
  VectorXd y_;
  Hyperparams h_;
  MatrixXd L_;
  VectorXd alpha_;
  double jitter_ = 0.0;
};

/// Heuristic start: signal_var 1, noise_var 0.1, lengthscales = column
/// standard deviations (1 where a column is constant).
Hyperparams initial_hyperparams(const MatrixXd& X);

struct FitConfig {
  hyperopt::OptimConfig optim;
  std::size_t max_exact = 4000;
  std::optional<double> fixed_noise_var;  // pins noise_var when set

  void validate() const;
};

struct HyperFit {
  Hyperparams hyperparams;
  hyperopt::OptimResult optim;
};

/// Maximizes the log marginal likelihood over log-hyperparameters with restarts.
HyperFit optimize_hyperparams(const MatrixXd& X, const VectorXd& y, const FitConfig& config);

struct TrainedModel {
  dataset::EncodedDesign encoding;  // metadata only; matrix and targets cleared
  Posterior posterior;
  double lml = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Fits on every row of the design, subsampling to config.max_exact rows
/// (seeded) when larger.
TrainedModel fit(const dataset::EncodedDesign& design, const FitConfig& config);
TrainedModel fit(const dataset::EncodedDesign& design, std::span<const std::size_t> rows,
                 const FitConfig& config);

struct Prediction {
  double mean = 0.0;      // J
  double variance = 0.0;  // J^2
  bool unseen_level = false;
  std::vector<std::string> unseen_features;

  double stddev() const;
};

Prediction predict(const TrainedModel& model, const dataset::CycleRecord& record);
std::vector<Prediction> predict_batch(const TrainedModel& model, const std::vector<dataset::CycleRecord>& records);

inline constexpr std::string_view kModelMagic = "EPAMv1";
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Binary container: magic, format version, payload size, payload, CRC-32.
std::string save_model(const TrainedModel& model);
TrainedModel load_model(std::string_view bytes);

}  // namespace epam::gp
