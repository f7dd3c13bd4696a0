#include "epam/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "epam/error.hpp"

#include <lapacke.h>

namespace epam::gp {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_dims(const MatrixXd& X, const Hyperparams& h) {
  if (X.cols() != h.dims()) {
    throw ValidationError("input has " + std::to_string(X.cols()) + " columns but hyperparameters cover " +
                          std::to_string(h.dims()));
  }
}

// Inputs scaled by the lengthscales, one point per column.
MatrixXd scaled_points(const MatrixXd& X, const Hyperparams& h) {
  MatrixXd S = X.transpose();
  for (Eigen::Index m = 0; m < S.rows(); ++m) S.row(m) /= h.lengthscales(m);
  return S;
}

}  // namespace

void Hyperparams::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!ok(signal_var)) throw ValidationError("signal_var must be positive and finite");
  if (!ok(noise_var)) throw ValidationError("noise_var must be positive and finite");
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!ok(lengthscales(i))) throw ValidationError("ARD scales must be positive and finite");
  }
}

VectorXd Hyperparams::to_log() const {
  VectorXd theta(dims() + 2);
  theta(0) = std::log(signal_var);
  theta.segment(1, dims()) = lengthscales.array().log().matrix();
  theta(dims() + 1) = std::log(noise_var);
  return theta;
}

Hyperparams Hyperparams::from_log(const VectorXd& theta) {
  if (theta.size() < 2) throw ValidationError("log-hyperparameter vector too short");
  Hyperparams h;
  const auto d = theta.size() - 2;
  h.signal_var = std::exp(theta(0));
  h.lengthscales = theta.segment(1, d).array().exp().matrix();
  h.noise_var = std::exp(theta(d + 1));
  return h;
}

double kernel_eval(const Eigen::Ref<const VectorXd>& xi, const Eigen::Ref<const VectorXd>& xj,
                   const Hyperparams& h) {
  if (xi.size() != h.dims() || xj.size() != h.dims()) {
    throw ValidationError("kernel_eval dimension mismatch");
  }
  double r2 = 0.0;
  for (Eigen::Index m = 0; m < xi.size(); ++m) {
    const double z = (xi(m) - xj(m)) / h.lengthscales(m);
    r2 += z * z;
  }
  return h.signal_var * std::exp(-0.5 * r2);
}

MatrixXd kernel_matrix(const MatrixXd& X, const Hyperparams& h) {
  check_dims(X, h);
  const auto n = X.rows();
  const MatrixXd S = scaled_points(X, h);
  MatrixXd K(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = h.signal_var;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double r2 = (S.col(i) - S.col(j)).squaredNorm();
      K(i, j) = K(j, i) = h.signal_var * std::exp(-0.5 * r2);
    }
  }
  return K;
}

MatrixXd cross_kernel(const MatrixXd& A, const MatrixXd& B, const Hyperparams& h) {
  check_dims(A, h);
  check_dims(B, h);
  const MatrixXd SA = scaled_points(A, h);
  const MatrixXd SB = scaled_points(B, h);
  MatrixXd K(A.rows(), B.rows());
  for (Eigen::Index j = 0; j < B.rows(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      K(i, j) = h.signal_var * std::exp(-0.5 * (SA.col(i) - SB.col(j)).squaredNorm());
    }
  }
  return K;
}

Factor factorize(const MatrixXd& cov, double signal_var) {
  const auto n = static_cast<lapack_int>(cov.rows());
  Factor f;
  f.lower = cov;
  double jitter = 1e-10 * signal_var;
  while (n > 0 && (LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', n, f.lower.data(), n) != 0 ||
                   !f.lower.diagonal().allFinite())) {
    if (f.escalations == kMaxJitterEscalations) {
      std::ostringstream os;
      os << "Cholesky failed after " << kMaxJitterEscalations << " jitter escalations (last jitter "
         << f.jitter << "); diagonal range [" << cov.diagonal().minCoeff() << ", "
         << cov.diagonal().maxCoeff() << "], n=" << cov.rows();
      throw NumericalError(os.str());
    }
    f.jitter = jitter;
    ++f.escalations;
    f.lower = cov;
    f.lower.diagonal().array() += jitter;
    jitter *= 10.0;
  }
  f.lower.triangularView<Eigen::StrictlyUpper>().setZero();
  return f;
}

Likelihood log_marginal_likelihood(const MatrixXd& X, const VectorXd& y, const Hyperparams& h,
                                   bool with_gradient) {
  h.validate();
  check_dims(X, h);
  const auto n = X.rows();
  if (n < 1) throw ValidationError("log marginal likelihood needs at least one point");
  if (y.size() != n) throw ValidationError("target length does not match inputs");

  const MatrixXd K = kernel_matrix(X, h);
  MatrixXd Ky = K;
  Ky.diagonal().array() += h.noise_var;
  const Factor f = factorize(Ky, h.signal_var);
  const auto L = f.lower.triangularView<Eigen::Lower>();

  VectorXd alpha = L.solve(y);
  L.transpose().solveInPlace(alpha);

  Likelihood out;
  out.value = -0.5 * y.dot(alpha) - f.lower.diagonal().array().log().sum() - 0.5 * static_cast<double>(n) * kLog2Pi;
  if (!with_gradient) return out;

  // W = alpha alpha^T - Ky^{-1}, then dL/dtheta = 1/2 tr(W dK/dtheta).
  MatrixXd WK = f.lower;
  if (LAPACKE_dpotri(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(n), WK.data(), static_cast<lapack_int>(n)) != 0) {
    throw NumericalError("inverse from Cholesky factor failed");
  }
  double diag_w = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double wjj = alpha(j) * alpha(j) - WK(j, j);
    diag_w += wjj;
    WK(j, j) = wjj * K(j, j);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      WK(i, j) = (alpha(i) * alpha(j) - WK(i, j)) * K(i, j);
      WK(j, i) = WK(i, j);
    }
  }

  // For each scaled column a: 1/2 sum_ij WK_ij (a_i - a_j)^2 = sum_i a_i^2 r_i - a^T WK a.
  const auto d = h.dims();
  const MatrixXd St = scaled_points(X, h).transpose();
  const VectorXd r = WK.rowwise().sum();
  const MatrixXd G = WK * St;
  VectorXd g(d + 2);
  g(0) = 0.5 * r.sum();
  for (Eigen::Index m = 0; m < d; ++m) {
    g(m + 1) = St.col(m).cwiseAbs2().dot(r) - St.col(m).dot(G.col(m));
  }
  g(d + 1) = 0.5 * h.noise_var * diag_w;
  out.gradient = std::move(g);
  return out;
}

Posterior::Posterior(MatrixXd X, VectorXd y, Hyperparams h) : X_(std::move(X)), y_(std::move(y)), h_(std::move(h)) {
  h_.validate();
  check_dims(X_, h_);
  if (X_.rows() < 1) throw ValidationError("posterior needs at least one training point");
  if (y_.size() != X_.rows()) throw ValidationError("target length does not match inputs");
  MatrixXd Ky = kernel_matrix(X_, h_);
  Ky.diagonal().array() += h_.noise_var;
  auto f = factorize(Ky, h_.signal_var);
  L_ = std::move(f.lower);
  jitter_ = f.jitter;
  solve_alpha();
}

Posterior::Posterior(MatrixXd X, VectorXd y, Hyperparams h, MatrixXd lower, VectorXd alpha, double jitter)
    : X_(std::move(X)), y_(std::move(y)), h_(std::move(h)), L_(std::move(lower)), alpha_(std::move(alpha)),
      jitter_(jitter) {
  h_.validate();
  check_dims(X_, h_);
  const auto n = X_.rows();
  if (y_.size() != n || L_.rows() != n || L_.cols() != n || alpha_.size() != n) {
    throw ValidationError("stored posterior has inconsistent sizes");
  }
}

void Posterior::solve_alpha() {
  alpha_ = L_.triangularView<Eigen::Lower>().solve(y_);
  L_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

double Posterior::log_marginal_likelihood() const {
  return -0.5 * y_.dot(alpha_) - L_.diagonal().array().log().sum() -
         0.5 * static_cast<double>(X_.rows()) * kLog2Pi;
}

Moments Posterior::predict(const Eigen::Ref<const VectorXd>& x) const {
  if (x.size() != h_.dims()) throw ValidationError("query has the wrong dimension");
  VectorXd k(X_.rows());
  for (Eigen::Index i = 0; i < X_.rows(); ++i) k(i) = kernel_eval(X_.row(i).transpose(), x, h_);
  Moments m;
  m.mean = k.dot(alpha_);
  L_.triangularView<Eigen::Lower>().solveInPlace(k);
  m.variance = std::max(0.0, h_.signal_var - k.squaredNorm()) + h_.noise_var;
  return m;
}

std::vector<Moments> Posterior::predict_batch(const MatrixXd& Xs) const {
  std::vector<Moments> out(static_cast<std::size_t>(Xs.rows()));
  if (Xs.rows() == 0) return out;
  const MatrixXd Ks = cross_kernel(X_, Xs, h_);  // n x m
  const VectorXd means = Ks.transpose() * alpha_;
  MatrixXd V = Ks;
  L_.triangularView<Eigen::Lower>().solveInPlace(V);
  for (Eigen::Index j = 0; j < Xs.rows(); ++j) {
    auto& m = out[static_cast<std::size_t>(j)];
    m.mean = means(j);
    m.variance = std::max(0.0, h_.signal_var - V.col(j).squaredNorm()) + h_.noise_var;
  }
  return out;
}

Hyperparams initial_hyperparams(const MatrixXd& X) {
  Hyperparams h;
  h.signal_var = 1.0;
  h.noise_var = 0.1;
  h.lengthscales.resize(X.cols());
  const double n = static_cast<double>(X.rows());
  for (Eigen::Index m = 0; m < X.cols(); ++m) {
    const double mean = X.col(m).mean();
    const double var = (X.col(m).array() - mean).square().sum() / n;
    h.lengthscales(m) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return h;
}

void FitConfig::validate() const {
  optim.validate();
  if (max_exact < 2) throw ValidationError("max_exact must be >= 2");
  if (fixed_noise_var && !(*fixed_noise_var > 0.0)) throw ValidationError("fixed noise_var must be positive");
}

HyperFit optimize_hyperparams(const MatrixXd& X, const VectorXd& y, const FitConfig& config) {
  config.validate();
  if (X.rows() < 2) throw ValidationError("fit needs at least 2 training points");
  Hyperparams start = initial_hyperparams(X);
  VectorXd theta0 = start.to_log();
  const auto full = theta0.size();

  hyperopt::Objective objective;
  if (config.fixed_noise_var) {
    const double log_noise = std::log(*config.fixed_noise_var);
    theta0 = VectorXd(theta0.head(full - 1));
    objective = [&X, &y, log_noise, full](const VectorXd& t) {
      VectorXd theta(full);
      theta << t, log_noise;
      auto l = log_marginal_likelihood(X, y, Hyperparams::from_log(theta));
      return hyperopt::Evaluation{l.value, l.gradient.head(full - 1)};
    };
  } else {
    objective = [&X, &y](const VectorXd& theta) {
      auto l = log_marginal_likelihood(X, y, Hyperparams::from_log(theta));
      return hyperopt::Evaluation{l.value, std::move(l.gradient)};
    };
  }

  HyperFit out;
  out.optim = hyperopt::multi_restart(objective, hyperopt::default_inits(theta0, config.optim), config.optim);
  VectorXd best = out.optim.best_params;
  if (config.fixed_noise_var) {
    best.conservativeResize(full);
    best(full - 1) = std::log(*config.fixed_noise_var);
  }
  out.hyperparams = Hyperparams::from_log(best);
  if (config.fixed_noise_var) out.hyperparams.noise_var = *config.fixed_noise_var;
  return out;
}

TrainedModel fit(const dataset::EncodedDesign& design, const FitConfig& config) {
  std::vector<std::size_t> rows(static_cast<std::size_t>(design.matrix.rows()));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return fit(design, rows, config);
}

TrainedModel fit(const dataset::EncodedDesign& design, std::span<const std::size_t> rows,
                 const FitConfig& config) {
  config.validate();
  std::vector<std::size_t> use(rows.begin(), rows.end());
  std::vector<std::string> warnings;
  if (use.size() > config.max_exact) {
    const auto perm = dataset::permutation(use.size(), config.optim.seed);
    std::vector<std::size_t> subset(config.max_exact);
    for (std::size_t k = 0; k < config.max_exact; ++k) subset[k] = use[perm[k]];
    std::sort(subset.begin(), subset.end());
    warnings.push_back("subsampled " + std::to_string(use.size()) + " rows to " + std::to_string(config.max_exact));
    use = std::move(subset);
  }
  if (use.size() < 2) throw ValidationError("fit needs at least 2 training rows");

  const auto n = static_cast<Eigen::Index>(use.size());
  MatrixXd X(n, design.matrix.cols());
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(use[static_cast<std::size_t>(i)]);
    if (r >= design.matrix.rows()) throw ValidationError("training row index out of range");
    X.row(i) = design.matrix.row(r);
    y(i) = design.targets(r);
  }
  if ((y.array() == y(0)).all()) throw ValidationError("all training targets are equal");

  auto hf = optimize_hyperparams(X, y, config);
  if (!hf.optim.converged) warnings.push_back("optimizer did not converge: " + hf.optim.message);

  dataset::EncodedDesign meta = design;
  meta.matrix.resize(0, 0);
  meta.targets.resize(0);
  Posterior post(std::move(X), std::move(y), hf.hyperparams);
  const double lml = post.log_marginal_likelihood();
  return TrainedModel{std::move(meta), std::move(post), lml, hf.optim.iterations, hf.optim.converged,
                      std::move(warnings)};
}

double Prediction::stddev() const { return std::sqrt(variance); }

Prediction predict(const TrainedModel& model, const dataset::CycleRecord& record) {
  const auto row = dataset::apply_encoding(model.encoding, record);
  const auto m = model.posterior.predict(row.x);
  const double s = model.encoding.target_std;
  return Prediction{model.encoding.destandardize(m.mean), m.variance * s * s, row.unseen(), row.unseen_features};
}

std::vector<Prediction> predict_batch(const TrainedModel& model, const std::vector<dataset::CycleRecord>& records) {
  std::vector<Prediction> out(records.size());
  if (records.empty()) return out;
  MatrixXd Xs(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(model.encoding.dims()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto row = dataset::apply_encoding(model.encoding, records[i]);
    Xs.row(static_cast<Eigen::Index>(i)) = row.x.transpose();
    out[i].unseen_level = row.unseen();
    out[i].unseen_features = std::move(row.unseen_features);
  }
  const auto moments = model.posterior.predict_batch(Xs);
  const double s = model.encoding.target_std;
  for (std::size_t i = 0; i < records.size(); ++i) {
    out[i].mean = model.encoding.destandardize(moments[i].mean);
    out[i].variance = moments[i].variance * s * s;
  }
  return out;
}

}  // namespace epam::gp
