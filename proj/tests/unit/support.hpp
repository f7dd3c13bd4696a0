#pragma once

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "epam/gpr.hpp"
#include "epam/random.hpp"

namespace testing {

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, double lo = -2.0,
                                     double hi = 2.0) {
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index m = 0; m < d; ++m) X(i, m) = epam::random::uniform(rng, lo, hi);
  }
  return X;
}

inline epam::gp::Hyperparams random_hyperparams(std::mt19937_64& rng, Eigen::Index d) {
  epam::gp::Hyperparams h;
  h.signal_var = std::exp(epam::random::uniform(rng, -1.0, 1.0));
  h.noise_var = std::exp(epam::random::uniform(rng, -4.0, -1.0));
  h.lengthscales.resize(d);
  for (Eigen::Index m = 0; m < d; ++m) h.lengthscales(m) = std::exp(epam::random::uniform(rng, -0.5, 1.0));
  return h;
}

// Textbook GP formulas with an explicit inverse; no shared code with the library.
struct NaiveGp {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  epam::gp::Hyperparams h;
  Eigen::MatrixXd Kinv;

  double k(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    double s = 0.0;
    for (Eigen::Index m = 0; m < a.size(); ++m) {
      const double z = a(m) - b(m);
      s += z * z / (h.lengthscales(m) * h.lengthscales(m));
    }
    return h.signal_var * std::exp(-0.5 * s);
  }

  NaiveGp(Eigen::MatrixXd X_, Eigen::VectorXd y_, epam::gp::Hyperparams h_)
      : X(std::move(X_)), y(std::move(y_)), h(std::move(h_)) {
    const auto n = X.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) K(i, j) = k(X.row(i).transpose(), X.row(j).transpose());
    }
    K.diagonal().array() += h.noise_var;
    Kinv = K.inverse();
  }

  std::pair<double, double> predict(const Eigen::VectorXd& x) const {
    Eigen::VectorXd ks(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) ks(i) = k(X.row(i).transpose(), x);
    return {ks.dot(Kinv * y), h.signal_var - ks.dot(Kinv * ks) + h.noise_var};
  }
};

}  // namespace testing
