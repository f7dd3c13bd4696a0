#include "epam/hyperopt.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <Eigen/Dense>

#include "epam/error.hpp"
#include "epam/random.hpp"

namespace epam::hyperopt {
namespace {

constexpr int kMaxBacktracks = 40;

bool finite(const Evaluation& e) { return std::isfinite(e.value) && e.gradient.allFinite(); }

// Evaluates, mapping library errors to "no value".
bool try_eval(const Objective& f, const Eigen::VectorXd& x, Evaluation& out) {
  try {
    out = f(x);
  } catch (const Error&) {
    return false;
  }
  return finite(out);
}

}  // namespace

void OptimConfig::validate() const {
  if (max_iters <= 0) throw ValidationError("max_iters must be positive");
  if (!(grad_tol > 0.0)) throw ValidationError("grad_tol must be positive");
  if (restarts < 1) throw ValidationError("restarts must be >= 1");
  if (!(contraction > 0.0 && contraction < 1.0)) throw ValidationError("contraction must be in (0,1)");
  if (!(sufficient_increase > 0.0 && sufficient_increase < 1.0)) {
    throw ValidationError("sufficient_increase must be in (0,1)");
  }
  if (!(max_step > 0.0)) throw ValidationError("max_step must be positive");
  if (!(perturbation_scale >= 0.0)) throw ValidationError("perturbation_scale must be non-negative");
}

OptimResult maximize(const Objective& objective, const Eigen::VectorXd& init, const OptimConfig& config) {
  config.validate();
  const auto n = init.size();

  Evaluation cur;
  if (!try_eval(objective, init, cur)) throw NumericalError("objective is not finite at the initial point");
  if (cur.gradient.size() != n) throw ValidationError("objective gradient has the wrong dimension");

  OptimResult res;
  res.best_params = init;
  res.best_value = cur.value;
  res.trace.push_back(cur.value);

  Eigen::VectorXd x = init;
  // Inverse Hessian approximation of the negated objective.
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;

  for (int it = 0; it < config.max_iters; ++it) {
    if (cur.gradient.lpNorm<Eigen::Infinity>() < config.grad_tol) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      break;
    }
    res.iterations = it + 1;

    Eigen::VectorXd dir = H * cur.gradient;
    double slope = cur.gradient.dot(dir);
    if (!(slope > 0.0)) {
      H.setIdentity();
      dir = cur.gradient;
      slope = dir.squaredNorm();
    }
    const double longest = dir.lpNorm<Eigen::Infinity>();
    if (longest > config.max_step) {
      dir *= config.max_step / longest;
      slope = cur.gradient.dot(dir);
    }

    double step = 1.0;
    Evaluation next;
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      const Eigen::VectorXd trial = x + step * dir;
      if (try_eval(objective, trial, next) &&
          next.value >= cur.value + config.sufficient_increase * step * slope) {
        accepted = true;
        break;
      }
      step *= config.contraction;
    }
    if (!accepted) {
      res.message = "line search failed";
      break;
    }

    const Eigen::VectorXd s = step * dir;
    const Eigen::VectorXd y = cur.gradient - next.gradient;  // gradient change of the negated objective
    x += s;
    cur = std::move(next);
    res.trace.push_back(cur.value);
    res.best_params = x;
    res.best_value = cur.value;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      H += ((1.0 + rho * y.dot(Hy)) * rho) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
    }
  }
  if (!res.converged && res.message.empty()) {
    if (cur.gradient.lpNorm<Eigen::Infinity>() < config.grad_tol) {
      res.converged = true;
      res.message = "gradient tolerance reached";
    } else {
      res.message = "iteration limit reached";
    }
  }
  return res;
}

OptimResult multi_restart(const Objective& objective, const std::vector<Eigen::VectorXd>& inits,
                          const OptimConfig& config) {
  if (inits.empty()) throw ValidationError("multi_restart needs at least one init");
  std::optional<OptimResult> best;
  std::string failures;
  for (std::size_t k = 0; k < inits.size(); ++k) {
    try {
      auto r = maximize(objective, inits[k], config);
      r.restart_index = k;
      if (!best || r.best_value > best->best_value) best = std::move(r);
    } catch (const NumericalError& e) {
      failures += " [restart " + std::to_string(k) + ": " + e.what() + "]";
    }
  }
  if (!best) throw NumericalError("all restarts failed:" + failures);
  return *best;
}

std::vector<Eigen::VectorXd> default_inits(const Eigen::VectorXd& heuristic, const OptimConfig& config) {
  config.validate();
  std::vector<Eigen::VectorXd> out{heuristic};
  std::mt19937_64 rng(config.seed);
  for (int k = 1; k < config.restarts; ++k) {
    Eigen::VectorXd v = heuristic;
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += config.perturbation_scale * random::standard_normal(rng);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace epam::hyperopt
