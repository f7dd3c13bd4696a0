#pragma once

// Gradient-based maximization for marginal-likelihood hyperparameter search.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace epam::hyperopt {

struct OptimConfig {
  int max_iters = 200;
  double grad_tol = 1e-6;  // on the infinity norm of the gradient
  int restarts = 3;
  std::uint64_t seed = 0;
  double contraction = 0.5;
  double sufficient_increase = 1e-4;
  double max_step = 2.0;  // infinity-norm cap on a trial step
  double perturbation_scale = 0.5;

  void validate() const;
};

struct Evaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Objectives may throw epam::Error for infeasible points; the line search
/// treats those as rejected trials.
using Objective = std::function<Evaluation(const Eigen::VectorXd&)>;

struct OptimResult {
  Eigen::VectorXd best_params;
  double best_value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // accepted values, non-decreasing
  std::size_t restart_index = 0;
  std::string message;
};

/// BFGS ascent with backtracking (Armijo) line search.
OptimResult maximize(const Objective& objective, const Eigen::VectorXd& init, const OptimConfig& config);

/// Runs maximize from each init and keeps the best; earlier inits win ties.
OptimResult multi_restart(const Objective& objective, const std::vector<Eigen::VectorXd>& inits,
                          const OptimConfig& config);

/// The heuristic init followed by restarts-1 seeded Gaussian perturbations of it.
std::vector<Eigen::VectorXd> default_inits(const Eigen::VectorXd& heuristic, const OptimConfig& config);

}  // namespace epam::hyperopt
