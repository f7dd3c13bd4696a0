#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "epam/error.hpp"
#include "epam/gpr.hpp"
#include "epam/synthetic.hpp"
#include "support.hpp"

using namespace epam;
using namespace epam::gp;
using testing::rel_err;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

Hyperparams hp(double sf, std::vector<double> scales, double noise) {
  Hyperparams h;
  h.signal_var = sf;
  h.lengthscales = Eigen::Map<Eigen::VectorXd>(scales.data(), static_cast<Eigen::Index>(scales.size()));
  h.noise_var = noise;
  return h;
}

FitConfig quick_fit(int iters = 60, int restarts = 1) {
  FitConfig c;
  c.optim.max_iters = iters;
  c.optim.restarts = restarts;
  c.optim.seed = 5;
  return c;
}

}  // namespace

TEST_SUITE("gpr") {

TEST_CASE("kernel: zero distance gives the signal variance") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10; ++k) {
    const auto h = testing::random_hyperparams(rng, 4);
    const Eigen::VectorXd x = testing::random_matrix(rng, 1, 4).row(0).transpose();
    CHECK(kernel_eval(x, x, h) == h.signal_var);
  }
}

TEST_CASE("kernel: closed-form values") {
  CHECK(kernel_eval(Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0), hp(1, {1, 1}, 0.1)) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(std::exp(-1.0) == doctest::Approx(0.367879).epsilon(1e-6));
  // Scales are sigma_m, so sigma_1^2 = 4 means sigma_1 = 2.
  const double v = kernel_eval(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 0), hp(2, {2, 1}, 0.1));
  CHECK(v == doctest::Approx(2.0 * std::exp(-0.125)).epsilon(1e-15));
  CHECK(v == doctest::Approx(1.76500).epsilon(1e-5));
}

TEST_CASE("kernel: dimension mismatch") {
  CHECK_THROWS_AS(kernel_eval(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0, 0, 0), hp(1, {1, 1}, 0.1)), ValidationError);
  CHECK_THROWS_AS(kernel_matrix(Eigen::MatrixXd::Zero(3, 3), hp(1, {1, 1}, 0.1)), ValidationError);
}

TEST_CASE("kernel: symmetry and stationarity") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const auto h = testing::random_hyperparams(rng, 3);
    const auto P = testing::random_matrix(rng, 3, 3);
    const Eigen::VectorXd a = P.row(0).transpose(), b = P.row(1).transpose(), shift = P.row(2).transpose();
    CHECK(kernel_eval(a, b, h) == kernel_eval(b, a, h));
    const Eigen::VectorXd a2 = a + shift, b2 = b + shift;
    CHECK(kernel_eval(a2, b2, h) == doctest::Approx(kernel_eval(a, b, h)).epsilon(1e-12));
  }
}

TEST_CASE("kernel matrix: small cases and the entrywise oracle") {
  const auto h = hp(1.7, {0.5, 2.0, 1.0}, 0.1);
  Eigen::MatrixXd one(1, 3);
  one << 0.3, -0.2, 1.0;
  const auto K1 = kernel_matrix(one, h);
  CHECK(K1.rows() == 1);
  CHECK(K1(0, 0) == 1.7);

  Eigen::MatrixXd twin(2, 3);
  twin << one, one;
  CHECK((kernel_matrix(twin, h).array() == 1.7).all());

  std::mt19937_64 rng(3);
  const auto X = testing::random_matrix(rng, 6, 3);
  const auto K = kernel_matrix(X, h);
  CHECK(K.isApprox(K.transpose(), 0.0));
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      CHECK(std::abs(K(i, j) - kernel_eval(X.row(i).transpose(), X.row(j).transpose(), h)) <= 1e-14);
    }
  }
  const auto C = cross_kernel(X, X.topRows(2), h);
  CHECK((C - K.leftCols(2)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("log marginal likelihood: closed-form cases") {
  Eigen::MatrixXd x1(1, 1);
  x1 << 0.0;
  const auto h = hp(0.5, {1.0}, 0.5);  // K + noise = [1]
  CHECK(log_marginal_likelihood(x1, Eigen::VectorXd::Zero(1), h).value == doctest::Approx(-kHalfLog2Pi).epsilon(1e-14));
  CHECK(-kHalfLog2Pi == doctest::Approx(-0.918939).epsilon(1e-6));
  CHECK(log_marginal_likelihood(x1, Eigen::VectorXd::Ones(1), h).value ==
        doctest::Approx(-0.5 - kHalfLog2Pi).epsilon(1e-14));

  Eigen::MatrixXd x2(2, 1);
  x2 << 0.0, 1000.0;  // far apart: K + noise = I
  CHECK(log_marginal_likelihood(x2, Eigen::VectorXd::Zero(2), h).value ==
        doctest::Approx(-2.0 * kHalfLog2Pi).epsilon(1e-14));
  CHECK(-2.0 * kHalfLog2Pi == doctest::Approx(-1.837877).epsilon(1e-6));
}

TEST_CASE("log marginal likelihood: matches the dense formula") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    const auto h = testing::random_hyperparams(rng, 3);
    const auto X = testing::random_matrix(rng, 15, 3);
    Eigen::VectorXd y = testing::random_matrix(rng, 15, 1).col(0);
    Eigen::MatrixXd Ky = kernel_matrix(X, h);
    Ky.diagonal().array() += h.noise_var;
    const double want = -0.5 * y.dot(Ky.inverse() * y) - 0.5 * std::log(Ky.determinant()) - 15.0 * kHalfLog2Pi;
    CHECK(rel_err(log_marginal_likelihood(X, y, h).value, want) < 1e-10);
  }
}

TEST_CASE("log marginal likelihood: gradient matches central differences") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const auto h = testing::random_hyperparams(rng, 5);
    const auto X = testing::random_matrix(rng, 20, 5);
    const Eigen::VectorXd y = testing::random_matrix(rng, 20, 1).col(0);
    const auto g = log_marginal_likelihood(X, y, h).gradient;
    const auto theta = h.to_log();
    Eigen::VectorXd fd(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd up = theta, dn = theta;
      up(i) += 1e-5;
      dn(i) -= 1e-5;
      fd(i) = (log_marginal_likelihood(X, y, Hyperparams::from_log(up), false).value -
               log_marginal_likelihood(X, y, Hyperparams::from_log(dn), false).value) /
              2e-5;
    }
    CHECK((g - fd).norm() / fd.norm() < 1e-5);
  }
}

TEST_CASE("log-space round trip and validation") {
  const auto h = hp(1.3, {0.2, 5.0}, 0.01);
  const auto back = Hyperparams::from_log(h.to_log());
  CHECK(back.signal_var == doctest::Approx(1.3));
  CHECK(back.lengthscales(1) == doctest::Approx(5.0));
  CHECK(back.noise_var == doctest::Approx(0.01));
  CHECK_THROWS_AS(hp(0.0, {1.0}, 0.1).validate(), ValidationError);
  CHECK_THROWS_AS(hp(1.0, {-1.0}, 0.1).validate(), ValidationError);
  CHECK_THROWS_AS(hp(1.0, {1.0}, 0.0).validate(), ValidationError);
  CHECK_THROWS_AS(hp(1.0, {NAN}, 0.1).validate(), ValidationError);
}

TEST_CASE("factorization: jitter escalation rescues singular covariances") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(30, 2);
  const auto h = hp(2.0, {1.0, 1.0}, 1e-300);
  Eigen::MatrixXd Ky = kernel_matrix(X, h);
  Ky.diagonal().array() += h.noise_var;
  const auto f = factorize(Ky, h.signal_var);
  CHECK(f.escalations >= 1);
  CHECK(f.escalations <= kMaxJitterEscalations);
  CHECK(f.jitter >= 1e-10 * h.signal_var);
  Eigen::MatrixXd shifted = Ky;
  shifted.diagonal().array() += f.jitter;
  CHECK(((f.lower * f.lower.transpose() - shifted).norm() / shifted.norm()) < 1e-8);
  CHECK(f.lower.isLowerTriangular());

  Eigen::MatrixXd bad = -Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(factorize(bad, 1.0), NumericalError);
}

TEST_CASE("factorization: succeeds for random valid hyperparameters") {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 30; ++k) {
    auto h = testing::random_hyperparams(rng, 3);
    h.noise_var = std::exp(random::uniform(rng, -30.0, 0.0));
    const auto X = testing::random_matrix(rng, 40, 3, -0.05, 0.05);
    Eigen::MatrixXd Ky = kernel_matrix(X, h);
    Ky.diagonal().array() += h.noise_var;
    const auto f = factorize(Ky, h.signal_var);
    CHECK(f.escalations <= kMaxJitterEscalations);
  }
}

TEST_CASE("posterior: one-point closed form") {
  Eigen::MatrixXd X(1, 1);
  X << 0.0;
  Eigen::VectorXd y(1);
  y << 2.0;
  const auto h = hp(0.9, {1.0}, 0.1);
  const Posterior post(X, y, h);
  Eigen::VectorXd q(1);
  q << std::sqrt(2.0 * std::log(1.8));  // k* = 0.5
  const auto m = post.predict(q);
  CHECK(m.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.variance == doctest::Approx(0.9 - 0.25 + 0.1).epsilon(1e-12));
}

TEST_CASE("posterior: equals the direct-inverse oracle") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 25; ++k) {
    const auto n = static_cast<Eigen::Index>(1 + random::bounded(rng, 50));
    const auto d = static_cast<Eigen::Index>(1 + random::bounded(rng, 8));
    const auto h = testing::random_hyperparams(rng, d);
    const auto X = testing::random_matrix(rng, n, d);
    const Eigen::VectorXd y = testing::random_matrix(rng, n, 1).col(0);
    const testing::NaiveGp oracle(X, y, h);
    const Posterior post(X, y, h);
    const auto Q = testing::random_matrix(rng, 5, d);
    const auto batch = post.predict_batch(Q);
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
      const auto [mu, var] = oracle.predict(Q.row(i).transpose());
      const auto m = post.predict(Q.row(i).transpose());
      CHECK(std::abs(m.mean - mu) < 1e-8);
      CHECK(std::abs(m.variance - var) < 1e-8);
      CHECK(std::abs(batch[static_cast<std::size_t>(i)].mean - m.mean) < 1e-12);
      CHECK(std::abs(batch[static_cast<std::size_t>(i)].variance - m.variance) < 1e-12);
    }
  }
}

TEST_CASE("posterior: variance bounds") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 20; ++k) {
    const auto h = testing::random_hyperparams(rng, 2);
    const auto X = testing::random_matrix(rng, 30, 2);
    const Posterior post(X, testing::random_matrix(rng, 30, 1).col(0), h);
    for (const auto& m : post.predict_batch(testing::random_matrix(rng, 50, 2, -4.0, 4.0))) {
      CHECK(m.variance >= 0.0);
      CHECK(m.variance <= h.signal_var + h.noise_var + 1e-8);
    }
  }
}

TEST_CASE("posterior: stored factor reproduces the fresh posterior") {
  std::mt19937_64 rng(9);
  const auto h = testing::random_hyperparams(rng, 2);
  const auto X = testing::random_matrix(rng, 10, 2);
  const Posterior a(X, testing::random_matrix(rng, 10, 1).col(0), h);
  const Posterior b(a.inputs(), a.targets(), a.hyperparams(), a.lower(), a.alpha(), a.jitter());
  const Eigen::Vector2d q(0.1, 0.2);
  CHECK(a.predict(q).mean == b.predict(q).mean);
  CHECK(a.log_marginal_likelihood() == b.log_marginal_likelihood());
  CHECK_THROWS_AS(Posterior(a.inputs(), a.targets(), a.hyperparams(), a.lower().topRows(3), a.alpha(), 0.0),
                  ValidationError);
}

TEST_CASE("posterior: factor and weights satisfy the linear system") {
  std::mt19937_64 rng(10);
  const auto h = testing::random_hyperparams(rng, 3);
  const auto X = testing::random_matrix(rng, 40, 3);
  const Posterior post(X, testing::random_matrix(rng, 40, 1).col(0), h);
  Eigen::MatrixXd Ky = kernel_matrix(X, h);
  Ky.diagonal().array() += h.noise_var + post.jitter();
  CHECK((post.lower() * post.lower().transpose() - Ky).norm() / Ky.norm() < 1e-8);
  CHECK((Ky * post.alpha() - post.targets()).norm() / post.targets().norm() < 1e-8);
}

TEST_CASE("initial hyperparameters follow column spread") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 5, 2, 5, 3, 5, 4, 5;
  const auto h = initial_hyperparams(X);
  CHECK(h.signal_var == 1.0);
  CHECK(h.noise_var == 0.1);
  CHECK(h.lengthscales(0) == doctest::Approx(std::sqrt(1.25)));
  CHECK(h.lengthscales(1) == 1.0);
}

TEST_CASE("hyperparameter fit recovers prior-drawn data within a factor of 2") {
  const auto truth = hp(1.0, {0.8, 1.6}, 0.05);
  const auto draw = synthetic::sample_gp_prior(200, 2, truth, 17);
  const auto fit = optimize_hyperparams(draw.X, draw.y, quick_fit(200, 3));
  const Eigen::VectorXd diff = (fit.hyperparams.to_log() - truth.to_log()).cwiseAbs();
  CHECK(diff.maxCoeff() <= std::log(2.0));
  CHECK(fit.optim.best_value >= log_marginal_likelihood(draw.X, draw.y, truth, false).value - 1e-6);
}

TEST_CASE("fit: deterministic, warns on limits, rejects constant targets") {
  const auto s = synthetic::sample_records(60, {}, {}, 21);
  const auto design = dataset::encode(s.records);
  const auto a = fit(design, quick_fit(15, 2));
  const auto b = fit(design, quick_fit(15, 2));
  CHECK(a.posterior.hyperparams().to_log() == b.posterior.hyperparams().to_log());
  CHECK(a.lml == b.lml);
  CHECK(a.encoding.matrix.size() == 0);

  auto small = quick_fit(15, 1);
  small.max_exact = 40;
  const auto sub = fit(design, small);
  CHECK(sub.posterior.inputs().rows() == 40);
  CHECK(std::find_if(sub.warnings.begin(), sub.warnings.end(), [](const std::string& w) {
          return w.find("subsampled") != std::string::npos;
        }) != sub.warnings.end());

  auto flat = design;
  flat.targets.setZero();
  CHECK_THROWS_AS(fit(flat, quick_fit()), ValidationError);
  const std::vector<std::size_t> one{0};
  CHECK_THROWS_AS(fit(design, one, quick_fit()), ValidationError);
}

TEST_CASE("prediction: interpolation with pinned noise and reversion far away") {
  const auto s = synthetic::sample_records(40, {}, {}, 22);
  const auto design = dataset::encode(s.records);
  auto cfg = quick_fit(40, 1);
  cfg.fixed_noise_var = 1e-12;
  const auto model = fit(design, cfg);
  CHECK(model.posterior.hyperparams().noise_var == 1e-12);
  const double sy = design.target_std;
  const auto preds = predict_batch(model, s.records);
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    CHECK(std::abs((preds[i].mean - s.records[i].energy_j) / sy) < 1e-6);
    CHECK(preds[i].variance <= 1e-6 * sy * sy);
    const auto single = predict(model, s.records[i]);
    // Batch and single paths sum in different orders.
    CHECK(std::abs(single.mean - preds[i].mean) <= 1e-10 * std::max(1.0, std::abs(single.mean)));
  }

  auto far = s.records[0];
  far.memory_mb = 1e12;
  far.inference_ms = 1e12;
  far.processing_ms = 1e12;
  far.dnn_layers = 1e9;
  const auto p = predict(model, far);
  const auto& h = model.posterior.hyperparams();
  CHECK(p.mean == doctest::Approx(design.target_mean).epsilon(1e-9));
  CHECK(p.variance == doctest::Approx((h.signal_var + h.noise_var) * sy * sy).epsilon(1e-9));
  CHECK(predict_batch(model, {}).empty());
}

TEST_CASE("prediction: unseen levels are flagged") {
  const auto s = synthetic::sample_records(40, {}, {}, 23);
  const auto model = fit(dataset::encode(s.records), quick_fit(10, 1));
  auto q = s.records[0];
  q.soc = "Exynos 2100";
  const auto p = predict(model, q);
  CHECK(p.unseen_level);
  CHECK(p.unseen_features == std::vector<std::string>{"soc"});
  CHECK(p.variance >= 0.0);
  CHECK_FALSE(predict(model, s.records[1]).unseen_level);
}

}  // TEST_SUITE
