#include <doctest.h>

#include <cmath>
#include <numeric>

#include "epam/error.hpp"
#include "epam/synthetic.hpp"
#include "support.hpp"

using namespace epam;
using namespace epam::synthetic;

namespace {

TrendConfig noiseless() {
  TrendConfig t;
  t.noise_cv = 0.0;
  t.measurement_cv = 0.0;
  t.memory_cv = 0.0;
  return t;
}

SampleOptions only(const std::string& model) {
  SampleOptions o;
  o.devices = {*catalog::find_device("device-1")};
  o.models = {*catalog::find_model(model)};
  o.processors = {Processor::cpu1};
  return o;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

}  // namespace

TEST_SUITE("synthetic") {

TEST_CASE("calibration anchors are exact") {
  const auto nlp = sample_records(1, only("MobileBERT-QA"), noiseless(), 1);
  CHECK(nlp.records[0].energy_j == 5.7);
  CHECK(nlp.records[0].app_type == "nlp");
  const auto speech = sample_records(1, only("TF-ASR"), noiseless(), 1);
  CHECK(speech.records[0].energy_j == 0.16185);
  CHECK(speech.records[0].source == "CPU");
  CHECK(speech.records[0].threads == 1.0);
}

TEST_CASE("every trend factor is reproduced with noise off") {
  const auto t = noiseless();
  const auto d1 = *catalog::find_device("device-1");
  const auto f = *catalog::find_model("MobileNetV1-Float");
  const auto q = *catalog::find_model("MobileNetV1-Quant");
  const auto cpu1 = noiseless_record({d1, f, Processor::cpu1}, t);
  const auto cpu4 = noiseless_record({d1, f, Processor::cpu4}, t);
  const auto gpu = noiseless_record({d1, f, Processor::gpu}, t);
  const auto qcpu1 = noiseless_record({d1, q, Processor::cpu1}, t);
  const auto qcpu4 = noiseless_record({d1, q, Processor::cpu4}, t);
  CHECK(testing::rel_err(qcpu1.energy_j / cpu1.energy_j, 0.75) < 1e-12);
  CHECK(testing::rel_err(qcpu1.inference_ms / cpu1.inference_ms, 0.87) < 1e-12);
  CHECK(testing::rel_err(gpu.energy_j / cpu1.energy_j, 0.73) < 1e-12);
  CHECK(testing::rel_err(gpu.energy_j / cpu4.energy_j, 0.75) < 1e-12);
  CHECK(testing::rel_err(gpu.inference_ms / cpu1.inference_ms, 0.92) < 1e-12);
  CHECK(testing::rel_err(cpu4.inference_ms / cpu1.inference_ms, 0.96) < 1e-12);
  CHECK(testing::rel_err(qcpu4.energy_j / qcpu1.energy_j, 1.03) < 1e-12);
  CHECK(qcpu1.memory_mb < cpu1.memory_mb);
  CHECK(gpu.memory_mb > cpu1.memory_mb);
}

TEST_CASE("quantized to float energy ratio over 1,000 pairs") {
  const auto [floats, quants] = sample_quantization_pairs(1000, catalog::devices(), {}, 11);
  REQUIRE(floats.records.size() == 1000);
  REQUIRE(quants.records.size() == 1000);
  std::vector<double> ef;
  std::vector<double> eq;
  for (std::size_t i = 0; i < 1000; ++i) {
    ef.push_back(floats.records[i].energy_j);
    eq.push_back(quants.records[i].energy_j);
    CHECK(floats.records[i].soc == quants.records[i].soc);
    CHECK(quants.records[i].dnn_model == floats.records[i].dnn_model.substr(0, floats.records[i].dnn_model.size() - 6) + "-Quant");
  }
  CHECK(std::abs(mean(eq) / mean(ef) - 0.75) <= 0.02);
}

TEST_CASE("quantized below float on the CPU sources") {
  const auto t = noiseless();
  for (const auto& d : catalog::devices()) {
    for (auto [fn, qn] : {std::pair{"MobileNetV1-Float", "MobileNetV1-Quant"},
                          std::pair{"EfficientNetLite-Float", "EfficientNetLite-Quant"}}) {
      for (auto p : {Processor::cpu1, Processor::cpu4}) {
        const auto f = noiseless_record({d, *catalog::find_model(fn), p}, t);
        const auto q = noiseless_record({d, *catalog::find_model(qn), p}, t);
        CHECK(q.energy_j < f.energy_j);
      }
    }
  }
}

TEST_CASE("NNAPI regression on the quantized EfficientNet") {
  const auto t = noiseless();
  const auto d = *catalog::find_device("device-1");
  const auto f = noiseless_record({d, *catalog::find_model("EfficientNetLite-Float"), Processor::nnapi}, t);
  const auto q = noiseless_record({d, *catalog::find_model("EfficientNetLite-Quant"), Processor::nnapi}, t);
  const auto q1 = noiseless_record({d, *catalog::find_model("EfficientNetLite-Quant"), Processor::cpu1}, t);
  CHECK(q.energy_j > f.energy_j);
  CHECK(q.energy_j > q1.energy_j);
  CHECK(q.inference_ms > q1.inference_ms);
  const auto s = noiseless_record({d, *catalog::find_model("TF-ASR"), Processor::nnapi}, t);
  const auto s1 = noiseless_record({d, *catalog::find_model("TF-ASR"), Processor::cpu1}, t);
  CHECK(s.energy_j < s1.energy_j);
}

TEST_CASE("records are deterministic per seed and valid") {
  const auto a = sample_records(300, {}, {}, 9);
  const auto b = sample_records(300, {}, {}, 9);
  const auto c = sample_records(300, {}, {}, 10);
  CHECK(a.records == b.records);
  CHECK(dataset::write_records(a.records) == dataset::write_records(b.records));
  CHECK_FALSE(a.records == c.records);
  for (const auto& r : a.records) {
    CHECK_NOTHROW(dataset::validate(r));
    if (r.source == "GPU") CHECK(catalog::find_model(r.dnn_model)->supports_gpu);
  }
  CHECK(a.noiseless_energy.size() == 300);
  CHECK(a.device_names.size() == 300);
}

TEST_CASE("sampler arguments are checked") {
  CHECK_THROWS_AS(sample_records(0, {}, {}, 1), ValidationError);
  SampleOptions o;
  o.devices.clear();
  CHECK_THROWS_AS(sample_records(5, o, {}, 1), ValidationError);
  o = {};
  o.models.clear();
  CHECK_THROWS_AS(sample_records(5, o, {}, 1), ValidationError);
  o = {};
  o.models = {*catalog::find_model("MobileBERT-QA")};
  o.processors = {Processor::gpu};
  CHECK_THROWS_AS(sample_records(5, o, {}, 1), ValidationError);
  TrendConfig t;
  t.quant_energy_factor = 2.0;
  CHECK_THROWS_AS(t.validate(), ValidationError);
  t = {};
  t.noise_cv = -0.1;
  CHECK_THROWS_AS(t.validate(), ValidationError);
}

TEST_CASE("prior with vanishing signal is pure noise") {
  gp::Hyperparams h{1e-12, Eigen::VectorXd::Ones(3), 0.25};
  const auto draw = sample_gp_prior(500, 3, h, 4);
  CHECK(draw.X.minCoeff() >= -2.0);
  CHECK(draw.X.maxCoeff() <= 2.0);
  const double m = draw.y.mean();
  const double var = (draw.y.array() - m).square().sum() / double(draw.y.size() - 1);
  CHECK(std::abs(var / 0.25 - 1.0) < 0.2);
}

TEST_CASE("prior draws share values at duplicate inputs") {
  Eigen::MatrixXd X(5, 2);
  X << 0.1, 0.2, 1.0, -1.0, 0.1, 0.2, 0.5, 0.5, 1.0, -1.0;
  gp::Hyperparams h{1.3, Eigen::Vector2d(0.7, 1.1), 0.0};
  const auto y = sample_gp_prior_at(X, h, 8);
  CHECK(y(0) == y(2));
  CHECK(y(1) == y(4));
  CHECK(y(0) != y(3));
  CHECK(sample_gp_prior_at(X, h, 8) == y);
}

TEST_CASE("prior draw refit recovers the noise floor") {
  gp::Hyperparams h{1.0, Eigen::Vector2d(1.0, 0.8), 0.01};
  const auto draw = sample_gp_prior(500, 2, h, 21);
  const Eigen::MatrixXd Xtr = draw.X.topRows(400);
  const Eigen::VectorXd ytr = draw.y.head(400);
  gp::FitConfig cfg;
  cfg.optim.restarts = 1;
  const auto fit = gp::optimize_hyperparams(Xtr, ytr, cfg);
  const gp::Posterior post(Xtr, ytr, fit.hyperparams);
  double sse = 0.0;
  for (Eigen::Index i = 400; i < 500; ++i) sse += std::pow(post.predict(draw.X.row(i).transpose()).mean - draw.y(i), 2);
  CHECK(std::sqrt(sse / 100.0) <= 1.2 * std::sqrt(h.noise_var));
}

TEST_CASE("trace emission is deterministic") {
  TracePlan plan;
  plan.cycles = {{{"processing", 0.05, 400.0, std::nullopt}, {"inference", 0.1, 800.0, 200.0}}};
  plan.noise_mw = 3.0;
  plan.clock_offset_s = 0.7;
  const auto d = *catalog::find_device("device-2");
  const auto a = emit_power_trace(plan, d, 5);
  const auto b = emit_power_trace(plan, d, 5);
  CHECK(a.power_csv == b.power_csv);
  CHECK(a.latency_csv == b.latency_csv);
  CHECK(emit_power_trace(plan, d, 6).power_csv != a.power_csv);
  CHECK(a.base_power_mw == d.base_power_mw);
}

TEST_CASE("catalog cycle plans carry the expected energy") {
  const auto t = noiseless();
  for (const auto& d : catalog::devices()) {
    for (const auto& m : catalog::models()) {
      for (auto p : all_processors()) {
        if (!supports(m, p)) continue;
        const Condition c{d, m, p};
        const auto segs = cycle_plan(c, t);
        double j = 0.0;
        for (const auto& s : segs) j += s.duration_s * s.level_mw / 1000.0;
        CHECK(testing::rel_err(j, noiseless_record(c, t).energy_j) < 1e-12);
        CHECK(cycle_plan(c, t, true).size() == segs.size() + 1);
      }
    }
  }
}

}  // TEST_SUITE
