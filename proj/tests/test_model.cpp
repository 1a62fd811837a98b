#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>

#include "fairsel/model.hpp"
#include "test_util.hpp"

using namespace fairsel;

TEST_CASE("predict_proba basics") {
  const Dataset d = test::make_dataset({{0.0, 0.0}, {std::log(3.0), 7.0}}, {0, 1}, {0, 1});

  LinearModel zero = LinearModel::zeros(2);
  auto p = predict_proba(zero, d.features);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));

  LinearModel m = LinearModel::zeros(2);
  m.weights = {1.0, 0.0};
  p = predict_proba(m, d.features);
  CHECK(p[1] == doctest::Approx(0.75));
}

TEST_CASE("predict_proba saturates without overflow") {
  const Dataset d = test::make_dataset({{500.0}}, {1}, {0});
  LinearModel m = LinearModel::zeros(1);
  m.weights = {1.0};
  const auto p = predict_proba(m, d.features);
  CHECK(p[0] >= 1.0 - 1e-9);
  CHECK(std::isfinite(p[0]));
}

TEST_CASE("predict_proba rejects dimension mismatch") {
  const Dataset d = test::make_dataset({{1.0, 2.0}}, {1}, {0});
  LinearModel m = LinearModel::zeros(3);
  CHECK_THROWS(predict_proba(m, d.features));
}

TEST_CASE("per_sample_loss values") {
  // p = 0.5 exactly: loss = ln 2.
  const Dataset d = test::make_dataset({{0.0}}, {1}, {0});
  const LinearModel zero = LinearModel::zeros(1);
  const auto l = per_sample_loss(zero, d);
  CHECK(std::abs(l[0] - std::log(2.0)) < 1e-12);

  // Confident correct prediction: loss below 1e-11.
  const Dataset conf = test::make_dataset({{400.0}}, {1}, {0});
  LinearModel m = LinearModel::zeros(1);
  m.weights = {1.0};
  CHECK(per_sample_loss(m, conf)[0] <= 1e-11);
}

TEST_CASE("gradient closed form on a single sample") {
  // y=1, p=0.5, x=[2] -> grad_w = (p-y)*x = -1, grad_b = -0.5.
  const Dataset d = test::make_dataset({{2.0}}, {1}, {0});
  const LinearModel zero = LinearModel::zeros(1);
  const std::vector<std::size_t> batch{0};
  const Gradient g = gradient(zero, d, batch);
  CHECK(g.weights[0] == doctest::Approx(-1.0));
  CHECK(g.bias == doctest::Approx(-0.5));
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 6, m = 4;
    std::vector<std::vector<double>> rows(n, std::vector<double>(m));
    std::vector<int> labels(n), sens(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < m; ++c) rows[i][c] = normal(rng);
      labels[i] = coin(rng);
      sens[i] = coin(rng);
    }
    const Dataset d = test::make_dataset(rows, labels, sens);
    LinearModel model = LinearModel::zeros(m);
    for (auto& w : model.weights) w = normal(rng);
    model.bias = normal(rng);

    std::vector<std::size_t> batch(n);
    for (std::size_t i = 0; i < n; ++i) batch[i] = i;
    const Gradient g = gradient(model, d, batch);

    auto mean_ce = [&](const LinearModel& mm) {
      const auto l = per_sample_loss(mm, d);
      double s = 0.0;
      for (double v : l) s += v;
      return s / static_cast<double>(n);
    };
    const double h = 1e-5;
    for (std::size_t c = 0; c <= m; ++c) {
      LinearModel up = model, dn = model;
      double analytic = 0.0;
      if (c < m) {
        up.weights[c] += h;
        dn.weights[c] -= h;
        analytic = g.weights[c];
      } else {
        up.bias += h;
        dn.bias -= h;
        analytic = g.bias;
      }
      const double fd = (mean_ce(up) - mean_ce(dn)) / (2 * h);
      worst = std::max(worst, std::abs(fd - analytic) / std::max(1e-8, std::abs(fd)));
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("weighted gradient is invariant to weight rescaling") {
  const Dataset d =
      test::make_dataset({{1.0, -1.0}, {0.5, 2.0}, {-2.0, 0.0}}, {1, 0, 1}, {0, 1, 0});
  LinearModel m = LinearModel::zeros(2);
  m.weights = {0.2, -0.4};
  const std::vector<std::size_t> batch{0, 1, 2};
  const std::vector<double> w1{1.0, 2.0, 3.0};
  const std::vector<double> w2{2.0, 4.0, 6.0};
  const Gradient g1 = gradient(m, d, batch, w1);
  const Gradient g2 = gradient(m, d, batch, w2);
  CHECK(g1.weights[0] == doctest::Approx(g2.weights[0]));
  CHECK(g1.weights[1] == doctest::Approx(g2.weights[1]));
  CHECK(g1.bias == doctest::Approx(g2.bias));

  CHECK_THROWS(gradient(m, d, {}));
  const std::vector<double> neg{1.0, -1.0, 1.0};
  CHECK_THROWS(gradient(m, d, batch, neg));
}

TEST_CASE("penalty_loss covariance arithmetic") {
  // batch z=[0,1]; choose features so p = [0.2, 0.8].
  const double x0 = std::log(0.2 / 0.8);
  const double x1 = std::log(0.8 / 0.2);
  const Dataset d = test::make_dataset({{x0}, {x1}}, {0, 1}, {0, 1});
  LinearModel m = LinearModel::zeros(1);
  m.weights = {1.0};
  const std::vector<std::size_t> batch{0, 1};

  const double base = penalty_loss(m, d, batch, PenaltyConfig{0.0});
  const auto losses = per_sample_loss(m, d);
  CHECK(base == doctest::Approx((losses[0] + losses[1]) / 2.0));

  const double with_mu = penalty_loss(m, d, batch, PenaltyConfig{2.0});
  CHECK(with_mu - base == doctest::Approx(2.0 * 0.15).epsilon(1e-9));

  // Constant z in the batch: no penalty.
  const Dataset dz = test::make_dataset({{x0}, {x1}}, {0, 1}, {1, 1});
  CHECK(penalty_loss(m, dz, batch, PenaltyConfig{5.0}) == doctest::Approx(base));
}

TEST_CASE("penalty_gradient matches finite differences") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  const std::size_t n = 10, m = 3;
  std::vector<std::vector<double>> rows(n, std::vector<double>(m));
  std::vector<int> labels(n), sens(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < m; ++c) rows[i][c] = normal(rng);
    labels[i] = coin(rng);
    sens[i] = coin(rng);
  }
  const Dataset d = test::make_dataset(rows, labels, sens);
  LinearModel model = LinearModel::zeros(m);
  for (auto& w : model.weights) w = 0.3 * normal(rng);
  model.bias = 0.1;
  std::vector<std::size_t> batch(n);
  for (std::size_t i = 0; i < n; ++i) batch[i] = i;
  const PenaltyConfig pc{1.5};
  const Gradient g = penalty_gradient(model, d, batch, pc);
  const double h = 1e-6;
  for (std::size_t c = 0; c <= m; ++c) {
    LinearModel up = model, dn = model;
    double analytic;
    if (c < m) {
      up.weights[c] += h;
      dn.weights[c] -= h;
      analytic = g.weights[c];
    } else {
      up.bias += h;
      dn.bias -= h;
      analytic = g.bias;
    }
    const double fd =
        (penalty_loss(up, d, batch, pc) - penalty_loss(dn, d, batch, pc)) / (2 * h);
    CHECK(std::abs(fd - analytic) < 1e-5);
  }
}

TEST_CASE("sgd_step updates and rejects non-finite gradients") {
  LinearModel m = LinearModel::zeros(1, 0.1);
  Gradient g;
  g.weights = {0.0};
  g.bias = 1.0;
  sgd_step(m, g);
  CHECK(m.bias == doctest::Approx(-0.1));
  sgd_step(m, Gradient{{0.0}, 0.0});
  CHECK(m.bias == doctest::Approx(-0.1));

  Gradient bad;
  bad.weights = {std::numeric_limits<double>::quiet_NaN()};
  bad.bias = 0.0;
  CHECK_THROWS_AS(sgd_step(m, bad), std::runtime_error);
}

TEST_CASE("two half-lr steps equal one full step under a constant gradient") {
  Gradient g;
  g.weights = {2.0};
  g.bias = -1.0;
  LinearModel full = LinearModel::zeros(1, 0.2);
  sgd_step(full, g);
  LinearModel halves = LinearModel::zeros(1, 0.1);
  sgd_step(halves, g);
  sgd_step(halves, g);
  CHECK(full.weights[0] == halves.weights[0]);
  CHECK(full.bias == halves.bias);
}

TEST_CASE("training on separable two-point data converges") {
  const Dataset d = test::make_dataset({{1.0}, {-1.0}}, {1, 0}, {0, 1});
  LinearModel m = LinearModel::zeros(1, 0.5);
  std::vector<std::size_t> batch{0, 1};
  for (int step = 0; step < 5000; ++step) sgd_step(m, gradient(m, d, batch));
  CHECK(mean_loss(m, d) < 1e-2);
}

TEST_CASE("checkpoint formats agree bit for bit") {
  LinearModel m = LinearModel::zeros(3, 0.0005);
  m.weights = {0.12345678901234567, -3.9876543210987654e-5, 1.0 / 3.0};
  m.bias = -0.98765432109876543;
  const std::string bin = "/tmp/fairsel_test_model.bin";
  const std::string js = "/tmp/fairsel_test_model.json";
  save_model_binary(m, bin);
  save_model_json(m, js);
  const LinearModel from_bin = load_model_binary(bin);
  const LinearModel from_json = load_model_json(js);

  auto bits = [](double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    return u;
  };
  REQUIRE(from_bin.weights.size() == from_json.weights.size());
  for (std::size_t c = 0; c < m.weights.size(); ++c) {
    CHECK(bits(from_bin.weights[c]) == bits(m.weights[c]));
    CHECK(bits(from_json.weights[c]) == bits(m.weights[c]));
  }
  CHECK(bits(from_bin.bias) == bits(m.bias));
  CHECK(bits(from_json.bias) == bits(m.bias));
  CHECK(bits(from_bin.learning_rate) == bits(m.learning_rate));
  CHECK(bits(from_json.learning_rate) == bits(m.learning_rate));
  std::remove(bin.c_str());
  std::remove(js.c_str());
}
