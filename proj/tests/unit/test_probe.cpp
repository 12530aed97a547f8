#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "tcprobe/errors.hpp"
#include "tcprobe/probe.hpp"
#include "tcprobe/stats.hpp"

using namespace tcprobe;

namespace {

Matrix random_matrix(Rng& rng, std::size_t n, std::size_t d, double scale = 1.0) {
  Matrix m(n, d);
  for (auto& v : m.data()) v = rng.normal() * scale + rng.uniform();
  return m;
}

/// Labels from a noisy linear rule, with both classes guaranteed.
std::vector<std::uint8_t> noisy_labels(Rng& rng, const Matrix& X, double noise) {
  std::vector<double> w(X.cols());
  for (auto& v : w) v = rng.normal();
  std::vector<std::uint8_t> y(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double z = noise * rng.normal();
    for (std::size_t c = 0; c < X.cols(); ++c) z += w[c] * X(r, c);
    y[r] = z > 0 ? 1 : 0;
  }
  y[0] = 1;
  y[1] = 0;
  return y;
}

double norm2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> params_of(const ProbeModel& m) {
  auto p = m.weights;
  p.push_back(m.bias);
  return p;
}

}  // namespace

TEST_SUITE("probe") {
  TEST_CASE("standardizer examples") {
    Matrix m(2, 2);
    m(0, 0) = 1;
    m(1, 0) = 3;
    m(0, 1) = 5;
    m(1, 1) = 5;
    const auto s = Standardizer::fit(m);
    CHECK(s.means[0] == 2.0);
    CHECK(s.scales[0] == 1.0);
    CHECK(s.scales[1] == 1.0);
    const auto t = s.transform(m);
    CHECK(t(0, 0) == -1.0);
    CHECK(t(1, 0) == 1.0);
    CHECK(t(0, 1) == 0.0);
    CHECK(t(1, 1) == 0.0);
    CHECK_THROWS_AS(Standardizer::fit(Matrix(0, 3)), ValidationError);
    CHECK_THROWS_AS(s.transform(Matrix(1, 3)), ValidationError);
  }

  TEST_CASE("property: standardised columns have mean 0 and population sd 1") {
    Rng rng(4);
    for (int rep = 0; rep < 50; ++rep) {
      const auto X = random_matrix(rng, 2 + rng.index(60), 1 + rng.index(8), 1 + 100 * rng.uniform());
      const auto T = Standardizer::fit(X).transform(X);
      for (std::size_t c = 0; c < T.cols(); ++c) {
        double mean = 0, ss = 0;
        for (std::size_t r = 0; r < T.rows(); ++r) mean += T(r, c);
        mean /= static_cast<double>(T.rows());
        for (std::size_t r = 0; r < T.rows(); ++r) ss += (T(r, c) - mean) * (T(r, c) - mean);
        CHECK(std::abs(mean) <= 1e-9);
        CHECK(std::abs(std::sqrt(ss / static_cast<double>(T.rows())) - 1.0) <= 1e-9);
      }
    }
  }

  TEST_CASE("two separable points are ranked perfectly") {
    Matrix X(2, 1);
    X(0, 0) = -1;
    X(1, 0) = 1;
    const std::vector<std::uint8_t> y{0, 1};
    const auto m = fit_logistic(X, y);
    const auto p = predict_standardized(m, X);
    CHECK(auroc(p, y) == 1.0);
    CHECK(m.converged);
  }

  TEST_CASE("single-class training data is a distinct error") {
    const Matrix X(3, 2);
    const std::vector<std::uint8_t> y{1, 1, 1};
    CHECK_THROWS_AS(fit_logistic(X, y), SingleClassError);
  }

  TEST_CASE("property: the returned optimum has a vanishing gradient by central differences") {
    Rng rng(71);
    for (int rep = 0; rep < 20; ++rep) {
      const auto raw = random_matrix(rng, 30 + rng.index(80), 1 + rng.index(12));
      const auto X = Standardizer::fit(raw).transform(raw);
      const auto y = noisy_labels(rng, X, 1.0);
      ProbeConfig cfg;
      cfg.C = rep % 2 == 0 ? 0.01 : 1.0;
      cfg.balanced = rep % 3 != 0;
      const auto m = fit_logistic(X, y, cfg);
      CHECK(m.converged);
      auto p = params_of(m);
      std::vector<double> scratch(p.size());
      double worst = 0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double h = 1e-5;
        const double keep = p[k];
        p[k] = keep + h;
        const double up = logistic_objective(X, y, cfg, p, scratch);
        p[k] = keep - h;
        const double down = logistic_objective(X, y, cfg, p, scratch);
        p[k] = keep;
        worst = std::max(worst, std::abs((up - down) / (2 * h)));
      }
      CHECK(worst <= 1e-4);
    }
  }

  TEST_CASE("property: the analytic gradient matches finite differences anywhere") {
    Rng rng(72);
    for (int rep = 0; rep < 20; ++rep) {
      const auto X = random_matrix(rng, 20, 4);
      const auto y = noisy_labels(rng, X, 0.5);
      ProbeConfig cfg;
      cfg.C = 0.3;
      std::vector<double> p(5);
      for (auto& v : p) v = rng.normal();
      std::vector<double> grad(5), scratch(5);
      logistic_objective(X, y, cfg, p, grad);
      for (std::size_t k = 0; k < 5; ++k) {
        auto q = p;
        q[k] += 1e-6;
        const double up = logistic_objective(X, y, cfg, q, scratch);
        q[k] -= 2e-6;
        const double down = logistic_objective(X, y, cfg, q, scratch);
        CHECK(grad[k] == doctest::Approx((up - down) / 2e-6).epsilon(1e-5));
      }
    }
  }

  TEST_CASE("property: flipped labels negate the solution") {
    Rng rng(73);
    for (int rep = 0; rep < 10; ++rep) {
      const auto X = random_matrix(rng, 60, 5);
      auto y = noisy_labels(rng, X, 1.0);
      const auto a = fit_logistic(X, y);
      for (auto& v : y) v = 1 - v;
      const auto b = fit_logistic(X, y);
      for (std::size_t k = 0; k < a.weights.size(); ++k) CHECK(b.weights[k] == doctest::Approx(-a.weights[k]).epsilon(1e-5));
      CHECK(b.bias == doctest::Approx(-a.bias).epsilon(1e-5));
    }
  }

  TEST_CASE("property: weight norm shrinks as C decreases") {
    Rng rng(74);
    for (int rep = 0; rep < 10; ++rep) {
      const auto X = random_matrix(rng, 80, 6);
      const auto y = noisy_labels(rng, X, 0.7);
      double previous = std::numeric_limits<double>::infinity();
      for (double C : {10.0, 1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001}) {
        ProbeConfig cfg;
        cfg.C = C;
        const double n = norm2(fit_logistic(X, y, cfg).weights);
        CHECK(n <= previous * (1 + 1e-6));
        previous = n;
      }
    }
  }

  TEST_CASE("balanced and unweighted fits agree when classes are equal") {
    Rng rng(75);
    const auto X = random_matrix(rng, 40, 3);
    const auto y = noisy_labels(rng, X, 1.0);
    // Stack X with label-flipped X: exactly half of the rows are positive.
    Matrix X2(80, 3);
    std::vector<std::uint8_t> y2(80);
    for (std::size_t r = 0; r < 40; ++r) {
      for (std::size_t c = 0; c < 3; ++c) X2(r, c) = X2(r + 40, c) = X(r, c);
      X2(r + 40, 0) += 0.5;
      y2[r] = y[r];
      y2[r + 40] = 1 - y[r];
    }
    ProbeConfig balanced, plain;
    plain.balanced = false;
    const auto a = fit_logistic(X2, y2, balanced);
    const auto b = fit_logistic(X2, y2, plain);
    CHECK(a.class_weights.first == 1.0);
    CHECK(a.class_weights.second == 1.0);
    for (std::size_t k = 0; k < 3; ++k) CHECK(a.weights[k] == doctest::Approx(b.weights[k]).epsilon(1e-6));
  }

  TEST_CASE("balanced class weights follow n / (2 n_c)") {
    Rng rng(76);
    const auto X = random_matrix(rng, 10, 2);
    const std::vector<std::uint8_t> y{1, 0, 0, 0, 0, 0, 0, 0, 1, 0};
    const auto m = fit_logistic(X, y);
    CHECK(m.class_weights.first == doctest::Approx(10.0 / 16.0));
    CHECK(m.class_weights.second == doctest::Approx(10.0 / 4.0));
  }

  TEST_CASE("property: warm starts and the preconditioner reach the same optimum") {
    Rng rng(77);
    for (int rep = 0; rep < 10; ++rep) {
      const auto raw = random_matrix(rng, 120, 20);
      const auto X = Standardizer::fit(raw).transform(raw);
      const auto y = noisy_labels(rng, X, 2.0);
      ProbeConfig cfg;
      cfg.grad_tol = 1e-9;
      const auto cold = fit_logistic(X, y, cfg);
      auto warm_point = cold;
      for (auto& w : warm_point.weights) w += 0.3 * rng.normal();
      const auto pre = Preconditioner::at_model(X, y, cfg, warm_point);
      const auto warm = fit_logistic(X, y, cfg, &warm_point, &pre);
      CHECK(warm.converged);
      for (std::size_t k = 0; k < cold.weights.size(); ++k) {
        CHECK(warm.weights[k] == doctest::Approx(cold.weights[k]).epsilon(1e-6).scale(1e-3));
      }
    }
  }

  TEST_CASE("fits are deterministic") {
    Rng rng(78);
    const auto X = random_matrix(rng, 200, 30);
    const auto y = noisy_labels(rng, X, 1.0);
    const auto a = fit_logistic(X, y);
    const auto b = fit_logistic(X, y);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    CHECK(a.iterations == b.iterations);
  }

  TEST_CASE("scores: zero model, symmetry, and hand-rolled sigmoid") {
    ProbeModel zero;
    zero.weights = {0.0, 0.0};
    Rng rng(79);
    const auto X = random_matrix(rng, 20, 2);
    for (double p : predict_standardized(zero, X)) CHECK(p == 0.5);

    ProbeModel m;
    m.weights = {0.7, -1.3};
    m.bias = 0.2;
    auto neg = m;
    neg.weights = {-0.7, 1.3};
    neg.bias = -0.2;
    const auto a = predict_standardized(m, X);
    const auto b = predict_standardized(neg, X);
    for (std::size_t r = 0; r < X.rows(); ++r) {
      CHECK(a[r] + b[r] == doctest::Approx(1.0).epsilon(1e-15));
      const double z = 0.7 * X(r, 0) - 1.3 * X(r, 1) + 0.2;
      CHECK(std::abs(a[r] - 1.0 / (1.0 + std::exp(-z))) <= 1e-12);
    }
    CHECK_THROWS_AS(predict_standardized(m, Matrix(2, 3)), ValidationError);
  }

  TEST_CASE("predict_scores standardises before scoring") {
    Rng rng(80);
    const auto raw = random_matrix(rng, 50, 3, 10.0);
    const auto s = Standardizer::fit(raw);
    const auto y = noisy_labels(rng, raw, 0.1);
    const auto m = fit_logistic(s.transform(raw), y);
    CHECK(predict_scores(m, s, raw) == predict_standardized(m, s.transform(raw)));
  }

  TEST_CASE("model persistence round-trips at float precision") {
    Rng rng(81);
    const auto raw = random_matrix(rng, 50, 4);
    const auto s = Standardizer::fit(raw);
    const auto m = fit_logistic(s.transform(raw), noisy_labels(rng, raw, 0.5));
    const auto dir = helpers::scratch_dir("probe-save");
    save_probe(dir / "probe", m, s);
    const auto [m2, s2] = load_probe(dir / "probe");
    CHECK(m2.C == m.C);
    CHECK(m2.converged == m.converged);
    CHECK(m2.bias == m.bias);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(m2.weights[k] == static_cast<double>(static_cast<float>(m.weights[k])));
      CHECK(s2.means[k] == static_cast<double>(static_cast<float>(s.means[k])));
    }
    CHECK_THROWS_AS(load_probe(dir / "absent"), ValidationError);
  }
}
