#include <doctest.h>

#include <cmath>
#include <limits>

#include "masklab/adamw.hpp"

using namespace masklab;

namespace {

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1>;

}  // namespace

TEST_SUITE_BEGIN("adamw");

TEST_CASE("single step matches the closed form at 64-bit") {
  AdamWConfig<double> cfg;
  cfg.lr = 1e-3;
  cfg.beta1 = 0.9;
  cfg.beta2 = 0.95;
  cfg.eps = 1e-8;
  cfg.weight_decay = 0.01;
  cfg.clip = 0.0;  // isolate the update rule

  Vec theta0(3), g(3);
  theta0 << 0.5, -1.25, 2.0;
  g << 0.3, -0.7, 0.01;

  AdamW<double> opt(3, cfg);
  Vec theta = theta0, grads = g;
  opt.step(theta, grads);

  // From zero moments the bias corrections cancel exactly: m_hat = g,
  // v_hat = g^2, update = lr * (g / (|g| + eps) + wd * theta0).
  for (int i = 0; i < 3; ++i) {
    const double expect = theta0(i) - cfg.lr * (g(i) / (std::abs(g(i)) + cfg.eps) +
                                                cfg.weight_decay * theta0(i));
    CHECK(std::abs(theta(i) - expect) < 1e-10);
  }
}

TEST_CASE("two steps match an independently coded recurrence") {
  AdamWConfig<double> cfg;
  cfg.lr = 3e-4;
  cfg.clip = 0.0;

  Vec theta(2), g1(2), g2(2);
  theta << 1.0, -2.0;
  g1 << 0.5, 0.25;
  g2 << -0.125, 0.75;

  AdamW<double> opt(2, cfg);
  Vec t = theta, tmp = g1;
  opt.step(t, tmp);
  tmp = g2;
  opt.step(t, tmp);

  // Reference recurrence written straight from the definition.
  Vec m = Vec::Zero(2), v = Vec::Zero(2), ref = theta;
  int step = 0;
  for (const Vec& g : {g1, g2}) {
    ++step;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    for (int i = 0; i < 2; ++i) {
      const double mh = m(i) / (1.0 - std::pow(cfg.beta1, step));
      const double vh = v(i) / (1.0 - std::pow(cfg.beta2, step));
      ref(i) -= cfg.lr * (mh / (std::sqrt(vh) + cfg.eps) + cfg.weight_decay * ref(i));
    }
  }
  for (int i = 0; i < 2; ++i) CHECK(std::abs(t(i) - ref(i)) < 1e-10);
}

TEST_CASE("weight decay is decoupled from the gradient path") {
  AdamWConfig<double> cfg;
  cfg.clip = 0.0;
  AdamW<double> opt(1, cfg);
  Vec theta(1), g(1);
  theta << 4.0;
  g << 0.0;
  opt.step(theta, g);
  // Zero gradient: only the decay term moves the parameter.
  CHECK(std::abs(theta(0) - 4.0 * (1.0 - cfg.lr * cfg.weight_decay)) < 1e-14);
}

TEST_CASE("global-norm clip rescales gradients above the threshold") {
  AdamWConfig<double> cfg;
  cfg.clip = 1.0;
  AdamW<double> opt(2, cfg);
  Vec theta = Vec::Zero(2), g(2);
  g << 3.0, 4.0;  // norm 5
  const double norm = opt.step(theta, g);
  CHECK(norm == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(g.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(g(0) - 0.6) < 1e-12);
  CHECK(std::abs(g(1) - 0.8) < 1e-12);

  // Below the threshold nothing is touched.
  Vec small(2);
  small << 0.3, 0.4;
  opt.step(theta, small);
  CHECK(std::abs(small(0) - 0.3) < 1e-15);
}

TEST_CASE("non-finite gradients abort before state moves") {
  AdamW<double> opt(2, {});
  Vec theta = Vec::Ones(2), g(2);
  g << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(opt.step(theta, g));
  CHECK(opt.iterations() == 0);
  CHECK(opt.moment1().cwiseAbs().maxCoeff() == 0.0);
  CHECK(theta(0) == 1.0);
}

TEST_CASE("restore rewires the full optimizer state") {
  AdamWConfig<double> cfg;
  AdamW<double> a(2, cfg), b(2, cfg);
  Vec theta = Vec::Ones(2);
  for (int i = 0; i < 5; ++i) {
    Vec g(2);
    g << 0.1 * (i + 1), -0.2;
    a.step(theta, g);
  }
  b.restore(a.iterations(), a.moment1(), a.moment2());

  Vec ta = theta, tb = theta;
  Vec ga(2), gb(2);
  ga << 0.5, 0.5;
  gb << 0.5, 0.5;
  a.step(ta, ga);
  b.step(tb, gb);
  CHECK(ta == tb);  // identical continuation, bit for bit
}

TEST_SUITE_END();
