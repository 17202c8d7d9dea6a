#include <gtest/gtest.h>

#include "pelu/activations.hpp"
#include "pelu/optim.hpp"
#include "pelu/rng.hpp"

using namespace pelu;

namespace {

SgdConfig plain(double lr, double mu = 0.0, double wd = 0.0) {
  SgdConfig cfg;
  cfg.learning_rate = lr;
  cfg.momentum = mu;
  cfg.weight_decay = wd;
  return cfg;
}

}  // namespace

TEST(StepUnconstrained, PlainGradientStep) {
  auto p = Tensord::vector({5});
  auto g = Tensord::vector({2});
  auto v = Tensord::vector({0});
  step_unconstrained(p, g, v, plain(1.0));
  EXPECT_EQ(p[0], 3.0);
  EXPECT_EQ(v[0], -2.0);
}

TEST(StepUnconstrained, ZeroGradientLeavesParam) {
  auto p = Tensord::vector({1.5, -2});
  auto v = Tensord::vector({0, 0});
  step_unconstrained(p, Tensord({2}), v, plain(0.3, 0.9));
  EXPECT_EQ(p.values(), (std::vector<double>{1.5, -2}));
}

TEST(StepUnconstrained, TwoMomentumStepsUnrolled) {
  const double mu = 0.9, lr = 0.1, wd = 0.01;
  auto p = Tensord::vector({1.0});
  auto v = Tensord::vector({0.0});
  step_unconstrained(p, Tensord::vector({0.5}), v, plain(lr, mu, wd));
  step_unconstrained(p, Tensord::vector({-0.2}), v, plain(lr, mu, wd));
  const double d1 = -lr * (0.5 + wd * 1.0);
  const double p1 = 1.0 + d1;
  const double d2 = mu * d1 - lr * (-0.2 + wd * p1);
  EXPECT_DOUBLE_EQ(v[0], d2);
  EXPECT_DOUBLE_EQ(p[0], p1 + d2);
}

TEST(StepUnconstrained, ShapeMismatchThrows) {
  auto p = Tensord({2});
  auto v = Tensord({3});
  EXPECT_THROW(step_unconstrained(p, Tensord({2}), v, plain(0.1)), ShapeError);
}

TEST(StepConstrained, ClampsAtFloor) {
  // mu = 0, lr = 1, grad 0.65: delta = -0.65 so value + delta = -0.5.
  const auto s = step_constrained(0.15, 0.65, 0.0, plain(1.0));
  EXPECT_EQ(s.value, 0.1);
  EXPECT_DOUBLE_EQ(s.velocity, -0.65);
}

TEST(StepConstrained, ZeroGradientLeavesValue) {
  const auto s = step_constrained(0.7, 0.0, 0.0, plain(0.5, 0.9));
  EXPECT_EQ(s.value, 0.7);
  EXPECT_EQ(s.velocity, 0.0);
}

TEST(StepConstrained, VelocityNotClampedAtFloor) {
  auto s = step_constrained(0.1, 5.0, -1.0, plain(0.1, 0.9));
  EXPECT_EQ(s.value, 0.1);
  EXPECT_DOUBLE_EQ(s.velocity, 0.9 * -1.0 - 0.1 * 5.0);
}

TEST(StepConstrained, FuzzNeverBelowFloor) {
  Rng rng(21);
  for (int run = 0; run < 10; ++run) {
    SgdConfig cfg = plain(rng.uniform(1e-4, 2.0), rng.uniform(0.0, 0.99), rng.uniform(0.0, 0.1));
    double value = rng.uniform(0.1, 5.0), velocity = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double grad = rng.normal(0.0, std::pow(10.0, rng.uniform(-3.0, 2.0)));
      const auto s = step_constrained(value, grad, velocity, cfg);
      ASSERT_GE(s.value, kParamFloor);
      value = s.value;
      velocity = s.velocity;
    }
  }
}

TEST(Sgd, DescentOnQuadratic) {
  Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    // f(x) = 0.5 * sum c_i (x_i - t_i)^2, c_i in [0.1, 10]; alpha < 2 / max c guarantees descent.
    std::vector<double> c(5), t(5), x(5), v(5, 0.0), g(5);
    for (std::size_t i = 0; i < 5; ++i) {
      c[i] = rng.uniform(0.1, 10.0);
      t[i] = rng.normal();
      x[i] = rng.normal(0.0, 3.0);
    }
    auto f = [&] {
      double s = 0;
      for (std::size_t i = 0; i < 5; ++i) s += 0.5 * c[i] * (x[i] - t[i]) * (x[i] - t[i]);
      return s;
    };
    for (std::size_t i = 0; i < 5; ++i) g[i] = c[i] * (x[i] - t[i]);
    const double before = f();
    step_unconstrained(x, g, v, plain(0.05), 0.0);
    EXPECT_LT(f(), before);
  }
}

TEST(Sgd, RegistryRoutesDecayAndClamp) {
  std::vector<double> w{1.0}, wg{0.0}, wv{0.0};
  std::vector<double> b{1.0}, bg{0.0}, bv{0.0};
  std::vector<double> p{0.12}, pg{10.0}, pv{0.0};
  std::vector<double> s{0.25}, sg{0.0}, sv{0.0};
  const ParamRegistry reg{{"w", w, wg, wv, true, false, false},
                          {"b", b, bg, bv, false, false, false},
                          {"p", p, pg, pv, true, true, true},
                          {"slope", s, sg, sv, false, true, false}};
  sgd_step(reg, plain(0.1, 0.0, 0.5));
  EXPECT_DOUBLE_EQ(w[0], 1.0 - 0.1 * 0.5);
  EXPECT_EQ(b[0], 1.0);
  EXPECT_EQ(p[0], 0.1);
  EXPECT_EQ(s[0], 0.25);

  std::vector<double> q{2.0}, qg{0.0}, qv{0.0};
  SgdConfig cfg = plain(0.1, 0.0, 0.5);
  cfg.decay_on_activation_params = false;
  sgd_step({{"q", q, qg, qv, true, true, true}}, cfg);
  EXPECT_EQ(q[0], 2.0);
  cfg.decay_on_activation_params = true;
  sgd_step({{"q", q, qg, qv, true, true, true}}, cfg);
  EXPECT_DOUBLE_EQ(q[0], 2.0 - 0.1 * 0.5 * 2.0);
}

TEST(Sgd, TrajectoryIsReproducible) {
  auto run = [] {
    Rng rng(23);
    std::vector<double> x{0.5, 0.5}, v{0.0, 0.0};
    for (int i = 0; i < 1000; ++i) {
      const std::vector<double> g{rng.normal(), rng.normal()};
      const auto s = step_constrained(x[0], g[0], v[0], plain(0.01, 0.9, 1e-3));
      x[0] = s.value;
      v[0] = s.velocity;
      std::span<double> tail(x.data() + 1, 1), vt(v.data() + 1, 1);
      step_unconstrained(tail, std::span<const double>(g.data() + 1, 1), vt, plain(0.01, 0.9), 1e-3);
    }
    return x;
  };
  EXPECT_EQ(run(), run());
}

TEST(SgdConfig, Validation) {
  EXPECT_THROW(plain(0.0).validate(), std::invalid_argument);
  EXPECT_THROW(plain(0.1, 1.0).validate(), std::invalid_argument);
  EXPECT_THROW(plain(0.1, 0.5, -1.0).validate(), std::invalid_argument);
  EXPECT_NO_THROW(plain(0.1, 0.9, 1e-4).validate());
}
