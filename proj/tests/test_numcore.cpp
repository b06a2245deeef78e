#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "clasr/adam.hpp"
#include "clasr/errors.hpp"
#include "clasr/gradcheck.hpp"
#include "clasr/logmath.hpp"
#include "clasr/params.hpp"
#include "clasr/rng.hpp"
#include "clasr/tensor.hpp"

using namespace clasr;

TEST_CASE("log_sum_exp basics") {
  const double half = std::log(0.5);
  const double vals[] = {half, half};
  CHECK(log_sum_exp(std::span<const double>(vals, 2)) == doctest::Approx(0.0).epsilon(1e-12));

  // Singleton is the identity.
  for (double x : {-3.7, 0.0, 12.5, 699.0}) {
    const double one[] = {x};
    CHECK(log_sum_exp(std::span<const double>(one, 1)) == doctest::Approx(x).epsilon(1e-15));
  }

  const double zeros[] = {0.0, 0.0};
  CHECK(log_sum_exp(std::span<const double>(zeros, 2)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(log_sum_exp(std::span<const double>()), ContractViolation);
}

TEST_CASE("log_sum_exp stays finite at +-700 and dominates the max") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    double vals[4];
    double m = -1e300;
    for (double& v : vals) {
      v = rng.uniform(-700.0, 700.0);
      m = std::max(m, v);
    }
    const double r = log_sum_exp(std::span<const double>(vals, 4));
    CHECK(std::isfinite(r));
    CHECK(r >= m);
  }
}

TEST_CASE("log_sum_exp absorbs the log-zero sentinel") {
  CHECK(log_sum_exp(kLogZero, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(log_sum_exp(kLogZero, kLogZero) == kLogZero);
  const double vals[] = {kLogZero, -2.0, kLogZero};
  CHECK(log_sum_exp(std::span<const double>(vals, 3)) == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("log_softmax examples") {
  Tensor two({2}, {0.0, 0.0});
  Tensor out = log_softmax(two, 0);
  CHECK(out[0] == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(-std::log(2.0)).epsilon(1e-12));

  Tensor pair({2}, {std::log(3.0), std::log(1.0)});
  Tensor lp = log_softmax(pair, 0);
  CHECK(lp[0] == doctest::Approx(std::log(0.75)).epsilon(1e-12));
  CHECK(lp[1] == doctest::Approx(std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("log_softmax shift invariance and normalization") {
  Rng rng(5);
  for (std::size_t axis = 0; axis < 3; ++axis) {
    Tensor logits({3, 4, 5});
    for (double& v : logits.data()) v = rng.uniform(-8.0, 8.0);
    Tensor a = log_softmax(logits, axis);

    Tensor shifted = logits;
    for (double& v : shifted.data()) v += 123.456;
    Tensor b = log_softmax(shifted, axis);
    for (std::size_t i = 0; i < a.numel(); ++i) {
      CHECK(std::fabs(a[i] - b[i]) < 1e-9);
      CHECK(a[i] <= 0.0);
    }
  }

  // exp sums to one along the axis.
  Tensor logits({4, 6});
  for (double& v : logits.data()) v = rng.uniform(-5.0, 5.0);
  Tensor lp = log_softmax(logits, 1);
  for (std::size_t t = 0; t < 4; ++t) {
    double sum = 0.0;
    for (std::size_t v = 0; v < 6; ++v) sum += std::exp(lp.at(t, v));
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }

  CHECK_THROWS_AS(log_softmax(logits, 2), ContractViolation);
}

TEST_CASE("log_softmax_backward matches finite differences") {
  Rng rng(17);
  Tensor logits({3, 4});
  for (double& v : logits.data()) v = rng.uniform(-2.0, 2.0);
  Tensor g(logits.shape());
  for (double& v : g.data()) v = rng.uniform(-1.0, 1.0);

  Tensor lp = log_softmax(logits, 1);
  Tensor analytic = log_softmax_backward(lp, g, 1);

  auto objective = [&](const Tensor& z) {
    Tensor p = log_softmax(z, 1);
    double s = 0.0;
    for (std::size_t i = 0; i < p.numel(); ++i) s += g[i] * p[i];
    return s;
  };
  const double h = 1e-6;
  for (std::size_t i = 0; i < logits.numel(); ++i) {
    Tensor zp = logits, zm = logits;
    zp[i] += h;
    zm[i] -= h;
    const double fd = (objective(zp) - objective(zm)) / (2.0 * h);
    CHECK(std::fabs(fd - analytic[i]) < 1e-7);
  }
}

namespace {

ParamMap scalar_params(double value) {
  ParamMap p;
  p.insert("theta", Tensor({1}, {value}));
  return p;
}

}  // namespace

TEST_CASE("adam zero gradient is the identity") {
  ParamMap params = scalar_params(0.75);
  params.insert("w", Tensor({2, 2}, {1.0, -2.0, 3.0, -4.0}));
  ParamMap before = params;
  AdamState adam(params, {});
  adam.step(params, zeros_like(params));
  CHECK(params == before);
  CHECK(adam.step_count() == 1);
}

TEST_CASE("adam first step closed form") {
  ParamMap params = scalar_params(1.0);
  ParamMap grads = scalar_params(1.0);
  AdamConfig cfg;  // lr 1e-4, eps 1e-8
  AdamState adam(params, cfg);
  adam.step(params, grads);
  // Bias correction makes m_hat = v_hat = 1 on the first step.
  const double expected = 1.0 - cfg.lr / (1.0 + cfg.eps);
  CHECK(std::fabs(params.at("theta")[0] - expected) < 1e-15);
  CHECK(std::fabs(params.at("theta")[0] - (1.0 - 1e-4)) < 1e-10);
}

TEST_CASE("adam is bitwise deterministic") {
  auto run = [] {
    ParamMap params;
    params.insert("w", Tensor({3}, {0.3, -0.2, 0.9}));
    AdamState adam(params, {.lr = 1e-2});
    Rng rng(3);
    for (int step = 0; step < 25; ++step) {
      ParamMap grads = zeros_like(params);
      for (double& g : grads.at("w").data()) g = rng.normal();
      adam.step(params, grads);
    }
    return params;
  };
  CHECK(run() == run());
}

TEST_CASE("adam rejects mismatched gradients") {
  ParamMap params = scalar_params(0.0);
  AdamState adam(params, {});
  ParamMap bad;
  bad.insert("other", Tensor({1}));
  CHECK_THROWS_AS(adam.step(params, bad), ContractViolation);
}

TEST_CASE("finite_diff_gradient on simple objectives") {
  // f(theta) = theta^2 at theta = 3 -> 6.
  ParamMap p = scalar_params(3.0);
  auto square = [](const ParamMap& q) {
    const double x = q.at("theta")[0];
    return x * x;
  };
  ParamMap g = finite_diff_gradient(square, p, 1e-5);
  CHECK(g.at("theta")[0] == doctest::Approx(6.0).epsilon(1e-8));

  // Constant objective -> zero gradient.
  ParamMap g0 = finite_diff_gradient([](const ParamMap&) { return 4.2; }, p, 1e-5);
  CHECK(g0.at("theta")[0] == 0.0);

  // Sum of squares over a vector.
  ParamMap vec;
  vec.insert("v", Tensor({2}, {1.0, 2.0}));
  auto sumsq = [](const ParamMap& q) {
    double s = 0.0;
    for (double x : q.at("v").data()) s += x * x;
    return s;
  };
  ParamMap gv = finite_diff_gradient(sumsq, vec, 1e-5);
  CHECK(std::fabs(gv.at("v")[0] - 2.0) < 1e-6);
  CHECK(std::fabs(gv.at("v")[1] - 4.0) < 1e-6);
}

TEST_CASE("finite_diff_gradient reports the non-finite coordinate") {
  ParamMap p = scalar_params(0.0);
  auto bad = [](const ParamMap& q) {
    return q.at("theta")[0] > 0.0 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  };
  try {
    finite_diff_gradient(bad, p, 1e-5);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("theta[0]") != std::string::npos);
  }
}

TEST_CASE("rng streams are deterministic and independent") {
  Rng a = Rng::stream(42, "model-init");
  Rng b = Rng::stream(42, "model-init");
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c = Rng::stream(42, "data");
  Rng d = Rng::stream(42, "model-init");
  bool differs = false;
  for (int i = 0; i < 16; ++i) differs |= (c.next_u64() != d.next_u64());
  CHECK(differs);

  Rng e = Rng::stream(42, "data", {1});
  Rng f = Rng::stream(42, "data", {2});
  differs = false;
  for (int i = 0; i < 16; ++i) differs |= (e.next_u64() != f.next_u64());
  CHECK(differs);
}

TEST_CASE("rng distributions behave") {
  Rng rng(123);
  double sum = 0.0, sumsq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  CHECK(std::fabs(sum / n) < 0.05);
  CHECK(std::fabs(sumsq / n - 1.0) < 0.05);

  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const int k = rng.uniform_int(2, 5);
    CHECK(k >= 2);
    CHECK(k <= 5);
  }
}
