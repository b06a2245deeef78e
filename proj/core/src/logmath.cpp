#include "clasr/logmath.hpp"

#include <algorithm>
#include <cmath>

#include "clasr/errors.hpp"

namespace clasr {

double log_sum_exp(std::span<const double> values) {
  CLASR_CHECK(!values.empty(), "log_sum_exp over empty sequence");
  double m = *std::max_element(values.begin(), values.end());
  if (is_log_zero(m)) return kLogZero;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

double log_sum_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (is_log_zero(a)) return kLogZero;
  return a + std::log1p(std::exp(b - a));
}


namespace {

// Decompose the index space around `axis` into outer x n x inner.
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_axis(const Tensor& t, std::size_t axis) {
  CLASR_CHECK(axis < t.ndim(), "axis out of range for tensor " + t.shape_str());
  AxisSplit s;
  const auto& shape = t.shape();
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Tensor log_softmax(const Tensor& logits, std::size_t axis) {
  AxisSplit s = split_axis(logits, axis);
  Tensor out(logits.shape());
  auto in = logits.data();
  auto o = out.data();
  for (std::size_t a = 0; a < s.outer; ++a) {
    for (std::size_t b = 0; b < s.inner; ++b) {
      const std::size_t base = a * s.n * s.inner + b;
      double m = in[base];
      for (std::size_t i = 1; i < s.n; ++i) m = std::max(m, in[base + i * s.inner]);
      double sum = 0.0;
      for (std::size_t i = 0; i < s.n; ++i) sum += std::exp(in[base + i * s.inner] - m);
      const double lse = m + std::log(sum);
      for (std::size_t i = 0; i < s.n; ++i) {
        const std::size_t idx = base + i * s.inner;
        o[idx] = in[idx] - lse;
      }
    }
  }
  return out;
}

Tensor log_softmax_backward(const Tensor& log_probs, const Tensor& grad_log_probs,
                            std::size_t axis) {
  CLASR_CHECK(log_probs.same_shape(grad_log_probs),
              "log_softmax_backward shape mismatch");
  AxisSplit s = split_axis(log_probs, axis);
  Tensor out(log_probs.shape());
  auto lp = log_probs.data();
  auto g = grad_log_probs.data();
  auto o = out.data();
  for (std::size_t a = 0; a < s.outer; ++a) {
    for (std::size_t b = 0; b < s.inner; ++b) {
      const std::size_t base = a * s.n * s.inner + b;
      double gsum = 0.0;
      for (std::size_t i = 0; i < s.n; ++i) gsum += g[base + i * s.inner];
      for (std::size_t i = 0; i < s.n; ++i) {
        const std::size_t idx = base + i * s.inner;
        o[idx] = g[idx] - std::exp(lp[idx]) * gsum;
      }
    }
  }
  return out;
}

}  // namespace clasr
