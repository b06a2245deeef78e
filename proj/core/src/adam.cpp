#include "clasr/adam.hpp"

#include <cmath>

#include "clasr/errors.hpp"

namespace clasr {

AdamState::AdamState(const ParamMap& params, AdamConfig config)
    : config_(config), m_(zeros_like(params)), v_(zeros_like(params)) {}

void AdamState::step(ParamMap& params, const ParamMap& grads) {
  CLASR_CHECK(params.same_layout(m_), "adam: params do not match optimizer state");
  CLASR_CHECK(grads.same_layout(m_), "adam: grads do not match optimizer state");
  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.entry(i).value.data();
    auto g = grads.entry(i).value.data();
    auto m = m_.entry(i).value.data();
    auto v = v_.entry(i).value.data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

}  // namespace clasr
