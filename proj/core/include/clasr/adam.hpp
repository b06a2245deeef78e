#ifndef CLASR_ADAM_HPP
#define CLASR_ADAM_HPP

#include <cstdint>

#include "clasr/params.hpp"

namespace clasr {

/// Adam with bias correction. beta/eps defaults are the usual constants;
/// the learning-rate default matches the experiment protocol.
struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState(const ParamMap& params, AdamConfig config);

  /// One update: params -= lr * m_hat / (sqrt(v_hat) + eps).
  /// Gradients must mirror the parameter layout exactly.
  void step(ParamMap& params, const ParamMap& grads);

  std::int64_t step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::int64_t step_ = 0;
  ParamMap m_;
  ParamMap v_;
};

}  // namespace clasr

#endif  // CLASR_ADAM_HPP
