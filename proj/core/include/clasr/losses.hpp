#ifndef CLASR_LOSSES_HPP
#define CLASR_LOSSES_HPP

#include <span>

#include "clasr/model.hpp"
#include "clasr/params.hpp"
#include "clasr/tensor.hpp"
#include "clasr/utterance.hpp"

namespace clasr {

/// Negative log-likelihood plus its gradient w.r.t. the pre-softmax
/// logits that produced the input log-probabilities. Rows of
/// `logit_grads` sum to zero (softmax Jacobian).
struct LossResult {
  double value = 0.0;
  Tensor logit_grads;
};

/// CTC loss over per-frame distributions, [T,V] log-probs.
/// Exact forward-backward over the extended label sequence (2U+1).
/// Throws CtcInfeasible when T < U + (# adjacent equal target pairs).
LossResult ctc_loss(const Tensor& log_probs, std::span<const int> targets,
                    int blank_id);

/// Transducer loss over the [T,(U+1),V] lattice: blank advances t, the
/// next target symbol advances u; a path terminates with the blank
/// emitted at (T-1, U). Every target is feasible.
LossResult rnnt_loss(const Tensor& node_log_probs, std::span<const int> targets,
                     int blank_id);

struct BaseLossOptions {
  double w_ctc = 0.3;  // L = (1-w_ctc) * rnnt + w_ctc * ctc
  // CTC-infeasible utterances cannot occur with generated data; this
  // switch governs the defensive path when they do.
  bool skip_infeasible_ctc = true;
};

struct BaseLossResult {
  double value = 0.0;
  double rnnt_value = 0.0;
  double ctc_value = 0.0;
  bool ctc_skipped = false;
  ParamMap grads;  // full parameter gradients for the weighted sum
};

/// Weighted two-head loss with analytic parameter gradients, both heads
/// backpropagated through the shared encoder.
BaseLossResult base_loss(const HybridModel& model, const Utterance& utt,
                         const BaseLossOptions& opts = {});

/// Arithmetic mean of per-utterance base losses; gradients accumulated
/// in utterance index order so results are reproducible bit for bit.
BaseLossResult batch_base_loss(const HybridModel& model,
                               std::span<const Utterance> batch,
                               const BaseLossOptions& opts = {});

}  // namespace clasr

#endif  // CLASR_LOSSES_HPP
