#ifndef CLASR_CONTINUAL_HPP
#define CLASR_CONTINUAL_HPP

#include <optional>
#include <span>
#include <string>

#include "clasr/losses.hpp"
#include "clasr/model.hpp"
#include "clasr/params.hpp"
#include "clasr/utterance.hpp"

namespace clasr {

enum class CLMethod { naive, ewc, mas, lwf };

CLMethod parse_method(const std::string& name);  // throws ConfigError
std::string method_name(CLMethod method);

enum class DistillKind { kl, mse };

/// Regularizer strengths. alpha_ctx plays a double role by design: it
/// mixes the RNNT/CTC terms both in LwF distillation and in the MAS
/// logit-norm objective.
struct CLHyper {
  double lambda_ewc = 10.0;
  double gamma = 1.0;  // consolidated-Fisher decay
  double lambda_mas = 1.0;
  double alpha_ctx = 0.3;
  double alpha_kd = 0.1;
  DistillKind distill_kind = DistillKind::kl;

  void validate() const;  // throws ConfigError
};

/// Everything a strategy carries from completed tasks: the parameter
/// anchor, the per-parameter importance (Fisher for EWC, Omega for MAS)
/// and, for LwF, the frozen previous-task model. Empty before task 1,
/// so every method starts out exactly as naive fine-tuning.
struct CLState {
  CLMethod method = CLMethod::naive;
  CLHyper hyper;
  int tasks_seen = 0;
  std::optional<ParamMap> anchor;      // theta-star
  std::optional<ParamMap> importance;  // F_consol or Omega
  std::optional<HybridModel> frozen;   // LwF teacher
};

// ---------------------------------------------------------------------------
// EWC

/// Diagonal Fisher estimate: mean over utterances of the squared
/// per-utterance base-loss gradient (batch size 1 by construction).
ParamMap ewc_estimate_fisher(const HybridModel& model,
                             std::span<const Utterance> dataset,
                             const BaseLossOptions& opts);

/// F_consol = gamma * previous + fresh; `previous == nullptr` on task 1.
ParamMap ewc_consolidate(const ParamMap* previous, const ParamMap& fresh,
                         double gamma);

struct PenaltyResult {
  double value = 0.0;
  ParamMap grads;
};

/// lambda * sum_j F_j (theta_j - theta*_j)^2, gradient 2 lambda F (theta - theta*).
PenaltyResult ewc_penalty(const ParamMap& params, const CLState& state);

// ---------------------------------------------------------------------------
// MAS

/// Accumulated |d/d theta| of the batch-mean squared logit norms,
/// (1-alpha_ctx) * RNNT-joint + alpha_ctx * CTC, normalized by the
/// number of batches, then added onto `prior` (nullptr on task 1).
ParamMap mas_estimate_importance(const HybridModel& model,
                                 std::span<const Utterance> dataset,
                                 double alpha_ctx, int batch_size,
                                 const ParamMap* prior);

/// lambda * sum_j Omega_j (theta_j - theta*_j)^2.
PenaltyResult mas_penalty(const ParamMap& params, const CLState& state);

// ---------------------------------------------------------------------------
// LwF

struct DistillResult {
  double value = 0.0;
  ParamMap grads;  // flows into the current model only
};

/// Teacher-student loss on the current utterance: per-frame KL(frozen ||
/// current) on the CTC head plus per-node KL on the joint lattice (or
/// MSE on raw logits), mixed by alpha_ctx.
DistillResult lwf_distill_loss(const HybridModel& current, const HybridModel& frozen,
                               const Utterance& utt, double alpha_ctx,
                               DistillKind kind);

// ---------------------------------------------------------------------------
// Dispatch

struct TotalLossResult {
  double value = 0.0;
  double base_value = 0.0;
  double penalty_value = 0.0;  // EWC/MAS penalty or LwF distill term
  ParamMap grads;
};

/// The per-batch training objective for the chosen method. With no
/// completed task yet every method reduces to the base loss, bit for bit.
TotalLossResult total_loss(CLMethod method, const HybridModel& model,
                           std::span<const Utterance> batch, const CLState& state,
                           const BaseLossOptions& opts);

/// Post-task bookkeeping: snapshot theta*, then per method update the
/// consolidated Fisher, Omega, or the frozen teacher.
void end_of_task_update(CLMethod method, const HybridModel& model,
                        std::span<const Utterance> dataset, CLState& state,
                        const BaseLossOptions& opts, int batch_size);

}  // namespace clasr

#endif  // CLASR_CONTINUAL_HPP
