// Sequential-training strategies: naive fine-tuning, EWC, MAS and LwF.

#include "clasr/continual.hpp"

#include <cmath>

#include "clasr/errors.hpp"
#include "clasr/logmath.hpp"

namespace clasr {

CLMethod parse_method(const std::string& name) {
  if (name == "naive") return CLMethod::naive;
  if (name == "ewc") return CLMethod::ewc;
  if (name == "mas") return CLMethod::mas;
  if (name == "lwf") return CLMethod::lwf;
  throw ConfigError("unknown method '" + name + "' (naive|ewc|mas|lwf)");
}

std::string method_name(CLMethod method) {
  switch (method) {
    case CLMethod::naive: return "naive";
    case CLMethod::ewc: return "ewc";
    case CLMethod::mas: return "mas";
    case CLMethod::lwf: return "lwf";
  }
  throw ContractViolation("unknown method enum");
}

void CLHyper::validate() const {
  if (lambda_ewc < 0.0 || lambda_mas < 0.0) throw ConfigError("lambda must be >= 0");
  if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
  if (alpha_ctx < 0.0 || alpha_ctx > 1.0) throw ConfigError("alpha_ctx must be in [0,1]");
  if (alpha_kd < 0.0 || alpha_kd > 1.0) throw ConfigError("alpha_kd must be in [0,1]");
}

// ---------------------------------------------------------------------------
// EWC

ParamMap ewc_estimate_fisher(const HybridModel& model,
                             std::span<const Utterance> dataset,
                             const BaseLossOptions& opts) {
  CLASR_CHECK(!dataset.empty(), "fisher estimation needs a non-empty dataset");
  ParamMap fisher = zeros_like(model.params);
  // Per-utterance gradients: the expectation is over samples, and
  // batching would square the mean instead of averaging the squares.
  for (const Utterance& utt : dataset) {
    BaseLossResult base = base_loss(model, utt, opts);
    for (std::size_t i = 0; i < fisher.size(); ++i) {
      auto f = fisher.entry(i).value.data();
      auto g = base.grads.entry(i).value.data();
      for (std::size_t j = 0; j < f.size(); ++j) f[j] += g[j] * g[j];
    }
  }
  scale(fisher, 1.0 / static_cast<double>(dataset.size()));
  return fisher;
}

ParamMap ewc_consolidate(const ParamMap* previous, const ParamMap& fresh,
                         double gamma) {
  if (previous == nullptr) return fresh;
  CLASR_CHECK(previous->same_layout(fresh), "ewc_consolidate: layout mismatch");
  ParamMap out = fresh;
  add_scaled(out, *previous, gamma);
  return out;
}

namespace {

PenaltyResult quadratic_penalty(const ParamMap& params, const ParamMap& anchor,
                                const ParamMap& importance, double lambda) {
  CLASR_CHECK(params.same_layout(anchor) && params.same_layout(importance),
              "penalty: layout mismatch");
  PenaltyResult out;
  out.grads = zeros_like(params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.entry(i).value.data();
    auto a = anchor.entry(i).value.data();
    auto w = importance.entry(i).value.data();
    auto g = out.grads.entry(i).value.data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double diff = p[j] - a[j];
      out.value += lambda * w[j] * diff * diff;
      g[j] = 2.0 * lambda * w[j] * diff;
    }
  }
  return out;
}

}  // namespace

PenaltyResult ewc_penalty(const ParamMap& params, const CLState& state) {
  CLASR_CHECK(state.anchor.has_value() && state.importance.has_value(),
              "ewc_penalty: state is missing theta* or the consolidated Fisher");
  return quadratic_penalty(params, *state.anchor, *state.importance,
                           state.hyper.lambda_ewc);
}

// ---------------------------------------------------------------------------
// MAS

namespace {

// Batch-mean squared logit norms for both heads, with the gradient of
// (1-alpha)*rnnt_term + alpha*ctc_term accumulated into `grads`.
void mas_batch_pass(const HybridModel& model, std::span<const Utterance> batch,
                    double alpha_ctx, ParamMap& grads) {
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const Utterance& utt : batch) {
    EncodeCache enc = encode_forward(model, utt.features);
    const std::size_t T = enc.out.dim(0);
    const std::size_t H = enc.out.dim(1);
    Tensor d_enc({T, H});

    // d/dz of (1/B) ||z||^2 is 2 z / B; no softmax involved.
    if (alpha_ctx != 1.0) {
      PredCache pred = prediction_forward(model, utt.targets);
      JointCache joint = joint_forward(model, enc.out, pred);
      Tensor d_logits(joint.logits.shape());
      const double scale = (1.0 - alpha_ctx) * 2.0 * inv_b;
      for (std::size_t i = 0; i < joint.logits.numel(); ++i) {
        d_logits[i] = scale * joint.logits[i];
      }
      JointGrads jg = joint_backward(model, enc.out, pred, joint, d_logits, grads);
      prediction_backward(model, pred, jg.d_pred, grads);
      add_scaled(d_enc, jg.d_encoded, 1.0);
    }
    if (alpha_ctx != 0.0) {
      CtcHeadCache head = ctc_head_forward(model, enc.out);
      Tensor d_logits(head.logits.shape());
      const double scale = alpha_ctx * 2.0 * inv_b;
      for (std::size_t i = 0; i < head.logits.numel(); ++i) {
        d_logits[i] = scale * head.logits[i];
      }
      Tensor d_enc_ctc = ctc_head_backward(model, enc.out, d_logits, grads);
      add_scaled(d_enc, d_enc_ctc, 1.0);
    }
    encode_backward(model, enc, d_enc, grads);
  }
}

}  // namespace

ParamMap mas_estimate_importance(const HybridModel& model,
                                 std::span<const Utterance> dataset,
                                 double alpha_ctx, int batch_size,
                                 const ParamMap* prior) {
  CLASR_CHECK(!dataset.empty(), "mas estimation needs a non-empty dataset");
  CLASR_CHECK(batch_size >= 1, "mas estimation needs batch_size >= 1");

  ParamMap omega = zeros_like(model.params);
  std::size_t num_batches = 0;
  for (std::size_t start = 0; start < dataset.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min(dataset.size() - start,
                                   static_cast<std::size_t>(batch_size));
    ParamMap grads = zeros_like(model.params);
    mas_batch_pass(model, dataset.subspan(start, n), alpha_ctx, grads);
    for (std::size_t i = 0; i < omega.size(); ++i) {
      auto o = omega.entry(i).value.data();
      auto g = grads.entry(i).value.data();
      for (std::size_t j = 0; j < o.size(); ++j) o[j] += std::fabs(g[j]);
    }
    ++num_batches;
  }
  // Mean over batches so dataset size does not rescale lambda.
  scale(omega, 1.0 / static_cast<double>(num_batches));
  if (prior != nullptr) add_scaled(omega, *prior, 1.0);
  return omega;
}

PenaltyResult mas_penalty(const ParamMap& params, const CLState& state) {
  CLASR_CHECK(state.anchor.has_value() && state.importance.has_value(),
              "mas_penalty: state is missing theta* or Omega");
  return quadratic_penalty(params, *state.anchor, *state.importance,
                           state.hyper.lambda_mas);
}

// ---------------------------------------------------------------------------
// LwF

namespace {

// KL(frozen || current) summed over one distribution slice, plus the
// gradient w.r.t. the current logits: softmax(current) - softmax(frozen).
double kl_slice(std::span<const double> lp_frozen, std::span<const double> lp_current,
                std::span<double> d_logits, double weight) {
  double kl = 0.0;
  for (std::size_t v = 0; v < lp_frozen.size(); ++v) {
    const double p_frozen = std::exp(lp_frozen[v]);
    kl += p_frozen * (lp_frozen[v] - lp_current[v]);
    d_logits[v] += weight * (std::exp(lp_current[v]) - p_frozen);
  }
  return kl;
}

}  // namespace

DistillResult lwf_distill_loss(const HybridModel& current, const HybridModel& frozen,
                               const Utterance& utt, double alpha_ctx,
                               DistillKind kind) {
  CLASR_CHECK(current.config.vocab_size == frozen.config.vocab_size,
              "lwf: teacher and student vocabularies differ");

  DistillResult out;
  out.grads = zeros_like(current.params);

  EncodeCache enc_cur = encode_forward(current, utt.features);
  const Tensor enc_frz = encode(frozen, utt.features);
  const std::size_t T = enc_cur.out.dim(0);
  const std::size_t H = enc_cur.out.dim(1);
  const std::size_t V = static_cast<std::size_t>(current.config.vocab_size);
  Tensor d_enc({T, H});

  double rnnt_term = 0.0;
  double ctc_term = 0.0;

  // Joint lattice, averaged over the T*(U+1) nodes.
  PredCache pred_cur = prediction_forward(current, utt.targets);
  JointCache joint_cur = joint_forward(current, enc_cur.out, pred_cur);
  const Tensor joint_frz = joint_log_probs(frozen, enc_frz, utt.targets);
  const std::size_t Up1 = joint_cur.hidden.dim(1);
  const double w_rnnt = 1.0 - alpha_ctx;
  {
    Tensor d_logits({T, Up1, V});
    const double node_norm = 1.0 / static_cast<double>(T * Up1);
    if (kind == DistillKind::kl) {
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t u = 0; u < Up1; ++u) {
          const std::size_t off = (t * Up1 + u) * V;
          rnnt_term += node_norm * kl_slice(joint_frz.data().subspan(off, V),
                                            joint_cur.log_probs.data().subspan(off, V),
                                            d_logits.data().subspan(off, V),
                                            w_rnnt * node_norm);
        }
      }
    } else {
      // MSE on raw logits.
      PredCache pred_frz = prediction_forward(frozen, utt.targets);
      JointCache jfrz = joint_forward(frozen, enc_frz, pred_frz);
      const double inv_n = 1.0 / static_cast<double>(T * Up1 * V);
      for (std::size_t i = 0; i < joint_cur.logits.numel(); ++i) {
        const double diff = joint_cur.logits[i] - jfrz.logits[i];
        rnnt_term += inv_n * diff * diff;
        d_logits[i] = w_rnnt * 2.0 * inv_n * diff;
      }
    }
    if (w_rnnt != 0.0) {
      JointGrads jg = joint_backward(current, enc_cur.out, pred_cur, joint_cur,
                                     d_logits, out.grads);
      prediction_backward(current, pred_cur, jg.d_pred, out.grads);
      add_scaled(d_enc, jg.d_encoded, 1.0);
    }
  }

  // CTC head, averaged over frames.
  {
    CtcHeadCache head_cur = ctc_head_forward(current, enc_cur.out);
    CtcHeadCache head_frz = ctc_head_forward(frozen, enc_frz);
    Tensor d_logits({T, V});
    const double frame_norm = 1.0 / static_cast<double>(T);
    if (kind == DistillKind::kl) {
      for (std::size_t t = 0; t < T; ++t) {
        ctc_term += frame_norm * kl_slice(head_frz.log_probs.data().subspan(t * V, V),
                                          head_cur.log_probs.data().subspan(t * V, V),
                                          d_logits.data().subspan(t * V, V),
                                          alpha_ctx * frame_norm);
      }
    } else {
      const double inv_n = 1.0 / static_cast<double>(T * V);
      for (std::size_t i = 0; i < head_cur.logits.numel(); ++i) {
        const double diff = head_cur.logits[i] - head_frz.logits[i];
        ctc_term += inv_n * diff * diff;
        d_logits[i] = alpha_ctx * 2.0 * inv_n * diff;
      }
    }
    if (alpha_ctx != 0.0) {
      Tensor d_enc_ctc = ctc_head_backward(current, enc_cur.out, d_logits, out.grads);
      add_scaled(d_enc, d_enc_ctc, 1.0);
    }
  }

  encode_backward(current, enc_cur, d_enc, out.grads);
  out.value = w_rnnt * rnnt_term + alpha_ctx * ctc_term;
  return out;
}

// ---------------------------------------------------------------------------
// Dispatch

TotalLossResult total_loss(CLMethod method, const HybridModel& model,
                           std::span<const Utterance> batch, const CLState& state,
                           const BaseLossOptions& opts) {
  CLASR_CHECK(state.method == method, "total_loss: state prepared for another method");
  BaseLossResult base = batch_base_loss(model, batch, opts);

  TotalLossResult out;
  out.base_value = base.value;

  const bool first_task = state.tasks_seen == 0;
  switch (method) {
    case CLMethod::naive:
      out.value = base.value;
      out.grads = std::move(base.grads);
      return out;
    case CLMethod::ewc: {
      out.value = base.value;
      out.grads = std::move(base.grads);
      if (!first_task && state.hyper.lambda_ewc != 0.0) {
        PenaltyResult pen = ewc_penalty(model.params, state);
        out.penalty_value = pen.value;
        out.value += pen.value;
        add_scaled(out.grads, pen.grads, 1.0);
      }
      return out;
    }
    case CLMethod::mas: {
      out.value = base.value;
      out.grads = std::move(base.grads);
      if (!first_task && state.hyper.lambda_mas != 0.0) {
        PenaltyResult pen = mas_penalty(model.params, state);
        out.penalty_value = pen.value;
        out.value += pen.value;
        add_scaled(out.grads, pen.grads, 1.0);
      }
      return out;
    }
    case CLMethod::lwf: {
      if (first_task || state.hyper.alpha_kd == 0.0) {
        out.value = base.value;
        out.grads = std::move(base.grads);
        return out;
      }
      CLASR_CHECK(state.frozen.has_value(), "lwf: no frozen teacher in state");
      const double a = state.hyper.alpha_kd;
      double distill_sum = 0.0;
      ParamMap distill_grads = zeros_like(model.params);
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (const Utterance& utt : batch) {
        DistillResult d = lwf_distill_loss(model, *state.frozen, utt,
                                           state.hyper.alpha_ctx,
                                           state.hyper.distill_kind);
        distill_sum += d.value * inv;
        add_scaled(distill_grads, d.grads, inv);
      }
      out.penalty_value = distill_sum;
      out.value = (1.0 - a) * base.value + a * distill_sum;
      out.grads = std::move(base.grads);
      scale(out.grads, 1.0 - a);
      add_scaled(out.grads, distill_grads, a);
      return out;
    }
  }
  throw ConfigError("total_loss: unknown method");
}

void end_of_task_update(CLMethod method, const HybridModel& model,
                        std::span<const Utterance> dataset, CLState& state,
                        const BaseLossOptions& opts, int batch_size) {
  CLASR_CHECK(state.method == method, "end_of_task_update: method mismatch");
  switch (method) {
    case CLMethod::naive:
      break;
    case CLMethod::ewc: {
      ParamMap fresh = ewc_estimate_fisher(model, dataset, opts);
      const ParamMap* prev = state.importance ? &*state.importance : nullptr;
      state.importance = ewc_consolidate(prev, fresh, state.hyper.gamma);
      break;
    }
    case CLMethod::mas: {
      const ParamMap* prior = state.importance ? &*state.importance : nullptr;
      state.importance = mas_estimate_importance(model, dataset, state.hyper.alpha_ctx,
                                                 batch_size, prior);
      break;
    }
    case CLMethod::lwf:
      state.frozen = model;
      break;
  }
  state.anchor = snapshot(model);
  ++state.tasks_seen;
}

}  // namespace clasr
