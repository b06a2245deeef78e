// CTC and transducer negative log-likelihoods, exact in log space, with
// alpha-beta gradients pulled back through log_softmax analytically.

#include "clasr/losses.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "clasr/errors.hpp"
#include "clasr/logmath.hpp"

namespace clasr {

namespace {

void check_loss_targets(std::span<const int> targets, int vocab, int blank_id) {
  for (int y : targets) {
    if (y == blank_id || y < 0 || y >= vocab) {
      throw InputError("loss target symbol " + std::to_string(y) +
                       " invalid for vocab " + std::to_string(vocab));
    }
  }
}

int adjacent_repeats(std::span<const int> targets) {
  int n = 0;
  for (std::size_t i = 1; i < targets.size(); ++i) {
    if (targets[i] == targets[i - 1]) ++n;
  }
  return n;
}

}  // namespace

LossResult ctc_loss(const Tensor& log_probs, std::span<const int> targets,
                    int blank_id) {
  CLASR_CHECK(log_probs.ndim() == 2 && log_probs.numel() > 0,
              "ctc_loss: log_probs must be a non-empty [T x V] tensor");
  const std::size_t T = log_probs.dim(0);
  const std::size_t V = log_probs.dim(1);
  const std::size_t U = targets.size();
  check_loss_targets(targets, static_cast<int>(V), blank_id);

  const std::size_t min_frames = U + static_cast<std::size_t>(adjacent_repeats(targets));
  if (T < min_frames) {
    throw CtcInfeasible("ctc_loss: " + std::to_string(T) + " frames cannot align " +
                        std::to_string(U) + " labels (need >= " +
                        std::to_string(min_frames) + ")");
  }

  // Extended labels: blank, y1, blank, y2, ..., blank.
  const std::size_t S = 2 * U + 1;
  std::vector<int> ext(S, blank_id);
  for (std::size_t u = 0; u < U; ++u) ext[2 * u + 1] = targets[u];

  auto lp = [&](std::size_t t, std::size_t s) { return log_probs.at(t, static_cast<std::size_t>(ext[s])); };
  // Skip from s-2 to s is legal when s is a label differing from the label at s-2.
  auto can_skip = [&](std::size_t s) {
    return s >= 2 && ext[s] != blank_id && ext[s] != ext[s - 2];
  };

  std::vector<double> alpha(T * S, kLogZero), beta(T * S, kLogZero);
  auto a = [&](std::size_t t, std::size_t s) -> double& { return alpha[t * S + s]; };
  auto b = [&](std::size_t t, std::size_t s) -> double& { return beta[t * S + s]; };

  a(0, 0) = lp(0, 0);
  if (S > 1) a(0, 1) = lp(0, 1);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double acc = a(t - 1, s);
      if (s >= 1) acc = log_sum_exp(acc, a(t - 1, s - 1));
      if (can_skip(s)) acc = log_sum_exp(acc, a(t - 1, s - 2));
      a(t, s) = acc + lp(t, s);
    }
  }

  double log_z = a(T - 1, S - 1);
  if (S > 1) log_z = log_sum_exp(log_z, a(T - 1, S - 2));
  if (is_log_zero(log_z)) {
    throw InputError("ctc_loss: target has zero probability under the inputs");
  }

  // beta excludes the emission at its own time step.
  b(T - 1, S - 1) = 0.0;
  if (S > 1) b(T - 1, S - 2) = 0.0;
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double acc = b(t + 1, s) + lp(t + 1, s);
      if (s + 1 < S) acc = log_sum_exp(acc, b(t + 1, s + 1) + lp(t + 1, s + 1));
      if (s + 2 < S && can_skip(s + 2)) {
        acc = log_sum_exp(acc, b(t + 1, s + 2) + lp(t + 1, s + 2));
      }
      b(t, s) = acc;
    }
  }

  // d(-log Z)/d logit(t,v) = p(t,v) - sum_{s: ext[s]=v} exp(alpha+beta-logZ)
  LossResult result;
  result.value = -log_z;
  result.logit_grads = Tensor({T, V});
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> posterior(V, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
      const double occ = a(t, s) + b(t, s) - log_z;
      if (occ > -700.0) posterior[static_cast<std::size_t>(ext[s])] += std::exp(occ);
    }
    for (std::size_t v = 0; v < V; ++v) {
      result.logit_grads.at(t, v) = std::exp(log_probs.at(t, v)) - posterior[v];
    }
  }
  return result;
}

LossResult rnnt_loss(const Tensor& node_log_probs, std::span<const int> targets,
                     int blank_id) {
  CLASR_CHECK(node_log_probs.ndim() == 3, "rnnt_loss: need [T x (U+1) x V] log-probs");
  const std::size_t T = node_log_probs.dim(0);
  const std::size_t Up1 = node_log_probs.dim(1);
  const std::size_t V = node_log_probs.dim(2);
  const std::size_t U = targets.size();
  CLASR_CHECK(T >= 1, "rnnt_loss: need at least one frame");
  CLASR_CHECK(Up1 == U + 1, "rnnt_loss: lattice depth does not match target length");
  check_loss_targets(targets, static_cast<int>(V), blank_id);

  const std::size_t blank = static_cast<std::size_t>(blank_id);
  auto lp = [&](std::size_t t, std::size_t u, std::size_t v) {
    return node_log_probs.at(t, u, v);
  };
  auto sym = [&](std::size_t u) { return static_cast<std::size_t>(targets[u]); };

  std::vector<double> alpha(T * Up1, kLogZero), beta(T * Up1, kLogZero);
  auto a = [&](std::size_t t, std::size_t u) -> double& { return alpha[t * Up1 + u]; };
  auto b = [&](std::size_t t, std::size_t u) -> double& { return beta[t * Up1 + u]; };

  a(0, 0) = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < Up1; ++u) {
      if (t == 0 && u == 0) continue;
      double acc = kLogZero;
      if (t > 0) acc = a(t - 1, u) + lp(t - 1, u, blank);
      if (u > 0) acc = log_sum_exp(acc, a(t, u - 1) + lp(t, u - 1, sym(u - 1)));
      a(t, u) = acc;
    }
  }
  const double log_z = a(T - 1, U) + lp(T - 1, U, blank);
  if (is_log_zero(log_z)) {
    throw InputError("rnnt_loss: target has zero probability under the inputs");
  }

  // beta(t,u): log-prob of completing the path from node (t,u).
  b(T - 1, U) = lp(T - 1, U, blank);
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t u = Up1; u-- > 0;) {
      if (t == T - 1 && u == U) continue;
      double acc = kLogZero;
      if (t + 1 < T) acc = lp(t, u, blank) + b(t + 1, u);
      if (u < U) acc = log_sum_exp(acc, lp(t, u, sym(u)) + b(t, u + 1));
      b(t, u) = acc;
    }
  }

  LossResult result;
  result.value = -log_z;
  result.logit_grads = Tensor({T, Up1, V});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < Up1; ++u) {
      // Posterior mass on each edge leaving (t,u).
      double node_post = 0.0;
      double blank_post = 0.0;
      double label_post = 0.0;
      if (t + 1 < T) {
        const double e = a(t, u) + lp(t, u, blank) + b(t + 1, u) - log_z;
        if (e > -700.0) blank_post = std::exp(e);
      } else if (u == U) {
        const double e = a(t, u) + lp(t, u, blank) - log_z;
        if (e > -700.0) blank_post = std::exp(e);
      }
      if (u < U) {
        const double e = a(t, u) + lp(t, u, sym(u)) + b(t, u + 1) - log_z;
        if (e > -700.0) label_post = std::exp(e);
      }
      node_post = blank_post + label_post;
      for (std::size_t v = 0; v < V; ++v) {
        double g = std::exp(lp(t, u, v)) * node_post;
        if (v == blank) g -= blank_post;
        if (u < U && v == sym(u)) g -= label_post;
        result.logit_grads.at(t, u, v) = g;
      }
    }
  }
  return result;
}

BaseLossResult base_loss(const HybridModel& model, const Utterance& utt,
                         const BaseLossOptions& opts) {
  const int blank = ModelConfig::blank_id;
  BaseLossResult out;
  out.grads = zeros_like(model.params);

  EncodeCache enc = encode_forward(model, utt.features);
  const std::size_t T = enc.out.dim(0);
  const std::size_t H = enc.out.dim(1);
  Tensor d_enc({T, H});

  // Transducer head.
  PredCache pred = prediction_forward(model, utt.targets);
  JointCache joint = joint_forward(model, enc.out, pred);
  LossResult rnnt = rnnt_loss(joint.log_probs, utt.targets, blank);
  out.rnnt_value = rnnt.value;
  const double w_rnnt = 1.0 - opts.w_ctc;
  if (w_rnnt != 0.0) {
    Tensor d_logits = rnnt.logit_grads;
    for (double& g : d_logits.data()) g *= w_rnnt;
    JointGrads jg = joint_backward(model, enc.out, pred, joint, d_logits, out.grads);
    prediction_backward(model, pred, jg.d_pred, out.grads);
    add_scaled(d_enc, jg.d_encoded, 1.0);
  }

  // CTC head.
  if (opts.w_ctc != 0.0) {
    CtcHeadCache head = ctc_head_forward(model, enc.out);
    try {
      LossResult ctc = ctc_loss(head.log_probs, utt.targets, blank);
      out.ctc_value = ctc.value;
      Tensor d_logits = ctc.logit_grads;
      for (double& g : d_logits.data()) g *= opts.w_ctc;
      Tensor d_enc_ctc = ctc_head_backward(model, enc.out, d_logits, out.grads);
      add_scaled(d_enc, d_enc_ctc, 1.0);
    } catch (const CtcInfeasible&) {
      if (!opts.skip_infeasible_ctc) throw;
      out.ctc_skipped = true;
    }
  }

  encode_backward(model, enc, d_enc, out.grads);
  out.value = w_rnnt * out.rnnt_value + (out.ctc_skipped ? 0.0 : opts.w_ctc * out.ctc_value);
  return out;
}

BaseLossResult batch_base_loss(const HybridModel& model,
                               std::span<const Utterance> batch,
                               const BaseLossOptions& opts) {
  CLASR_CHECK(!batch.empty(), "batch_base_loss: empty batch");
  BaseLossResult total;
  total.grads = zeros_like(model.params);
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const Utterance& utt : batch) {
    BaseLossResult one = base_loss(model, utt, opts);
    total.value += one.value * inv;
    total.rnnt_value += one.rnnt_value * inv;
    total.ctc_value += one.ctc_value * inv;
    total.ctc_skipped = total.ctc_skipped || one.ctc_skipped;
    add_scaled(total.grads, one.grads, inv);
  }
  return total;
}

}  // namespace clasr
