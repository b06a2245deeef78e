#ifndef CLASR_MODEL_HPP
#define CLASR_MODEL_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "clasr/params.hpp"
#include "clasr/tensor.hpp"

namespace clasr {

/// Desk-scale hybrid transducer+CTC model. One shared encoder feeds a
/// CTC head and a transducer (prediction + joint) head.
///
/// Encoder:    causal 1-d conv -> relu -> pointwise linear -> tanh
/// Prediction: stateless single-token context; position 0 is the blank
///             embedding, positions u>=1 are tanh(proj * embed(y_u) + b)
/// Joint:      log_softmax(out_w * tanh(W_e enc_t + W_p pred_u + b) + out_b)
/// CTC head:   log_softmax(ctc_w * enc_t + ctc_b) per frame
struct ModelConfig {
  int feat_dim = 8;
  int hidden_dim = 32;
  int vocab_size = 13;  // 12 symbols + blank
  int conv_kernel = 3;  // odd

  static constexpr int blank_id = 0;

  void validate() const;  // throws ConfigError
};

struct HybridModel {
  ModelConfig config;
  ParamMap params;
};

/// Fresh model; every tensor ~ uniform(-s, s) with s = 1/sqrt(fan_in).
/// Deterministic in (config, seed).
HybridModel init_model(const ModelConfig& config, std::uint64_t seed);

/// Deep value copy of the parameters (theta-star anchor).
ParamMap snapshot(const HybridModel& model);
void restore(HybridModel& model, const ParamMap& params);

// ---------------------------------------------------------------------------
// Forward passes with caches for the manual backward passes.

struct EncodeCache {
  Tensor input;     // [T,F]
  Tensor conv_pre;  // [T,H] pre-relu
  Tensor relu_out;  // [T,H]
  Tensor out;       // [T,H] post-tanh
};

EncodeCache encode_forward(const HybridModel& model, const Tensor& features);
/// [T,F] -> [T,H]; frame count preserved.
Tensor encode(const HybridModel& model, const Tensor& features);
/// d(out) [T,H] -> parameter gradients (input gradient not needed).
void encode_backward(const HybridModel& model, const EncodeCache& cache,
                     const Tensor& d_out, ParamMap& grads);

struct CtcHeadCache {
  Tensor logits;     // [T,V]
  Tensor log_probs;  // [T,V]
};

CtcHeadCache ctc_head_forward(const HybridModel& model, const Tensor& encoded);
/// Per-frame label distributions, [T,V]; rows exponentiate-sum to one.
Tensor ctc_log_probs(const HybridModel& model, const Tensor& encoded);
/// d(logits) [T,V] -> head gradients; returns d(encoded) [T,H].
Tensor ctc_head_backward(const HybridModel& model, const Tensor& encoded,
                         const Tensor& d_logits, ParamMap& grads);

struct PredCache {
  std::vector<int> targets;
  Tensor embedded;  // [U+1,H] embedding rows fed to the projection (row 0 = blank)
  Tensor vectors;   // [U+1,H] prediction context vectors
};

/// Targets must lie in [1, vocab-1]; throws InputError otherwise.
PredCache prediction_forward(const HybridModel& model, std::span<const int> targets);
/// d(vectors) [U+1,H] -> embedding/projection gradients.
void prediction_backward(const HybridModel& model, const PredCache& cache,
                         const Tensor& d_vectors, ParamMap& grads);

struct JointCache {
  Tensor enc_proj;   // [T,H]  W_e * enc_t
  Tensor pred_proj;  // [U+1,H] W_p * pred_u
  Tensor hidden;     // [T,U+1,H] tanh activations
  Tensor logits;     // [T,U+1,V]
  Tensor log_probs;  // [T,U+1,V]
};

JointCache joint_forward(const HybridModel& model, const Tensor& encoded,
                         const PredCache& pred);
/// Transducer lattice distributions, [T,U+1,V].
Tensor joint_log_probs(const HybridModel& model, const Tensor& encoded,
                       std::span<const int> targets);

struct JointGrads {
  Tensor d_encoded;  // [T,H]
  Tensor d_pred;     // [U+1,H]
};

/// d(logits) [T,U+1,V] -> joint-network gradients plus the gradients
/// flowing back into the encoder and the prediction vectors.
JointGrads joint_backward(const HybridModel& model, const Tensor& encoded,
                          const PredCache& pred, const JointCache& cache,
                          const Tensor& d_logits, ParamMap& grads);

// Stable parameter names, in insertion order.
namespace param_names {
inline constexpr const char* kEncConvW = "enc.conv.w";
inline constexpr const char* kEncConvB = "enc.conv.b";
inline constexpr const char* kEncPwW = "enc.pw.w";
inline constexpr const char* kEncPwB = "enc.pw.b";
inline constexpr const char* kPredEmbed = "pred.embed";
inline constexpr const char* kPredProjW = "pred.proj.w";
inline constexpr const char* kPredProjB = "pred.proj.b";
inline constexpr const char* kJointEncW = "joint.enc.w";
inline constexpr const char* kJointPredW = "joint.pred.w";
inline constexpr const char* kJointB = "joint.b";
inline constexpr const char* kJointOutW = "joint.out.w";
inline constexpr const char* kJointOutB = "joint.out.b";
inline constexpr const char* kCtcW = "ctc.w";
inline constexpr const char* kCtcB = "ctc.b";
}  // namespace param_names

}  // namespace clasr

#endif  // CLASR_MODEL_HPP
