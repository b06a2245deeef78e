#include "clasr/model.hpp"

#include <cmath>
#include <string>

#include "clasr/errors.hpp"
#include "clasr/logmath.hpp"
#include "clasr/rng.hpp"

namespace clasr {

namespace pn = param_names;

void ModelConfig::validate() const {
  if (feat_dim < 1 || hidden_dim < 1 || vocab_size < 2) {
    throw ConfigError("model dims must satisfy F,H >= 1 and V >= 2");
  }
  if (conv_kernel < 1 || conv_kernel % 2 == 0) {
    throw ConfigError("conv kernel must be odd and positive");
  }
}

namespace {

void fill_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.data()) v = rng.uniform(-s, s);
}

// y[i] += sum_j w[i][j] * x[j]  with w shaped [rows, cols].
void matvec_acc(const Tensor& w, std::span<const double> x, std::span<double> y) {
  const std::size_t rows = w.dim(0), cols = w.dim(1);
  auto wd = w.data();
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    const double* row = wd.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

// x_grad[j] += sum_i w[i][j] * dy[i]; w_grad[i][j] += dy[i] * x[j].
void matvec_backward(const Tensor& w, std::span<const double> x,
                     std::span<const double> dy, Tensor& w_grad,
                     std::span<double> x_grad) {
  const std::size_t rows = w.dim(0), cols = w.dim(1);
  auto wd = w.data();
  auto wg = w_grad.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double g = dy[i];
    const double* row = wd.data() + i * cols;
    double* grow = wg.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      grow[j] += g * x[j];
      x_grad[j] += row[j] * g;
    }
  }
}

void check_targets(std::span<const int> targets, int vocab) {
  for (int y : targets) {
    if (y <= ModelConfig::blank_id || y >= vocab) {
      throw InputError("target symbol " + std::to_string(y) +
                       " outside [1, " + std::to_string(vocab - 1) + "]");
    }
  }
}

}  // namespace

HybridModel init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t F = static_cast<std::size_t>(config.feat_dim);
  const std::size_t H = static_cast<std::size_t>(config.hidden_dim);
  const std::size_t V = static_cast<std::size_t>(config.vocab_size);
  const std::size_t k = static_cast<std::size_t>(config.conv_kernel);

  HybridModel model{config, {}};
  Rng rng = Rng::stream(seed, "model-init");

  auto add = [&](const char* name, std::vector<std::size_t> shape, std::size_t fan_in) {
    Tensor t(std::move(shape));
    fill_uniform(t, fan_in, rng);
    model.params.insert(name, std::move(t));
  };

  add(pn::kEncConvW, {H, F, k}, F * k);
  add(pn::kEncConvB, {H}, F * k);
  add(pn::kEncPwW, {H, H}, H);
  add(pn::kEncPwB, {H}, H);
  add(pn::kPredEmbed, {V, H}, H);
  add(pn::kPredProjW, {H, H}, H);
  add(pn::kPredProjB, {H}, H);
  add(pn::kJointEncW, {H, H}, H);
  add(pn::kJointPredW, {H, H}, H);
  add(pn::kJointB, {H}, H);
  add(pn::kJointOutW, {V, H}, H);
  add(pn::kJointOutB, {V}, H);
  add(pn::kCtcW, {V, H}, H);
  add(pn::kCtcB, {V}, H);
  return model;
}

ParamMap snapshot(const HybridModel& model) { return model.params; }

void restore(HybridModel& model, const ParamMap& params) {
  CLASR_CHECK(model.params.same_layout(params), "restore: layout mismatch");
  model.params = params;
}

// ---------------------------------------------------------------------------
// Encoder

EncodeCache encode_forward(const HybridModel& model, const Tensor& features) {
  const auto& cfg = model.config;
  CLASR_CHECK(features.ndim() == 2 && features.dim(1) == static_cast<std::size_t>(cfg.feat_dim),
              "encode: features must be [T x feat_dim]");
  CLASR_CHECK(features.dim(0) >= 1, "encode: need at least one frame");
  const std::size_t T = features.dim(0);
  const std::size_t F = static_cast<std::size_t>(cfg.feat_dim);
  const std::size_t H = static_cast<std::size_t>(cfg.hidden_dim);
  const std::size_t k = static_cast<std::size_t>(cfg.conv_kernel);

  const Tensor& conv_w = model.params.at(pn::kEncConvW);
  const Tensor& conv_b = model.params.at(pn::kEncConvB);
  const Tensor& pw_w = model.params.at(pn::kEncPwW);
  const Tensor& pw_b = model.params.at(pn::kEncPwB);

  EncodeCache cache;
  cache.input = features;
  cache.conv_pre = Tensor({T, H});
  cache.relu_out = Tensor({T, H});
  cache.out = Tensor({T, H});

  // Causal padding: output frame t sees input frames t-k+1 .. t.
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t h = 0; h < H; ++h) {
      double acc = conv_b[h];
      for (std::size_t j = 0; j < k; ++j) {
        const std::ptrdiff_t tau = static_cast<std::ptrdiff_t>(t) -
                                   static_cast<std::ptrdiff_t>(k - 1) +
                                   static_cast<std::ptrdiff_t>(j);
        if (tau < 0) continue;
        for (std::size_t f = 0; f < F; ++f) {
          acc += conv_w.at(h, f, j) * features.at(static_cast<std::size_t>(tau), f);
        }
      }
      cache.conv_pre.at(t, h) = acc;
      cache.relu_out.at(t, h) = acc > 0.0 ? acc : 0.0;
    }
    auto relu_row = cache.relu_out.data().subspan(t * H, H);
    auto out_row = cache.out.data().subspan(t * H, H);
    for (std::size_t h = 0; h < H; ++h) out_row[h] = pw_b[h];
    matvec_acc(pw_w, relu_row, out_row);
    for (std::size_t h = 0; h < H; ++h) out_row[h] = std::tanh(out_row[h]);
  }
  return cache;
}

Tensor encode(const HybridModel& model, const Tensor& features) {
  return encode_forward(model, features).out;
}

void encode_backward(const HybridModel& model, const EncodeCache& cache,
                     const Tensor& d_out, ParamMap& grads) {
  CLASR_CHECK(d_out.same_shape(cache.out), "encode_backward: gradient shape mismatch");
  const auto& cfg = model.config;
  const std::size_t T = cache.out.dim(0);
  const std::size_t F = static_cast<std::size_t>(cfg.feat_dim);
  const std::size_t H = static_cast<std::size_t>(cfg.hidden_dim);
  const std::size_t k = static_cast<std::size_t>(cfg.conv_kernel);

  const Tensor& pw_w = model.params.at(pn::kEncPwW);
  Tensor& g_conv_w = grads.at(pn::kEncConvW);
  Tensor& g_conv_b = grads.at(pn::kEncConvB);
  Tensor& g_pw_w = grads.at(pn::kEncPwW);
  Tensor& g_pw_b = grads.at(pn::kEncPwB);

  std::vector<double> d_relu(H), d_pre(H);
  for (std::size_t t = 0; t < T; ++t) {
    auto out_row = cache.out.data().subspan(t * H, H);
    auto relu_row = cache.relu_out.data().subspan(t * H, H);
    auto dy = d_out.data().subspan(t * H, H);

    // tanh, then the pointwise linear.
    std::fill(d_relu.begin(), d_relu.end(), 0.0);
    for (std::size_t h = 0; h < H; ++h) {
      d_pre[h] = dy[h] * (1.0 - out_row[h] * out_row[h]);
      g_pw_b[h] += d_pre[h];
    }
    matvec_backward(pw_w, relu_row, d_pre, g_pw_w, d_relu);

    // relu, then the causal conv.
    for (std::size_t h = 0; h < H; ++h) {
      const double g = cache.conv_pre.at(t, h) > 0.0 ? d_relu[h] : 0.0;
      if (g == 0.0) continue;
      g_conv_b[h] += g;
      for (std::size_t j = 0; j < k; ++j) {
        const std::ptrdiff_t tau = static_cast<std::ptrdiff_t>(t) -
                                   static_cast<std::ptrdiff_t>(k - 1) +
                                   static_cast<std::ptrdiff_t>(j);
        if (tau < 0) continue;
        for (std::size_t f = 0; f < F; ++f) {
          g_conv_w.at(h, f, j) += g * cache.input.at(static_cast<std::size_t>(tau), f);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// CTC head

CtcHeadCache ctc_head_forward(const HybridModel& model, const Tensor& encoded) {
  const std::size_t T = encoded.dim(0);
  const std::size_t H = encoded.dim(1);
  const std::size_t V = static_cast<std::size_t>(model.config.vocab_size);
  CLASR_CHECK(H == static_cast<std::size_t>(model.config.hidden_dim),
              "ctc head: encoded width mismatch");

  const Tensor& w = model.params.at(pn::kCtcW);
  const Tensor& b = model.params.at(pn::kCtcB);

  CtcHeadCache cache;
  cache.logits = Tensor({T, V});
  for (std::size_t t = 0; t < T; ++t) {
    auto enc_row = encoded.data().subspan(t * H, H);
    auto logit_row = cache.logits.data().subspan(t * V, V);
    for (std::size_t v = 0; v < V; ++v) logit_row[v] = b[v];
    matvec_acc(w, enc_row, logit_row);
  }
  cache.log_probs = log_softmax(cache.logits, 1);
  return cache;
}

Tensor ctc_log_probs(const HybridModel& model, const Tensor& encoded) {
  return ctc_head_forward(model, encoded).log_probs;
}

Tensor ctc_head_backward(const HybridModel& model, const Tensor& encoded,
                         const Tensor& d_logits, ParamMap& grads) {
  const std::size_t T = encoded.dim(0);
  const std::size_t H = encoded.dim(1);
  const std::size_t V = static_cast<std::size_t>(model.config.vocab_size);
  CLASR_CHECK(d_logits.ndim() == 2 && d_logits.dim(0) == T && d_logits.dim(1) == V,
              "ctc_head_backward: gradient shape mismatch");

  const Tensor& w = model.params.at(pn::kCtcW);
  Tensor& g_w = grads.at(pn::kCtcW);
  Tensor& g_b = grads.at(pn::kCtcB);

  Tensor d_enc({T, H});
  for (std::size_t t = 0; t < T; ++t) {
    auto enc_row = encoded.data().subspan(t * H, H);
    auto dy = d_logits.data().subspan(t * V, V);
    auto dx = d_enc.data().subspan(t * H, H);
    for (std::size_t v = 0; v < V; ++v) g_b[v] += dy[v];
    matvec_backward(w, enc_row, dy, g_w, dx);
  }
  return d_enc;
}

// ---------------------------------------------------------------------------
// Prediction network

PredCache prediction_forward(const HybridModel& model, std::span<const int> targets) {
  const auto& cfg = model.config;
  check_targets(targets, cfg.vocab_size);
  const std::size_t H = static_cast<std::size_t>(cfg.hidden_dim);
  const std::size_t U = targets.size();

  const Tensor& embed = model.params.at(pn::kPredEmbed);
  const Tensor& proj_w = model.params.at(pn::kPredProjW);
  const Tensor& proj_b = model.params.at(pn::kPredProjB);

  PredCache cache;
  cache.targets.assign(targets.begin(), targets.end());
  cache.embedded = Tensor({U + 1, H});
  cache.vectors = Tensor({U + 1, H});

  // Position 0: the blank embedding itself is the start context.
  for (std::size_t h = 0; h < H; ++h) {
    const double e = embed.at(static_cast<std::size_t>(ModelConfig::blank_id), h);
    cache.embedded.at(0, h) = e;
    cache.vectors.at(0, h) = e;
  }
  for (std::size_t u = 1; u <= U; ++u) {
    const std::size_t sym = static_cast<std::size_t>(targets[u - 1]);
    auto emb_row = cache.embedded.data().subspan(u * H, H);
    auto vec_row = cache.vectors.data().subspan(u * H, H);
    for (std::size_t h = 0; h < H; ++h) emb_row[h] = embed.at(sym, h);
    for (std::size_t h = 0; h < H; ++h) vec_row[h] = proj_b[h];
    matvec_acc(proj_w, emb_row, vec_row);
    for (std::size_t h = 0; h < H; ++h) vec_row[h] = std::tanh(vec_row[h]);
  }
  return cache;
}

void prediction_backward(const HybridModel& model, const PredCache& cache,
                         const Tensor& d_vectors, ParamMap& grads) {
  CLASR_CHECK(d_vectors.same_shape(cache.vectors),
              "prediction_backward: gradient shape mismatch");
  const std::size_t H = cache.vectors.dim(1);
  const std::size_t U = cache.targets.size();

  const Tensor& proj_w = model.params.at(pn::kPredProjW);
  Tensor& g_embed = grads.at(pn::kPredEmbed);
  Tensor& g_proj_w = grads.at(pn::kPredProjW);
  Tensor& g_proj_b = grads.at(pn::kPredProjB);

  for (std::size_t h = 0; h < H; ++h) {
    g_embed.at(static_cast<std::size_t>(ModelConfig::blank_id), h) += d_vectors.at(0, h);
  }
  std::vector<double> d_pre(H), d_emb(H);
  for (std::size_t u = 1; u <= U; ++u) {
    const std::size_t sym = static_cast<std::size_t>(cache.targets[u - 1]);
    auto vec_row = cache.vectors.data().subspan(u * H, H);
    auto emb_row = cache.embedded.data().subspan(u * H, H);
    auto dy = d_vectors.data().subspan(u * H, H);
    std::fill(d_emb.begin(), d_emb.end(), 0.0);
    for (std::size_t h = 0; h < H; ++h) {
      d_pre[h] = dy[h] * (1.0 - vec_row[h] * vec_row[h]);
      g_proj_b[h] += d_pre[h];
    }
    matvec_backward(proj_w, emb_row, d_pre, g_proj_w, d_emb);
    for (std::size_t h = 0; h < H; ++h) g_embed.at(sym, h) += d_emb[h];
  }
}

// ---------------------------------------------------------------------------
// Joint network

JointCache joint_forward(const HybridModel& model, const Tensor& encoded,
                         const PredCache& pred) {
  const std::size_t T = encoded.dim(0);
  const std::size_t H = encoded.dim(1);
  const std::size_t Up1 = pred.vectors.dim(0);
  const std::size_t V = static_cast<std::size_t>(model.config.vocab_size);

  const Tensor& w_e = model.params.at(pn::kJointEncW);
  const Tensor& w_p = model.params.at(pn::kJointPredW);
  const Tensor& b = model.params.at(pn::kJointB);
  const Tensor& out_w = model.params.at(pn::kJointOutW);
  const Tensor& out_b = model.params.at(pn::kJointOutB);

  JointCache cache;
  cache.enc_proj = Tensor({T, H});
  cache.pred_proj = Tensor({Up1, H});
  cache.hidden = Tensor({T, Up1, H});
  cache.logits = Tensor({T, Up1, V});

  for (std::size_t t = 0; t < T; ++t) {
    auto dst = cache.enc_proj.data().subspan(t * H, H);
    matvec_acc(w_e, encoded.data().subspan(t * H, H), dst);
  }
  for (std::size_t u = 0; u < Up1; ++u) {
    auto dst = cache.pred_proj.data().subspan(u * H, H);
    matvec_acc(w_p, pred.vectors.data().subspan(u * H, H), dst);
  }
  for (std::size_t t = 0; t < T; ++t) {
    auto ep = cache.enc_proj.data().subspan(t * H, H);
    for (std::size_t u = 0; u < Up1; ++u) {
      auto pp = cache.pred_proj.data().subspan(u * H, H);
      auto hid = cache.hidden.data().subspan((t * Up1 + u) * H, H);
      for (std::size_t h = 0; h < H; ++h) hid[h] = std::tanh(ep[h] + pp[h] + b[h]);
      auto lrow = cache.logits.data().subspan((t * Up1 + u) * V, V);
      for (std::size_t v = 0; v < V; ++v) lrow[v] = out_b[v];
      matvec_acc(out_w, hid, lrow);
    }
  }
  cache.log_probs = log_softmax(cache.logits, 2);
  return cache;
}

Tensor joint_log_probs(const HybridModel& model, const Tensor& encoded,
                       std::span<const int> targets) {
  PredCache pred = prediction_forward(model, targets);
  return joint_forward(model, encoded, pred).log_probs;
}

JointGrads joint_backward(const HybridModel& model, const Tensor& encoded,
                          const PredCache& pred, const JointCache& cache,
                          const Tensor& d_logits, ParamMap& grads) {
  const std::size_t T = cache.hidden.dim(0);
  const std::size_t Up1 = cache.hidden.dim(1);
  const std::size_t H = cache.hidden.dim(2);
  const std::size_t V = static_cast<std::size_t>(model.config.vocab_size);
  CLASR_CHECK(d_logits.ndim() == 3 && d_logits.dim(0) == T && d_logits.dim(1) == Up1 &&
                  d_logits.dim(2) == V,
              "joint_backward: gradient shape mismatch");

  const Tensor& w_e = model.params.at(pn::kJointEncW);
  const Tensor& w_p = model.params.at(pn::kJointPredW);
  const Tensor& out_w = model.params.at(pn::kJointOutW);
  Tensor& g_w_e = grads.at(pn::kJointEncW);
  Tensor& g_w_p = grads.at(pn::kJointPredW);
  Tensor& g_b = grads.at(pn::kJointB);
  Tensor& g_out_w = grads.at(pn::kJointOutW);
  Tensor& g_out_b = grads.at(pn::kJointOutB);

  JointGrads out;
  out.d_encoded = Tensor({T, H});
  out.d_pred = Tensor({Up1, H});
  Tensor d_enc_proj({T, H});
  Tensor d_pred_proj({Up1, H});

  std::vector<double> d_hid(H), d_pre(H);
  for (std::size_t t = 0; t < T; ++t) {
    auto dep = d_enc_proj.data().subspan(t * H, H);
    for (std::size_t u = 0; u < Up1; ++u) {
      auto hid = cache.hidden.data().subspan((t * Up1 + u) * H, H);
      auto dy = d_logits.data().subspan((t * Up1 + u) * V, V);
      std::fill(d_hid.begin(), d_hid.end(), 0.0);
      for (std::size_t v = 0; v < V; ++v) g_out_b[v] += dy[v];
      matvec_backward(out_w, hid, dy, g_out_w, d_hid);
      auto dpp = d_pred_proj.data().subspan(u * H, H);
      for (std::size_t h = 0; h < H; ++h) {
        d_pre[h] = d_hid[h] * (1.0 - hid[h] * hid[h]);
        g_b[h] += d_pre[h];
        dep[h] += d_pre[h];
        dpp[h] += d_pre[h];
      }
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    auto dx = out.d_encoded.data().subspan(t * H, H);
    matvec_backward(w_e, encoded.data().subspan(t * H, H),
                    d_enc_proj.data().subspan(t * H, H), g_w_e, dx);
  }
  for (std::size_t u = 0; u < Up1; ++u) {
    auto dx = out.d_pred.data().subspan(u * H, H);
    matvec_backward(w_p, pred.vectors.data().subspan(u * H, H),
                    d_pred_proj.data().subspan(u * H, H), g_w_p, dx);
  }
  return out;
}

}  // namespace clasr
