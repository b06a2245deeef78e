#include "clasr/decode.hpp"

#include <cmath>

#include "clasr/errors.hpp"

namespace clasr {

namespace pn = param_names;

Hypothesis ctc_greedy_decode(const Tensor& log_probs, int blank_id) {
  CLASR_CHECK(log_probs.ndim() == 2, "ctc_greedy_decode: need [T x V] log-probs");
  const std::size_t T = log_probs.dim(0);
  const std::size_t V = log_probs.dim(1);

  Hypothesis hyp;
  hyp.path = DecodePath::ctc;
  int prev = -1;
  for (std::size_t t = 0; t < T; ++t) {
    auto row = log_probs.data().subspan(t * V, V);
    std::size_t best = 0;
    for (std::size_t v = 1; v < V; ++v) {
      if (row[v] > row[best]) best = v;  // strict: ties stay at the lower index
    }
    const int sym = static_cast<int>(best);
    if (sym != prev && sym != blank_id) hyp.symbols.push_back(sym);
    prev = sym;
  }
  return hyp;
}

namespace {

// argmax with ties toward the lowest index.
std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

Hypothesis rnnt_greedy_decode(const HybridModel& model, const Tensor& encoded,
                              int max_symbols_per_frame) {
  CLASR_CHECK(max_symbols_per_frame >= 1, "rnnt decode: cap must be >= 1");
  const std::size_t T = encoded.dim(0);
  const std::size_t H = encoded.dim(1);
  const std::size_t V = static_cast<std::size_t>(model.config.vocab_size);

  const Tensor& embed = model.params.at(pn::kPredEmbed);
  const Tensor& proj_w = model.params.at(pn::kPredProjW);
  const Tensor& proj_b = model.params.at(pn::kPredProjB);
  const Tensor& w_e = model.params.at(pn::kJointEncW);
  const Tensor& w_p = model.params.at(pn::kJointPredW);
  const Tensor& b = model.params.at(pn::kJointB);
  const Tensor& out_w = model.params.at(pn::kJointOutW);
  const Tensor& out_b = model.params.at(pn::kJointOutB);

  // Start context: the blank embedding row.
  std::vector<double> ctx(H);
  for (std::size_t h = 0; h < H; ++h) {
    ctx[h] = embed.at(static_cast<std::size_t>(ModelConfig::blank_id), h);
  }
  std::vector<double> ctx_proj(H);
  auto project_ctx = [&] {
    for (std::size_t h = 0; h < H; ++h) {
      double acc = 0.0;
      for (std::size_t j = 0; j < H; ++j) acc += w_p.at(h, j) * ctx[j];
      ctx_proj[h] = acc;
    }
  };
  project_ctx();

  Hypothesis hyp;
  hyp.path = DecodePath::rnnt;
  std::vector<double> enc_proj(H), hidden(H), logits(V);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t h = 0; h < H; ++h) {
      double acc = 0.0;
      for (std::size_t j = 0; j < H; ++j) acc += w_e.at(h, j) * encoded.at(t, j);
      enc_proj[h] = acc;
    }
    for (int emitted = 0; emitted < max_symbols_per_frame; ++emitted) {
      for (std::size_t h = 0; h < H; ++h) {
        hidden[h] = std::tanh(enc_proj[h] + ctx_proj[h] + b[h]);
      }
      for (std::size_t v = 0; v < V; ++v) {
        double acc = out_b[v];
        for (std::size_t h = 0; h < H; ++h) acc += out_w.at(v, h) * hidden[h];
        logits[v] = acc;
      }
      const std::size_t best = argmax(logits);
      if (best == static_cast<std::size_t>(ModelConfig::blank_id)) break;
      hyp.symbols.push_back(static_cast<int>(best));
      for (std::size_t h = 0; h < H; ++h) {
        double acc = proj_b[h];
        for (std::size_t j = 0; j < H; ++j) acc += proj_w.at(h, j) * embed.at(best, j);
        ctx[h] = std::tanh(acc);
      }
      project_ctx();
    }
  }
  return hyp;
}

}  // namespace clasr
