#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "clasr/decode.hpp"
#include "clasr/logmath.hpp"
#include "clasr/model.hpp"
#include "clasr/rng.hpp"

using namespace clasr;

namespace {

// Frame-major argmax targets laid out as one-hot-ish log-probs.
Tensor frames_with_argmax(const std::vector<int>& winners, std::size_t vocab) {
  Tensor lp({winners.size(), vocab}, -3.0);
  for (std::size_t t = 0; t < winners.size(); ++t) {
    lp.at(t, static_cast<std::size_t>(winners[t])) = -0.1;
  }
  return lp;
}

}  // namespace

TEST_CASE("ctc collapse merges repeats and drops blanks") {
  Hypothesis h = ctc_greedy_decode(frames_with_argmax({1, 1, 0, 2}, 3), 0);
  CHECK(h.symbols == std::vector<int>{1, 2});
}

TEST_CASE("ctc all-blank frames decode to the empty hypothesis") {
  Hypothesis h = ctc_greedy_decode(frames_with_argmax({0, 0, 0}, 3), 0);
  CHECK(h.symbols.empty());
}

TEST_CASE("ctc blank separates repeats") {
  Hypothesis h = ctc_greedy_decode(frames_with_argmax({1, 0, 1}, 3), 0);
  CHECK(h.symbols == std::vector<int>{1, 1});
}

TEST_CASE("ctc argmax ties break to the lowest index") {
  Tensor lp({1, 3}, -1.0);  // exact three-way tie, blank included
  Hypothesis h = ctc_greedy_decode(lp, 0);
  CHECK(h.symbols.empty());  // blank (index 0) wins the tie

  Tensor lp2({1, 3}, -1.0);
  lp2.at(0, 0) = -5.0;  // tie between symbols 1 and 2
  Hypothesis h2 = ctc_greedy_decode(lp2, 0);
  CHECK(h2.symbols == std::vector<int>{1});
}

TEST_CASE("rnnt decode on a blank-dominant model is empty") {
  ModelConfig cfg;
  cfg.feat_dim = 2;
  cfg.hidden_dim = 3;
  cfg.vocab_size = 3;
  HybridModel m = init_model(cfg, 1);
  for (auto& e : m.params) e.value.fill(0.0);
  // All joint logits equal -> the tie goes to blank (index 0).
  Tensor enc({4, 3}, 0.0);
  Hypothesis h = rnnt_greedy_decode(m, enc, 10);
  CHECK(h.symbols.empty());
  CHECK(h.path == DecodePath::rnnt);
}

TEST_CASE("rnnt decode emits one symbol with hand-built weights") {
  // H = 1, V = 2. At the start context the joint prefers symbol 1; after
  // emitting it the context pushes the logit below blank's.
  ModelConfig cfg;
  cfg.feat_dim = 1;
  cfg.hidden_dim = 1;
  cfg.vocab_size = 2;
  HybridModel m = init_model(cfg, 2);
  for (auto& e : m.params) e.value.fill(0.0);
  m.params.at(param_names::kPredEmbed).at(1, 0) = 10.0;   // embed(symbol 1)
  m.params.at(param_names::kPredProjW).at(0, 0) = 1.0;    // context = tanh(10) ~ 1
  m.params.at(param_names::kJointPredW).at(0, 0) = -5.0;  // drives hidden negative
  m.params.at(param_names::kJointOutW).at(1, 0) = 2.0;    // symbol logit follows hidden
  m.params.at(param_names::kJointOutB)[1] = 1.0;          // blank starts below symbol 1

  Tensor enc({1, 1}, 0.0);
  Hypothesis h = rnnt_greedy_decode(m, enc, 10);
  CHECK(h.symbols == std::vector<int>{1});
}

TEST_CASE("rnnt decode caps symbols per frame") {
  ModelConfig cfg;
  cfg.feat_dim = 1;
  cfg.hidden_dim = 1;
  cfg.vocab_size = 2;
  HybridModel m = init_model(cfg, 3);
  for (auto& e : m.params) e.value.fill(0.0);
  m.params.at(param_names::kJointOutB)[1] = 1.0;  // symbol 1 always wins

  Tensor enc({3, 1}, 0.0);
  Hypothesis h = rnnt_greedy_decode(m, enc, 4);
  CHECK(h.symbols.size() == 12);  // T * cap
  for (int s : h.symbols) CHECK(s == 1);
}

TEST_CASE("rnnt decode is deterministic") {
  ModelConfig cfg;
  cfg.feat_dim = 3;
  cfg.hidden_dim = 4;
  cfg.vocab_size = 4;
  HybridModel m = init_model(cfg, 4);
  Rng rng(5);
  Tensor enc({6, 4});
  for (double& v : enc.data()) v = rng.normal();
  Hypothesis a = rnnt_greedy_decode(m, enc, 10);
  Hypothesis b = rnnt_greedy_decode(m, enc, 10);
  CHECK(a.symbols == b.symbols);
  CHECK(static_cast<int>(a.symbols.size()) <= 60);
  for (int s : a.symbols) CHECK(s != ModelConfig::blank_id);
}
