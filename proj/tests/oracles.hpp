// Independent brute-force oracles used by the unit and acceptance
// suites. Deliberately naive: they enumerate instead of sharing any
// code path with the implementations they check.

#ifndef CLASR_TESTS_ORACLES_HPP
#define CLASR_TESTS_ORACLES_HPP

#include <cmath>
#include <span>
#include <vector>

#include "clasr/tensor.hpp"

namespace clasr::oracles {

/// Sum of path probabilities over every frame-label sequence in V^T
/// whose collapse (merge repeats, then drop blanks) equals the target.
/// Returns -log of the sum; +inf when no alignment exists.
inline double ctc_brute_force(const Tensor& log_probs, std::span<const int> targets,
                              int blank_id) {
  const std::size_t T = log_probs.dim(0);
  const std::size_t V = log_probs.dim(1);
  double total = 0.0;
  std::vector<int> path(T, 0);
  for (;;) {
    // Collapse the current path.
    std::vector<int> collapsed;
    int prev = -1;
    for (int s : path) {
      if (s != prev && s != blank_id) collapsed.push_back(s);
      prev = s;
    }
    if (collapsed.size() == targets.size() &&
        std::equal(collapsed.begin(), collapsed.end(), targets.begin())) {
      double lp = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        lp += log_probs.at(t, static_cast<std::size_t>(path[t]));
      }
      total += std::exp(lp);
    }
    // Next path in base-V counting order.
    std::size_t pos = 0;
    while (pos < T && path[pos] == static_cast<int>(V) - 1) path[pos++] = 0;
    if (pos == T) break;
    ++path[pos];
  }
  return -std::log(total);
}

/// Sum over every monotone transducer lattice path: blank advances t,
/// the next target advances u, and the path ends with the blank at
/// (T-1, U). Returns -log of the sum.
inline double rnnt_brute_force(const Tensor& node_log_probs,
                               std::span<const int> targets, int blank_id) {
  const std::size_t T = node_log_probs.dim(0);
  const std::size_t U = targets.size();
  double total = 0.0;
  auto walk = [&](auto&& self, std::size_t t, std::size_t u, double acc) -> void {
    if (u < U) {
      self(self, t, u + 1,
           acc + node_log_probs.at(t, u, static_cast<std::size_t>(targets[u])));
    }
    const double blank_lp = node_log_probs.at(t, u, static_cast<std::size_t>(blank_id));
    if (t + 1 < T) {
      self(self, t + 1, u, acc + blank_lp);
    } else if (u == U) {
      total += std::exp(acc + blank_lp);
    }
  };
  walk(walk, 0, 0, 0.0);
  return -std::log(total);
}

/// Plain exhaustive recursion for Levenshtein distance.
inline int edit_distance_recursive(std::span<const int> ref, std::span<const int> hyp) {
  if (ref.empty()) return static_cast<int>(hyp.size());
  if (hyp.empty()) return static_cast<int>(ref.size());
  const int sub = edit_distance_recursive(ref.subspan(1), hyp.subspan(1)) +
                  (ref[0] == hyp[0] ? 0 : 1);
  const int del = edit_distance_recursive(ref.subspan(1), hyp) + 1;
  const int ins = edit_distance_recursive(ref, hyp.subspan(1)) + 1;
  return std::min({sub, del, ins});
}

}  // namespace clasr::oracles

#endif  // CLASR_TESTS_ORACLES_HPP
