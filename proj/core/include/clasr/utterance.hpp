#ifndef CLASR_UTTERANCE_HPP
#define CLASR_UTTERANCE_HPP

#include <vector>

#include "clasr/tensor.hpp"

namespace clasr {

/// One training/eval sample: a feature sequence with its symbol targets.
/// Targets hold values in [1, vocab-1]; blank never appears in them.
struct Utterance {
  Tensor features;           // [T, F]
  std::vector<int> targets;  // length U >= 1
  bool noisy = false;
  int task_id = 0;
};

}  // namespace clasr

#endif  // CLASR_UTTERANCE_HPP
