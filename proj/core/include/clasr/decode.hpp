#ifndef CLASR_DECODE_HPP
#define CLASR_DECODE_HPP

#include <vector>

#include "clasr/model.hpp"
#include "clasr/tensor.hpp"

namespace clasr {

enum class DecodePath { ctc, rnnt };

/// A decoded symbol sequence; never contains blank.
struct Hypothesis {
  std::vector<int> symbols;
  DecodePath path = DecodePath::ctc;
};

/// Best-path CTC: per-frame argmax, collapse consecutive repeats, drop
/// blanks. Argmax ties break toward the lowest symbol index.
Hypothesis ctc_greedy_decode(const Tensor& log_probs, int blank_id);

/// Frame-synchronous greedy transducer decoding: at each frame emit
/// argmax symbols (advancing the prediction context) until blank wins
/// or `max_symbols_per_frame` is reached, then move to the next frame.
Hypothesis rnnt_greedy_decode(const HybridModel& model, const Tensor& encoded,
                              int max_symbols_per_frame = 10);

}  // namespace clasr

#endif  // CLASR_DECODE_HPP
