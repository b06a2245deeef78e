#ifndef CLASR_SYNTH_HPP
#define CLASR_SYNTH_HPP

#include <cstdint>
#include <vector>

#include "clasr/rng.hpp"
#include "clasr/tensor.hpp"
#include "clasr/utterance.hpp"

namespace clasr {

/// Knobs for the synthetic-language generator. Split sizes keep the
/// benchmark's 2:1 clean:noisy training ratio and half/half test split.
struct SynthConfig {
  int feat_dim = 8;
  int num_symbols = 12;  // symbol ids 1..num_symbols; 0 stays blank

  int u_min = 2, u_max = 8;  // target length range
  int d_min = 1, d_max = 3;  // frames emitted per symbol
  double base_sigma = 0.1;   // clean utterances still carry this jitter
  double noise_sigma = 0.5;  // extra deviation on noisy utterances

  int train_clean = 80, train_noisy = 40;
  int val_clean = 20, val_noisy = 20;
  int test_clean = 20, test_noisy = 20;

  // Optional per-task multiplier on both sigmas (index task_id - 1);
  // tasks beyond the list, or an empty list, use 1.0.
  std::vector<double> difficulty;

  void validate() const;  // throws ConfigError
};

/// One synthetic "language": per-symbol feature prototypes and a bigram
/// chain over symbols. Fully determined by (task_id, global_seed, config).
struct LanguageSpec {
  int task_id = 0;
  Tensor prototypes;               // [num_symbols, feat_dim]
  Tensor transition;               // [num_symbols, num_symbols], rows sum to 1
  std::vector<double> stationary;  // stationary distribution of the chain
  SynthConfig config;
  double sigma_scale = 1.0;
};

LanguageSpec make_language(int task_id, std::uint64_t global_seed,
                           const SynthConfig& config);

/// Draw one utterance. Symbols follow the bigram walk started from the
/// stationary distribution; each symbol emits d ~ U[d_min,d_max] frames
/// of prototype + noise. An adjacent repeated symbol gets one extra
/// frame so CTC stays feasible.
Utterance sample_utterance(const LanguageSpec& spec, bool noisy, Rng& rng);

struct TaskDataset {
  int task_id = 0;
  std::vector<Utterance> train, val, test;
};

/// The full task sequence; pure function of (config, num_tasks, seed).
/// Each (task, split) draws from its own named RNG substream.
std::vector<TaskDataset> build_task_stream(const SynthConfig& config, int num_tasks,
                                           std::uint64_t global_seed);

}  // namespace clasr

#endif  // CLASR_SYNTH_HPP
