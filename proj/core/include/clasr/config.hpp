#ifndef CLASR_CONFIG_HPP
#define CLASR_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "clasr/continual.hpp"
#include "clasr/model.hpp"
#include "clasr/synth.hpp"

namespace clasr {

/// One experiment: a task sequence, a method, and the protocol knobs.
/// Defaults follow the reference protocol (Adam at 1e-4, w_ctc 0.3,
/// gamma 1.0, lambda_ewc 10, lambda_mas 1, alpha_ctx 0.3, alpha_kd 0.1).
struct ExperimentConfig {
  std::uint64_t global_seed = 1;
  int num_tasks = 5;  // at most 9
  int epochs_per_task = 2;
  CLMethod method = CLMethod::naive;
  CLHyper hyper;

  ModelConfig model;
  SynthConfig data;

  double w_ctc = 0.3;
  double learning_rate = 1e-4;
  int batch_size = 8;
  int rnnt_max_symbols = 10;
  bool clip_wer = false;

  std::string output_dir = "runs";
  std::vector<int> task_permutation;      // optional curriculum reordering
  std::vector<std::uint64_t> seeds;       // optional multi-seed list

  void validate() const;  // throws ConfigError
};

/// Parse the flat key-value config format: one `key = value` per line,
/// values are JSON scalars (or JSON arrays for the list-valued keys),
/// '#' starts a comment. Unknown keys are errors.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);

/// The run's effective output root: $CLASR_OUTPUT_ROOT, when set,
/// re-roots a relative output_dir.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

}  // namespace clasr

#endif  // CLASR_CONFIG_HPP
