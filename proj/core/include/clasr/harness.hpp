#ifndef CLASR_HARNESS_HPP
#define CLASR_HARNESS_HPP

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "clasr/config.hpp"
#include "clasr/metrics.hpp"
#include "clasr/model.hpp"
#include "clasr/synth.hpp"

namespace clasr {

inline constexpr const char* kVersionTag = "0.1.0";

struct TaskTrainStats {
  int task_position = 0;  // 1-based position in the curriculum
  int task_id = 0;        // generated language id (differs under permutation)
  std::vector<double> epoch_mean_loss;
  double wall_seconds = 0.0;
};

/// Everything one run produces. A pure function of its config (wall
/// clock aside), which is what the determinism tests pin down.
struct RunRecord {
  std::string version = kVersionTag;
  bool complete = false;
  std::uint64_t seed = 0;
  ExperimentConfig config;
  std::vector<TaskTrainStats> per_task;
  ResultsMatrix matrix;
};

/// Counts every training-phase utterance access, keyed by (curriculum
/// position, utterance task_id). The no-replay audit asserts that
/// position k only ever touched its own task's data.
struct AccessAudit {
  std::map<std::pair<int, int>, long> train_accesses;
  int foreign_accesses(const std::vector<int>& expected_task_by_position) const;
};

/// Final model and strategy state, for checkpointing alongside a record.
struct RunArtifacts {
  HybridModel model;
  CLState state;
};

/// The sequential protocol: for k = 1..K train on task k's training
/// split only, run the end-of-task strategy update, then fill row k of
/// the matrix from both decoders on the clean/noisy test halves.
RunRecord run_experiment(const ExperimentConfig& config, AccessAudit* audit = nullptr);

/// As above but for one explicit seed (ignores config.seeds).
RunRecord run_experiment_seeded(const ExperimentConfig& config, std::uint64_t seed,
                                AccessAudit* audit = nullptr,
                                RunArtifacts* artifacts = nullptr);

/// Row k of the results matrix: four WERs per earlier task, computed on
/// the disjoint clean and noisy test halves with both decoders.
std::vector<MatrixCell> evaluate_matrix_row(const HybridModel& model,
                                            const std::vector<TaskDataset>& datasets,
                                            int k, int rnnt_max_symbols,
                                            bool clip_wer = false);

void save_run_record(const RunRecord& record, const std::filesystem::path& path);
RunRecord load_run_record(const std::filesystem::path& path);

/// Long-format CSV: method, epochs, seed, k, i_or_null, channel,
/// metric in {wer, avg_wer, bwt}, value. One row per datum, stable
/// order, 17 significant digits. All records must share K.
void emit_plot_data(const std::vector<RunRecord>& records,
                    const std::filesystem::path& path);

/// Per-(method, epochs, k, channel, metric) mean and min/max envelope
/// across seeds, same column layout plus the aggregate columns.
void emit_aggregate_data(const std::vector<RunRecord>& records,
                         const std::filesystem::path& path);

}  // namespace clasr

#endif  // CLASR_HARNESS_HPP
