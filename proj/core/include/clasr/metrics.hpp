#ifndef CLASR_METRICS_HPP
#define CLASR_METRICS_HPP

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clasr {

/// Unit-cost Levenshtein distance; empty sequences allowed.
int edit_distance(std::span<const int> ref, std::span<const int> hyp);

/// Corpus-level WER: sum of edit distances / sum of reference lengths.
/// Insertions can push it above 1; `clip` caps it at 1 when requested.
/// Throws ContractViolation on mismatched lists or zero reference mass.
double wer(const std::vector<std::vector<int>>& refs,
           const std::vector<std::vector<int>>& hyps, bool clip = false);

/// Decode path x noise condition of one evaluation channel.
enum class Channel { rnnt_clean = 0, rnnt_noisy = 1, ctc_clean = 2, ctc_noisy = 3 };

inline constexpr std::array<Channel, 4> kAllChannels = {
    Channel::rnnt_clean, Channel::rnnt_noisy, Channel::ctc_clean, Channel::ctc_noisy};

std::string channel_name(Channel c);

/// WERs of one (after-task k, on-task i) evaluation, all four channels.
struct MatrixCell {
  double wer_rnnt_clean = 0.0;
  double wer_rnnt_noisy = 0.0;
  double wer_ctc_clean = 0.0;
  double wer_ctc_noisy = 0.0;

  double get(Channel c) const;
  void set(Channel c, double v);
  bool operator==(const MatrixCell&) const = default;
};

/// Lower-triangular W[k][i] (1 <= i <= k <= K): WER on task i after
/// training through task k. Cells are written once, after task k.
class ResultsMatrix {
 public:
  ResultsMatrix() = default;
  explicit ResultsMatrix(int num_tasks);

  int num_tasks() const { return num_tasks_; }
  bool has(int k, int i) const;
  void set(int k, int i, const MatrixCell& cell);
  const MatrixCell& get(int k, int i) const;

  bool operator==(const ResultsMatrix&) const = default;

 private:
  std::size_t index(int k, int i) const;
  int num_tasks_ = 0;
  std::vector<std::optional<MatrixCell>> cells_;
};

/// AvgWER_k = (1/k) sum_{i=1..k} W[k][i] on one channel.
double avg_wer(const ResultsMatrix& matrix, int k, Channel channel);

/// BWT_k = (1/(k-1)) sum_{i<k} (Acc_{k,i} - Acc_{i,i}), Acc = 1 - W.
/// Undefined for k < 2; accuracy deliberately unclamped.
double bwt(const ResultsMatrix& matrix, int k, Channel channel);

}  // namespace clasr

#endif  // CLASR_METRICS_HPP
