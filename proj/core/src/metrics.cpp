#include "clasr/metrics.hpp"

#include <algorithm>

#include "clasr/errors.hpp"

namespace clasr {

int edit_distance(std::span<const int> ref, std::span<const int> hyp) {
  const std::size_t m = ref.size(), n = hyp.size();
  std::vector<int> prev(n + 1), cur(n + 1);
  for (std::size_t j = 0; j <= n; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= m; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= n; ++j) {
      const int sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

double wer(const std::vector<std::vector<int>>& refs,
           const std::vector<std::vector<int>>& hyps, bool clip) {
  CLASR_CHECK(refs.size() == hyps.size(), "wer: refs/hyps length mismatch");
  long long edits = 0, tokens = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    edits += edit_distance(refs[i], hyps[i]);
    tokens += static_cast<long long>(refs[i].size());
  }
  CLASR_CHECK(tokens > 0, "wer: zero total reference length");
  const double value = static_cast<double>(edits) / static_cast<double>(tokens);
  return clip ? std::min(value, 1.0) : value;
}

std::string channel_name(Channel c) {
  switch (c) {
    case Channel::rnnt_clean: return "rnnt_clean";
    case Channel::rnnt_noisy: return "rnnt_noisy";
    case Channel::ctc_clean: return "ctc_clean";
    case Channel::ctc_noisy: return "ctc_noisy";
  }
  throw ContractViolation("unknown channel");
}

double MatrixCell::get(Channel c) const {
  switch (c) {
    case Channel::rnnt_clean: return wer_rnnt_clean;
    case Channel::rnnt_noisy: return wer_rnnt_noisy;
    case Channel::ctc_clean: return wer_ctc_clean;
    case Channel::ctc_noisy: return wer_ctc_noisy;
  }
  throw ContractViolation("unknown channel");
}

void MatrixCell::set(Channel c, double v) {
  switch (c) {
    case Channel::rnnt_clean: wer_rnnt_clean = v; return;
    case Channel::rnnt_noisy: wer_rnnt_noisy = v; return;
    case Channel::ctc_clean: wer_ctc_clean = v; return;
    case Channel::ctc_noisy: wer_ctc_noisy = v; return;
  }
  throw ContractViolation("unknown channel");
}

ResultsMatrix::ResultsMatrix(int num_tasks) : num_tasks_(num_tasks) {
  CLASR_CHECK(num_tasks >= 1, "results matrix needs at least one task");
  cells_.resize(static_cast<std::size_t>(num_tasks) * (num_tasks + 1) / 2);
}

std::size_t ResultsMatrix::index(int k, int i) const {
  CLASR_CHECK(1 <= i && i <= k && k <= num_tasks_,
              "results matrix index outside the lower triangle");
  return static_cast<std::size_t>(k - 1) * k / 2 + static_cast<std::size_t>(i - 1);
}

bool ResultsMatrix::has(int k, int i) const { return cells_[index(k, i)].has_value(); }

void ResultsMatrix::set(int k, int i, const MatrixCell& cell) {
  auto& slot = cells_[index(k, i)];
  CLASR_CHECK(!slot.has_value(), "results matrix cell written twice");
  slot = cell;
}

const MatrixCell& ResultsMatrix::get(int k, int i) const {
  const auto& slot = cells_[index(k, i)];
  CLASR_CHECK(slot.has_value(), "results matrix cell not populated");
  return *slot;
}

double avg_wer(const ResultsMatrix& matrix, int k, Channel channel) {
  double sum = 0.0;
  for (int i = 1; i <= k; ++i) sum += matrix.get(k, i).get(channel);
  return sum / static_cast<double>(k);
}

double bwt(const ResultsMatrix& matrix, int k, Channel channel) {
  CLASR_CHECK(k >= 2, "bwt undefined before the second task");
  double sum = 0.0;
  for (int i = 1; i < k; ++i) {
    const double acc_ki = 1.0 - matrix.get(k, i).get(channel);
    const double acc_ii = 1.0 - matrix.get(i, i).get(channel);
    sum += acc_ki - acc_ii;
  }
  return sum / static_cast<double>(k - 1);
}

}  // namespace clasr
