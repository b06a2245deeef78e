#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "clasr/errors.hpp"
#include "clasr/metrics.hpp"
#include "clasr/rng.hpp"
#include "oracles.hpp"

using namespace clasr;

TEST_CASE("edit_distance basics") {
  const std::vector<int> abcd = {1, 2, 3, 4};
  const std::vector<int> axc = {1, 9, 3};
  CHECK(edit_distance(abcd, abcd) == 0);
  CHECK(edit_distance(abcd, axc) == 2);  // one substitution + one deletion
  CHECK(edit_distance({}, axc) == 3);
  CHECK(edit_distance(abcd, {}) == 4);
  CHECK(edit_distance({}, {}) == 0);
}

TEST_CASE("edit_distance agrees with exhaustive recursion and is a metric") {
  Rng rng(77);
  auto random_seq = [&](int max_len) {
    std::vector<int> s(static_cast<std::size_t>(rng.uniform_int(0, max_len)));
    for (int& v : s) v = rng.uniform_int(1, 3);
    return s;
  };
  for (int trial = 0; trial < 300; ++trial) {
    const std::vector<int> a = random_seq(6);
    const std::vector<int> b = random_seq(6);
    const std::vector<int> c = random_seq(6);
    const int ab = edit_distance(a, b);
    CHECK(ab == oracles::edit_distance_recursive(a, b));
    CHECK(ab == edit_distance(b, a));                        // symmetry
    CHECK(edit_distance(a, a) == 0);                         // identity
    CHECK(ab <= edit_distance(a, c) + edit_distance(c, b));  // triangle
  }
}

TEST_CASE("wer examples") {
  CHECK(wer({{1, 2}}, {{1, 2}}) == 0.0);
  CHECK(wer({{1, 2}}, {{1, 9}}) == doctest::Approx(0.5));
  // Insertions push WER above one unless clipping is asked for.
  CHECK(wer({{1}}, {{1, 2, 3}}) == doctest::Approx(2.0));
  CHECK(wer({{1}}, {{1, 2, 3}}, true) == doctest::Approx(1.0));
}

TEST_CASE("wer contract violations and order invariance") {
  CHECK_THROWS_AS(wer({{1}}, {{1}, {2}}), ContractViolation);
  CHECK_THROWS_AS(wer({{}}, {{1}}), ContractViolation);

  const std::vector<std::vector<int>> refs = {{1, 2}, {3}};
  const std::vector<std::vector<int>> hyps = {{1}, {3, 3}};
  const std::vector<std::vector<int>> refs_r = {{3}, {1, 2}};
  const std::vector<std::vector<int>> hyps_r = {{3, 3}, {1}};
  CHECK(wer(refs, hyps) == wer(refs_r, hyps_r));
}

TEST_CASE("results matrix bookkeeping") {
  ResultsMatrix m(3);
  CHECK_FALSE(m.has(1, 1));
  MatrixCell cell;
  cell.wer_ctc_clean = 0.25;
  m.set(1, 1, cell);
  CHECK(m.has(1, 1));
  CHECK(m.get(1, 1).wer_ctc_clean == 0.25);
  CHECK_THROWS_AS(m.set(1, 1, cell), ContractViolation);   // write-once
  CHECK_THROWS_AS((void)m.get(2, 1), ContractViolation);   // unpopulated
  CHECK_THROWS_AS((void)m.get(1, 2), ContractViolation);   // upper triangle
  CHECK_THROWS_AS((void)m.get(4, 1), ContractViolation);   // out of range
}

namespace {

MatrixCell cell_all(double v) {
  MatrixCell c;
  for (Channel ch : kAllChannels) c.set(ch, v);
  return c;
}

}  // namespace

TEST_CASE("avg_wer examples") {
  ResultsMatrix m(2);
  m.set(1, 1, cell_all(0.4));
  m.set(2, 1, cell_all(0.3));
  m.set(2, 2, cell_all(0.1));
  CHECK(avg_wer(m, 1, Channel::ctc_clean) == doctest::Approx(0.4));
  CHECK(avg_wer(m, 2, Channel::rnnt_noisy) == doctest::Approx(0.2));

  ResultsMatrix same(3);
  for (int k = 1; k <= 3; ++k) {
    for (int i = 1; i <= k; ++i) same.set(k, i, cell_all(0.37));
  }
  for (int k = 1; k <= 3; ++k) {
    CHECK(avg_wer(same, k, Channel::ctc_noisy) == doctest::Approx(0.37));
  }
}

TEST_CASE("bwt sign convention and the frozen-performance case") {
  ResultsMatrix m(2);
  m.set(1, 1, cell_all(0.2));
  m.set(2, 1, cell_all(0.3));
  m.set(2, 2, cell_all(0.15));
  // Acc dropped from 0.8 to 0.7 -> BWT = -0.1.
  CHECK(bwt(m, 2, Channel::ctc_clean) == doctest::Approx(-0.1));

  ResultsMatrix improve(2);
  improve.set(1, 1, cell_all(0.2));
  improve.set(2, 1, cell_all(0.1));
  improve.set(2, 2, cell_all(0.15));
  CHECK(bwt(improve, 2, Channel::ctc_clean) > 0.0);

  // Row k copying the diagonal means no forgetting at all.
  ResultsMatrix frozen(3);
  const double diag[] = {0.5, 0.3, 0.2};
  for (int k = 1; k <= 3; ++k) {
    for (int i = 1; i <= k; ++i) frozen.set(k, i, cell_all(diag[i - 1]));
  }
  CHECK(bwt(frozen, 2, Channel::rnnt_clean) == 0.0);
  CHECK(bwt(frozen, 3, Channel::rnnt_clean) == 0.0);

  CHECK_THROWS_AS(bwt(m, 1, Channel::ctc_clean), ContractViolation);
}
