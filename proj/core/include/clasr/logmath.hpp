#ifndef CLASR_LOGMATH_HPP
#define CLASR_LOGMATH_HPP

#include <span>

#include "clasr/tensor.hpp"

namespace clasr {

// Log-space zero. Large negative sentinel instead of -inf keeps the DP
// recursions branch-free: adding any finite log-prob to it is absorbed
// below the double ulp at this magnitude.
inline constexpr double kLogZero = -1e30;

// Anything at or below this is treated as log-space zero.
inline constexpr double kLogZeroGuard = -0.5e30;

inline bool is_log_zero(double v) { return v <= kLogZeroGuard; }

/// log(sum_i exp(v_i)) via max-shift; exact for inputs up to +-700 and
/// absorbs kLogZero entries. Throws ContractViolation on empty input.
double log_sum_exp(std::span<const double> values);

/// Two-argument fast path used by the DP inner loops.
double log_sum_exp(double a, double b);

/// log_softmax along `axis`; shape preserved, each slice exponentiates
/// and sums to one. Throws ContractViolation if the axis is invalid.
Tensor log_softmax(const Tensor& logits, std::size_t axis);

/// Pull a gradient w.r.t. log_softmax outputs back to the logits:
///   d_logit[j] = g[j] - exp(log_prob[j]) * sum_i g[i]   per slice.
/// `log_probs` must be the log_softmax output the gradient refers to.
Tensor log_softmax_backward(const Tensor& log_probs, const Tensor& grad_log_probs,
                            std::size_t axis);

}  // namespace clasr

#endif  // CLASR_LOGMATH_HPP
