#ifndef CLASR_GRADCHECK_HPP
#define CLASR_GRADCHECK_HPP

#include <functional>

#include "clasr/params.hpp"

namespace clasr {

/// Central-difference gradient (f(p+h) - f(p-h)) / 2h per coordinate.
/// The oracle for every analytic gradient in the project. Throws
/// InputError naming the offending parameter/coordinate when f turns
/// non-finite at a perturbed point.
ParamMap finite_diff_gradient(const std::function<double(const ParamMap&)>& f,
                              const ParamMap& params, double h);

/// max over coordinates of |a - b| / max(floor, |a|, |b|).
/// The floor keeps near-zero coordinates from tripping on FD noise.
double max_rel_error(const ParamMap& a, const ParamMap& b, double floor = 1e-6);

}  // namespace clasr

#endif  // CLASR_GRADCHECK_HPP
