#include "clasr/gradcheck.hpp"

#include <cmath>
#include <string>

#include "clasr/errors.hpp"

namespace clasr {

ParamMap finite_diff_gradient(const std::function<double(const ParamMap&)>& f,
                              const ParamMap& params, double h) {
  CLASR_CHECK(h > 0.0, "finite_diff_gradient needs h > 0");
  ParamMap work = params;
  ParamMap grads = zeros_like(params);
  for (std::size_t i = 0; i < work.size(); ++i) {
    auto values = work.entry(i).value.data();
    auto out = grads.entry(i).value.data();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + h;
      const double f_plus = f(work);
      values[j] = saved - h;
      const double f_minus = f(work);
      values[j] = saved;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
        throw InputError("finite_diff_gradient: non-finite objective at " +
                         work.entry(i).name + "[" + std::to_string(j) + "]");
      }
      out[j] = (f_plus - f_minus) / (2.0 * h);
    }
  }
  return grads;
}

double max_rel_error(const ParamMap& a, const ParamMap& b, double floor) {
  CLASR_CHECK(a.same_layout(b), "max_rel_error: layout mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto x = a.entry(i).value.data();
    auto y = b.entry(i).value.data();
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double denom = std::max({floor, std::fabs(x[j]), std::fabs(y[j])});
      worst = std::max(worst, std::fabs(x[j] - y[j]) / denom);
    }
  }
  return worst;
}

}  // namespace clasr
