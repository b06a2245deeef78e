#ifndef CLASR_ERRORS_HPP
#define CLASR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace clasr {

// Caller broke a documented precondition (programming error).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Data handed in is malformed (bad symbol ids, mixed shapes, ...).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Experiment configuration is invalid; reported before any work starts.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// CTC cannot align the target within the given number of frames.
// Distinct from numeric failure so callers can skip instead of abort.
class CtcInfeasible : public std::runtime_error {
 public:
  explicit CtcInfeasible(const std::string& what) : std::runtime_error(what) {}
};

#define CLASR_CHECK(cond, msg)                        \
  do {                                                \
    if (!(cond)) throw ::clasr::ContractViolation(msg); \
  } while (0)

}  // namespace clasr

#endif  // CLASR_ERRORS_HPP
