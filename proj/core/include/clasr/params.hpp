#ifndef CLASR_PARAMS_HPP
#define CLASR_PARAMS_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "clasr/tensor.hpp"

namespace clasr {

/// Ordered name -> Tensor store for model parameters, gradients and
/// per-parameter importance weights. Iteration order is insertion order
/// and therefore deterministic; copying yields a value-independent
/// snapshot.
class ParamMap {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  Tensor& insert(std::string name, Tensor value);

  bool contains(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::vector<Entry>::iterator begin() { return entries_.begin(); }
  std::vector<Entry>::iterator end() { return entries_.end(); }
  std::vector<Entry>::const_iterator begin() const { return entries_.begin(); }
  std::vector<Entry>::const_iterator end() const { return entries_.end(); }

  const Entry& entry(std::size_t i) const { return entries_[i]; }
  Entry& entry(std::size_t i) { return entries_[i]; }

  /// True when both maps hold the same names, shapes and order.
  bool same_layout(const ParamMap& other) const;

  bool operator==(const ParamMap& other) const;

  std::size_t total_elements() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Same names and shapes, zero-filled values.
ParamMap zeros_like(const ParamMap& params);

/// dst += scale * src, entry by entry; layouts must match.
void add_scaled(ParamMap& dst, const ParamMap& src, double scale);

/// Every value multiplied by `factor`, in place.
void scale(ParamMap& params, double factor);

}  // namespace clasr

#endif  // CLASR_PARAMS_HPP
