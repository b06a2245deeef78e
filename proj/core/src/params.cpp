#include "clasr/params.hpp"

#include "clasr/errors.hpp"

namespace clasr {

Tensor& ParamMap::insert(std::string name, Tensor value) {
  CLASR_CHECK(!index_.contains(name), "duplicate parameter name: " + name);
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), std::move(value)});
  return entries_.back().value;
}

bool ParamMap::contains(const std::string& name) const { return index_.contains(name); }

Tensor& ParamMap::at(const std::string& name) {
  auto it = index_.find(name);
  CLASR_CHECK(it != index_.end(), "unknown parameter: " + name);
  return entries_[it->second].value;
}

const Tensor& ParamMap::at(const std::string& name) const {
  return const_cast<ParamMap*>(this)->at(name);
}

bool ParamMap::same_layout(const ParamMap& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (entries_[i].value.shape() != other.entries_[i].value.shape()) return false;
  }
  return true;
}

bool ParamMap::operator==(const ParamMap& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (!(entries_[i].value == other.entries_[i].value)) return false;
  }
  return true;
}

std::size_t ParamMap::total_elements() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

ParamMap zeros_like(const ParamMap& params) {
  ParamMap out;
  for (const auto& e : params) out.insert(e.name, Tensor(e.value.shape()));
  return out;
}

void add_scaled(ParamMap& dst, const ParamMap& src, double scale) {
  CLASR_CHECK(dst.same_layout(src), "add_scaled: parameter layout mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    add_scaled(dst.entry(i).value, src.entry(i).value, scale);
  }
}

void scale(ParamMap& params, double factor) {
  for (auto& e : params) {
    for (double& v : e.value.data()) v *= factor;
  }
}

}  // namespace clasr
