#include "clasr/tensor.hpp"

#include <cmath>
#include <sstream>

#include "clasr/errors.hpp"

namespace clasr {

namespace {
std::size_t checked_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(checked_numel(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  CLASR_CHECK(checked_numel(shape_) == data_.size(),
              "tensor data length does not match shape " + shape_str());
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

std::size_t Tensor::dim(std::size_t axis) const {
  CLASR_CHECK(axis < shape_.size(), "tensor axis out of range");
  return shape_[axis];
}

double& Tensor::at(std::size_t i, std::size_t j) {
  CLASR_CHECK(shape_.size() == 2 && i < shape_[0] && j < shape_[1],
              "bad 2-d index into tensor " + shape_str());
  return data_[i * shape_[1] + j];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  return const_cast<Tensor*>(this)->at(i, j);
}

double& Tensor::at(std::size_t i, std::size_t j, std::size_t k) {
  CLASR_CHECK(shape_.size() == 3 && i < shape_[0] && j < shape_[1] && k < shape_[2],
              "bad 3-d index into tensor " + shape_str());
  return data_[(i * shape_[1] + j) * shape_[2] + k];
}

double Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
  return const_cast<Tensor*>(this)->at(i, j, k);
}

void Tensor::fill(double value) {
  for (double& v : data_) v = value;
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << "x";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

void add_scaled(Tensor& dst, const Tensor& src, double scale) {
  CLASR_CHECK(dst.same_shape(src), "add_scaled shape mismatch");
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * s[i];
}

}  // namespace clasr
