#ifndef CLASR_TENSOR_HPP
#define CLASR_TENSOR_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace clasr {

/// Dense row-major tensor of 64-bit floats. Carries features, logits and
/// gradients throughout the engine; value semantics, no views.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
  Tensor(std::vector<std::size_t> shape, double fill);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double value);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Shape-checked element access for the ranks used in this project.
  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;
  double& at(std::size_t i, std::size_t j, std::size_t k);
  double at(std::size_t i, std::size_t j, std::size_t k) const;

  void fill(double value);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  bool operator==(const Tensor& other) const = default;

  std::string shape_str() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

Tensor zeros_like(const Tensor& t);

// dst += scale * src, elementwise; shapes must match.
void add_scaled(Tensor& dst, const Tensor& src, double scale);

}  // namespace clasr

#endif  // CLASR_TENSOR_HPP
