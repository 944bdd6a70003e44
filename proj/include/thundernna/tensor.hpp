#ifndef THUNDERNNA_TENSOR_HPP
#define THUNDERNNA_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace thundernna {

using Shape = std::vector<std::size_t>;

/// Number of scalars addressed by `shape`. The empty shape holds nothing;
/// there are no rank-0 scalars.
std::size_t shape_size(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array of doubles.
///
/// The buffer length always equals the product of the extents; every
/// constructor and reshape enforces this and throws ShapeError otherwise.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  /// Rank-1 tensor holding `values`.
  static Tensor vector(std::initializer_list<double> values);
  static Tensor vector(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Same data under a new shape with equal element count.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

double linf_norm(std::span<const double> v);
double l2_norm(std::span<const double> v);
/// max_i |a_i - b_i|; sizes must match.
double linf_distance(std::span<const double> a, std::span<const double> b);
double l2_distance(std::span<const double> a, std::span<const double> b);
std::size_t argmax(std::span<const double> v);

}  // namespace thundernna

#endif  // THUNDERNNA_TENSOR_HPP
