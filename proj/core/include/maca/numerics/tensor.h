#ifndef MACA_NUMERICS_TENSOR_H_
#define MACA_NUMERICS_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace maca {

// Dense row-major array of doubles. Most of the library works with rank-2
// tensors; vectors are stored as 1 x n rows.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape, double fill = 0.0);
  Tensor(std::vector<size_t> shape, std::vector<double> data);

  static Tensor Zeros(size_t rows, size_t cols) { return Tensor({rows, cols}); }
  static Tensor Filled(size_t rows, size_t cols, double v) {
    return Tensor({rows, cols}, v);
  }
  static Tensor Row(std::vector<double> values);
  static Tensor FromRows(
      std::initializer_list<std::initializer_list<double>> rows);
  static Tensor FromRows(const std::vector<std::vector<double>>& rows);
  static Tensor Identity(size_t n);

  const std::vector<size_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-2 accessors. A rank-1 tensor is treated as a single row.
  size_t rows() const;
  size_t cols() const;

  double& operator()(size_t r, size_t c) { return data_[r * cols() + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols() + c]; }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }
  std::vector<double> RowVector(size_t r) const;

  bool SameShape(const Tensor& other) const { return shape_ == other.shape_; }
  bool AllFinite() const;
  void Fill(double v);

  std::string ShapeString() const;

 private:
  std::vector<size_t> shape_;
  std::vector<double> data_;
};

// c = a * b for rank-2 tensors.
Tensor MatMul(const Tensor& a, const Tensor& b);
// c = a^T * b
Tensor MatMulTransA(const Tensor& a, const Tensor& b);
// c = a * b^T
Tensor MatMulTransB(const Tensor& a, const Tensor& b);
Tensor Transpose(const Tensor& a);

// Numerically stable softmax. Throws std::invalid_argument on non-finite
// input.
std::vector<double> Softmax(std::span<const double> logits);
std::vector<double> LogSoftmax(std::span<const double> logits);

double Dot(std::span<const double> a, std::span<const double> b);
double MaxAbsDiff(const Tensor& a, const Tensor& b);

}  // namespace maca

#endif  // MACA_NUMERICS_TENSOR_H_
