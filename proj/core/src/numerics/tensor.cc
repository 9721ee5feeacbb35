#include "maca/numerics/tensor.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace maca {

namespace {

size_t Product(const std::vector<size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), size_t{1},
                         std::multiplies<>());
}

void RequireRank2(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw std::invalid_argument(std::string(what) + ": expected rank-2, got " +
                                t.ShapeString());
  }
}

}  // namespace

Tensor::Tensor(std::vector<size_t> shape, double fill)
    : shape_(std::move(shape)), data_(Product(shape_), fill) {}

Tensor::Tensor(std::vector<size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (Product(shape_) != data_.size()) {
    throw std::invalid_argument("Tensor: shape " + ShapeString() +
                                " does not match data length " +
                                std::to_string(data_.size()));
  }
}

Tensor Tensor::Row(std::vector<double> values) {
  const size_t n = values.size();
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::FromRows(
    std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> v;
  for (const auto& r : rows) v.emplace_back(r);
  return FromRows(v);
}

Tensor Tensor::FromRows(const std::vector<std::vector<double>>& rows) {
  const size_t r = rows.size();
  const size_t c = r == 0 ? 0 : rows.front().size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("FromRows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::Identity(size_t n) {
  Tensor t({n, n});
  for (size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  if (shape_.size() != 2) {
    throw std::invalid_argument("rows(): tensor has shape " + ShapeString());
  }
  return shape_[0];
}

size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  if (shape_.size() != 2) {
    throw std::invalid_argument("cols(): tensor has shape " + ShapeString());
  }
  return shape_[1];
}

std::vector<double> Tensor::RowVector(size_t r) const {
  auto s = row(r);
  return {s.begin(), s.end()};
}

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void Tensor::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Tensor::ShapeString() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

Tensor MatMul(const Tensor& a, const Tensor& b) {
  RequireRank2(a, "MatMul");
  RequireRank2(b, "MatMul");
  const size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) {
    throw std::invalid_argument("MatMul: " + a.ShapeString() + " * " +
                                b.ShapeString());
  }
  Tensor c({n, m});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (size_t i = 0; i < n; ++i) {
    double* crow = pc + i * m;
    for (size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * m;
      for (size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor MatMulTransA(const Tensor& a, const Tensor& b) {
  RequireRank2(a, "MatMulTransA");
  RequireRank2(b, "MatMulTransA");
  const size_t k = a.rows(), n = a.cols(), m = b.cols();
  if (b.rows() != k) {
    throw std::invalid_argument("MatMulTransA: " + a.ShapeString() + "^T * " +
                                b.ShapeString());
  }
  Tensor c({n, m});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (size_t p = 0; p < k; ++p) {
    const double* arow = pa + p * n;
    const double* brow = pb + p * m;
    for (size_t i = 0; i < n; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = pc + i * m;
      for (size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor MatMulTransB(const Tensor& a, const Tensor& b) {
  RequireRank2(a, "MatMulTransB");
  RequireRank2(b, "MatMulTransB");
  const size_t n = a.rows(), k = a.cols(), m = b.rows();
  if (b.cols() != k) {
    throw std::invalid_argument("MatMulTransB: " + a.ShapeString() + " * " +
                                b.ShapeString() + "^T");
  }
  Tensor c({n, m});
  for (size_t i = 0; i < n; ++i) {
    auto arow = a.row(i);
    for (size_t j = 0; j < m; ++j) c(i, j) = Dot(arow, b.row(j));
  }
  return c;
}

Tensor Transpose(const Tensor& a) {
  RequireRank2(a, "Transpose");
  Tensor t({a.cols(), a.rows()});
  for (size_t i = 0; i < a.rows(); ++i) {
    for (size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

std::vector<double> Softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("Softmax: empty input");
  for (double v : logits) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("Softmax: non-finite logit");
    }
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> LogSoftmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("LogSoftmax: empty input");
  for (double v : logits) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("LogSoftmax: non-finite logit");
    }
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("MaxAbsDiff: size mismatch");
  }
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace maca
