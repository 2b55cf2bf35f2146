#include "blaq/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "blaq/errors.hpp"

namespace blaq {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

void require_matrix(const Tensor& t, const char* who) {
  if (t.rank() != 2) raise(ErrorKind::Shape, std::string(who) + ": expected rank-2 tensor, got " + shape_str(t.shape()));
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  for (auto d : shape_)
    if (d == 0) raise(ErrorKind::Shape, "tensor dimensions must be positive: " + shape_str(shape_));
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_)
    if (d == 0) raise(ErrorKind::Shape, "tensor dimensions must be positive: " + shape_str(shape_));
  if (shape_size(shape_) != data_.size())
    raise(ErrorKind::Shape, "shape " + shape_str(shape_) + " does not match " + std::to_string(data_.size()) + " values");
}

Tensor Tensor::vector(std::vector<double> v) {
  Shape s{v.size()};
  return Tensor(std::move(s), std::move(v));
}

Tensor Tensor::from_external(Shape shape, std::vector<double> data) {
  Tensor t(std::move(shape), std::move(data));
  if (!t.all_finite()) raise(ErrorKind::Numeric, "non-finite value in external tensor data");
  return t;
}

double Tensor::item() const {
  if (data_.size() != 1) raise(ErrorKind::Shape, "item() on tensor of shape " + shape_str(shape_));
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) raise(ErrorKind::Shape, "cannot add " + shape_str(other.shape_) + " to " + shape_str(shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.dim(1) != b.dim(0)) raise(ErrorKind::Shape, "matmul " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
  Tensor out(Shape{a.dim(0), b.dim(1)});
  Map(out.data(), a.dim(0), b.dim(1)).noalias() = MapC(a.data(), a.dim(0), a.dim(1)) * MapC(b.data(), b.dim(0), b.dim(1));
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  if (a.dim(0) != b.dim(0)) raise(ErrorKind::Shape, "matmul_tn " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
  Tensor out(Shape{a.dim(1), b.dim(1)});
  Map(out.data(), a.dim(1), b.dim(1)).noalias() =
      MapC(a.data(), a.dim(0), a.dim(1)).transpose() * MapC(b.data(), b.dim(0), b.dim(1));
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  if (a.dim(1) != b.dim(1)) raise(ErrorKind::Shape, "matmul_nt " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
  Tensor out(Shape{a.dim(0), b.dim(0)});
  Map(out.data(), a.dim(0), b.dim(0)).noalias() =
      MapC(a.data(), a.dim(0), a.dim(1)) * MapC(b.data(), b.dim(0), b.dim(1)).transpose();
  return out;
}

}  // namespace blaq
