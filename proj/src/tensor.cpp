#include "synten/tensor.hpp"

#include "synten/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace synten {

namespace {

void check_mode(int mode) {
  if (mode < 1 || mode > 3) throw ArgumentError("mode must be 1, 2 or 3, got " + std::to_string(mode));
}

void check_dims(const Dims3& dims) {
  for (Index d : dims)
    if (d < 1) throw ArgumentError("tensor dimensions must be >= 1");
}

std::size_t volume(const Dims3& d) {
  return static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) * static_cast<std::size_t>(d[2]);
}

std::string shape_str(const Dims3& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

}  // namespace

Tensor3::Tensor3() : dims_{1, 1, 1}, data_(1, 0.0) {}

Tensor3::Tensor3(Dims3 dims) : dims_(dims) {
  check_dims(dims_);
  data_.assign(volume(dims_), 0.0);
}

Tensor3::Tensor3(Dims3 dims, std::vector<double> data) : dims_(dims), data_(std::move(data)) {
  check_dims(dims_);
  if (data_.size() != volume(dims_))
    throw ArgumentError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                        shape_str(dims_));
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); }))
    throw ArgumentError("tensor data contains non-finite values");
}

Index Tensor3::dim(int mode) const {
  check_mode(mode);
  return dims_[static_cast<std::size_t>(mode - 1)];
}

Matrix Tensor3::slice(Index k) const {
  if (k < 0 || k >= dims_[2]) throw ArgumentError("slice index out of range");
  return Eigen::Map<const Matrix>(data_.data() + k * dims_[0] * dims_[1], dims_[0], dims_[1]);
}

void Tensor3::set_slice(Index k, const Matrix& m) {
  if (k < 0 || k >= dims_[2]) throw ArgumentError("slice index out of range");
  if (m.rows() != dims_[0] || m.cols() != dims_[1]) throw ArgumentError("slice shape mismatch");
  Eigen::Map<Matrix>(data_.data() + k * dims_[0] * dims_[1], dims_[0], dims_[1]) = m;
}

double Tensor3::squared_norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

double Tensor3::norm() const noexcept { return std::sqrt(squared_norm()); }

CoreTensor::CoreTensor(Tensor3 v, std::vector<std::uint8_t> m) : values(std::move(v)), mask(std::move(m)) {
  if (mask.size() != static_cast<std::size_t>(values.size())) throw ArgumentError("core mask shape mismatch");
}

bool CoreTensor::all_fixed() const noexcept {
  return std::all_of(mask.begin(), mask.end(), [](std::uint8_t f) { return f != 0; });
}

bool CoreTensor::any_fixed() const noexcept {
  return std::any_of(mask.begin(), mask.end(), [](std::uint8_t f) { return f != 0; });
}

CoreTensor CoreTensor::superdiagonal(const Vector& diag) {
  const Index r = diag.size();
  if (r < 1) throw ArgumentError("super-diagonal core needs at least one entry");
  Tensor3 t({r, r, r});
  for (Index i = 0; i < r; ++i) t(i, i, i) = diag(i);
  return CoreTensor(std::move(t));
}

Matrix unfold(const Tensor3& x, int mode) {
  check_mode(mode);
  const auto [n1, n2, n3] = x.dims();
  switch (mode) {
    case 1:
      return Eigen::Map<const Matrix>(x.data().data(), n1, n2 * n3);
    case 2: {
      Matrix m(n2, n1 * n3);
      for (Index k = 0; k < n3; ++k)
        for (Index j = 0; j < n2; ++j)
          for (Index i = 0; i < n1; ++i) m(j, i + n1 * k) = x(i, j, k);
      return m;
    }
    default: {
      // Mode-3 columns run over (i, j) in storage order, so each row is a
      // contiguous frontal slice.
      Matrix m(n3, n1 * n2);
      const double* p = x.data().data();
      for (Index k = 0; k < n3; ++k)
        m.row(k) = Eigen::Map<const Eigen::RowVectorXd>(p + k * n1 * n2, n1 * n2);
      return m;
    }
  }
}

Tensor3 fold(const Matrix& m, int mode, const Dims3& dims) {
  check_mode(mode);
  check_dims(dims);
  const auto [n1, n2, n3] = dims;
  const Index rows = dims[static_cast<std::size_t>(mode - 1)];
  const Index cols = static_cast<Index>(volume(dims)) / rows;
  if (m.rows() != rows || m.cols() != cols)
    throw ArgumentError("cannot fold " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                        " matrix along mode " + std::to_string(mode) + " into " + shape_str(dims));
  Tensor3 x(dims);
  switch (mode) {
    case 1:
      std::copy(m.data(), m.data() + m.size(), x.data().begin());
      break;
    case 2:
      for (Index k = 0; k < n3; ++k)
        for (Index j = 0; j < n2; ++j)
          for (Index i = 0; i < n1; ++i) x(i, j, k) = m(j, i + n1 * k);
      break;
    default:
      for (Index k = 0; k < n3; ++k)
        for (Index c = 0; c < n1 * n2; ++c) x.data()[static_cast<std::size_t>(c + k * n1 * n2)] = m(k, c);
      break;
  }
  return x;
}

Tensor3 mode_n_product(const Tensor3& x, const Matrix& u, int mode) {
  check_mode(mode);
  const Index inner = x.dim(mode);
  if (u.cols() != inner)
    throw ArgumentError("mode-" + std::to_string(mode) + " product: matrix has " + std::to_string(u.cols()) +
                        " columns, tensor mode has size " + std::to_string(inner));
  Dims3 out = x.dims();
  out[static_cast<std::size_t>(mode - 1)] = u.rows();
  if (u.rows() < 1) throw ArgumentError("mode-n product with an empty matrix");
  return fold(u * unfold(x, mode), mode, out);
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ArgumentError("khatri_rao: column counts differ (" + std::to_string(a.cols()) + " vs " +
                        std::to_string(b.cols()) + ")");
  Matrix k(a.rows() * b.rows(), a.cols());
  for (Index c = 0; c < a.cols(); ++c)
    for (Index i = 0; i < a.rows(); ++i) k.col(c).segment(i * b.rows(), b.rows()) = a(i, c) * b.col(c);
  return k;
}

Tensor3 reconstruct_tucker(const Tensor3& g, const Matrix& b1, const Matrix& b2, const Matrix& b3) {
  const auto& d = g.dims();
  if (b1.cols() != d[0] || b2.cols() != d[1] || b3.cols() != d[2])
    throw ArgumentError("reconstruct_tucker: factor column counts do not match core " + shape_str(d));
  return mode_n_product(mode_n_product(mode_n_product(g, b1, 1), b2, 2), b3, 3);
}

Tensor3 reconstruct_tucker(const CoreTensor& g, const Matrix& b1, const Matrix& b2, const Matrix& b3) {
  return reconstruct_tucker(g.values, b1, b2, b3);
}

Tensor3 reconstruct_parafac(const Vector& lambda, const Matrix& a1, const Matrix& a2, const Matrix& a3) {
  const Index r = lambda.size();
  if (r < 1 || a1.cols() != r || a2.cols() != r || a3.cols() != r)
    throw ArgumentError("reconstruct_parafac: factor column counts must equal len(lambda) = " + std::to_string(r));
  // X(1) = A1 diag(lambda) (A3 ⊙ A2)^T
  Matrix m = (a1 * lambda.asDiagonal()) * khatri_rao(a3, a2).transpose();
  return fold(m, 1, {a1.rows(), a2.rows(), a3.rows()});
}

double explained_variance(const Tensor3& x, const Tensor3& xhat) {
  if (x.dims() != xhat.dims()) throw ArgumentError("explained_variance: shape mismatch");
  const double denom = x.squared_norm();
  if (denom == 0.0) throw DegenerateInputError("explained_variance: data tensor has zero norm");
  double resid = 0.0;
  const auto a = x.data();
  const auto b = xhat.data();
  for (std::size_t n = 0; n < a.size(); ++n) resid += (a[n] - b[n]) * (a[n] - b[n]);
  return 100.0 * (1.0 - resid / denom);
}

double explained_variance(const Matrix& x, const Matrix& xhat) {
  if (x.rows() != xhat.rows() || x.cols() != xhat.cols()) throw ArgumentError("explained_variance: shape mismatch");
  const double denom = x.squaredNorm();
  if (denom == 0.0) throw DegenerateInputError("explained_variance: data matrix has zero norm");
  return 100.0 * (1.0 - (x - xhat).squaredNorm() / denom);
}

}  // namespace synten
