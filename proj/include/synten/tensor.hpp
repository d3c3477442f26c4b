#pragma once

// Dense third-order tensors and the multilinear algebra used by the
// decompositions.
//
// Layout: element (i, j, k) of an I1 x I2 x I3 tensor lives at linear offset
// i + I1 * (j + I2 * k), i.e. the mode-1 (temporal) index runs fastest. The
// mode-1 unfolding is therefore a plain column-major reshape.
//
// Unfolding convention (modes are 1-based throughout the public API):
//   mode 1: X(1)[i, j + I2*k]
//   mode 2: X(2)[j, i + I1*k]
//   mode 3: X(3)[k, i + I1*j]
// With this convention X(1) = B1 * G(1) * kron(B3, B2)^T for a Tucker model.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace synten {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Dims3 = std::array<Index, 3>;

class Tensor3 {
 public:
  /// 1x1x1 zero tensor.
  Tensor3();
  /// Zero tensor of the given shape.
  explicit Tensor3(Dims3 dims);
  /// Takes ownership of `data` laid out mode-1 fastest. Rejects non-finite values.
  Tensor3(Dims3 dims, std::vector<double> data);

  const Dims3& dims() const noexcept { return dims_; }
  /// Size along a 1-based mode.
  Index dim(int mode) const;
  Index size() const noexcept { return static_cast<Index>(data_.size()); }

  double operator()(Index i, Index j, Index k) const noexcept {
    return data_[static_cast<std::size_t>(i + dims_[0] * (j + dims_[1] * k))];
  }
  double& operator()(Index i, Index j, Index k) noexcept {
    return data_[static_cast<std::size_t>(i + dims_[0] * (j + dims_[1] * k))];
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  /// Frontal slice k as an I1 x I2 matrix.
  Matrix slice(Index k) const;
  void set_slice(Index k, const Matrix& m);

  double squared_norm() const noexcept;
  double norm() const noexcept;

  bool operator==(const Tensor3& other) const = default;

 private:
  Dims3 dims_;
  std::vector<double> data_;
};

/// Tucker core. `mask` marks entries that ALS must not update.
struct CoreTensor {
  Tensor3 values;
  std::vector<std::uint8_t> mask;

  CoreTensor() : values(), mask(1, 0) {}
  explicit CoreTensor(Tensor3 v, bool fixed = false)
      : values(std::move(v)), mask(static_cast<std::size_t>(values.size()), fixed ? 1 : 0) {}
  CoreTensor(Tensor3 v, std::vector<std::uint8_t> m);

  const Dims3& dims() const noexcept { return values.dims(); }
  bool all_fixed() const noexcept;
  bool any_fixed() const noexcept;

  /// r x r x r tensor with `diag` on the super-diagonal.
  static CoreTensor superdiagonal(const Vector& diag);
};

Matrix unfold(const Tensor3& x, int mode);
Tensor3 fold(const Matrix& m, int mode, const Dims3& dims);

/// x ×_mode u. Requires u.cols() == dims(x)[mode].
Tensor3 mode_n_product(const Tensor3& x, const Matrix& u, int mode);

Matrix kronecker(const Matrix& a, const Matrix& b);
/// Column-wise Kronecker product. Requires a.cols() == b.cols().
Matrix khatri_rao(const Matrix& a, const Matrix& b);

Tensor3 reconstruct_tucker(const CoreTensor& g, const Matrix& b1, const Matrix& b2, const Matrix& b3);
Tensor3 reconstruct_tucker(const Tensor3& g, const Matrix& b1, const Matrix& b2, const Matrix& b3);
Tensor3 reconstruct_parafac(const Vector& lambda, const Matrix& a1, const Matrix& a2, const Matrix& a3);

/// 100 * (1 - ||x - xhat||_F^2 / ||x||_F^2). Negative for fits worse than zero.
double explained_variance(const Tensor3& x, const Tensor3& xhat);
double explained_variance(const Matrix& x, const Matrix& xhat);

}  // namespace synten
