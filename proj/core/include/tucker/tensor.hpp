#pragma once

// Dense order-d tensors and the multilinear algebra built on them.
//
// Storage order: the linear offset of entry (i_1, ..., i_d) is
//   i_1 + p_1 * (i_2 + p_2 * (i_3 + ...)),
// i.e. mode 1 varies fastest. This is the order in which the columns of every
// unfolding are enumerated, so matricize() and tensorize() are pure block
// copies. All mode indices in the C++ API are 0-based.

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "tucker/error.hpp"

namespace tucker {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Dims = std::vector<Index>;

Index product(std::span<const Index> values);

class DenseTensor {
 public:
  /// A single zero entry of shape {1}.
  DenseTensor();
  /// Zero tensor of the given shape.
  explicit DenseTensor(Dims dims);
  DenseTensor(Dims dims, std::vector<double> values);

  const Dims& dims() const noexcept { return dims_; }
  Index dim(Index mode) const;
  Index order() const noexcept { return static_cast<Index>(dims_.size()); }
  Index size() const noexcept { return static_cast<Index>(values_.size()); }

  std::span<const double> values() const noexcept { return values_; }
  const double* data() const noexcept { return values_.data(); }
  double operator[](Index offset) const { return values_[static_cast<std::size_t>(offset)]; }

  Index offset(std::span<const Index> index) const;
  double at(std::span<const Index> index) const { return (*this)[offset(index)]; }
  double at(std::initializer_list<Index> index) const {
    return at(std::span<const Index>(index.begin(), index.size()));
  }

  /// Moves the value buffer out, leaving this tensor in the default state.
  std::vector<double> take_values() &&;

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  Dims dims_;
  std::vector<double> values_;
};

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator-(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator*(double s, const DenseTensor& a);

/// Mode-k unfolding: p_k rows, prod_{j != k} p_j columns, lower modes varying
/// fastest along the columns.
Matrix matricize(const DenseTensor& t, Index mode);

/// Inverse of matricize for the given target shape.
DenseTensor tensorize(const Matrix& m, Index mode, Dims dims);

/// t x_k a, where a multiplies the mode-k fibres:
/// matricize(result, k) == a * matricize(t, k). Requires a.cols() == p_k.
DenseTensor mode_product(const DenseTensor& t, Index mode, const Matrix& a);

/// Applies the same matrix along every mode in `modes`, in ascending order.
DenseTensor group_product(const DenseTensor& t, std::span<const Index> modes, const Matrix& a);

double hs_inner(const DenseTensor& a, const DenseTensor& b);
double hs_norm(const DenseTensor& t);

/// Kronecker product with block (i, j) equal to a(i, j) * b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Order-d tensor x with x(i_1..i_d) = prod_k vectors[k](i_k).
DenseTensor outer(std::span<const Vector> vectors);

/// A validated partition of modes into symmetric index groups, with the
/// common dimension and target rank of each group.
class SymmetricGroups {
 public:
  static SymmetricGroups validate(const Dims& dims, std::vector<std::vector<Index>> partition,
                                  std::vector<Index> ranks);
  /// Singleton groups {0}, {1}, ..., {d-1}.
  static SymmetricGroups asymmetric(const Dims& dims, std::vector<Index> ranks);

  Index order() const noexcept { return static_cast<Index>(group_of_mode_.size()); }
  Index count() const noexcept { return static_cast<Index>(groups_.size()); }
  const std::vector<Index>& modes(Index group) const { return groups_.at(static_cast<std::size_t>(group)); }
  const std::vector<std::vector<Index>>& groups() const noexcept { return groups_; }
  Index dim(Index group) const { return dims_.at(static_cast<std::size_t>(group)); }
  Index rank(Index group) const { return ranks_.at(static_cast<std::size_t>(group)); }
  const std::vector<Index>& ranks() const noexcept { return ranks_; }
  /// Smallest mode index in the group; its unfolding is used for the group's SVD.
  Index representative(Index group) const { return modes(group).front(); }
  Index group_of(Index mode) const { return group_of_mode_.at(static_cast<std::size_t>(mode)); }
  bool is_asymmetric() const noexcept { return count() == order(); }

 private:
  SymmetricGroups() = default;

  std::vector<std::vector<Index>> groups_;
  std::vector<Index> dims_;
  std::vector<Index> ranks_;
  std::vector<Index> group_of_mode_;
};

inline SymmetricGroups validate_groups(const Dims& dims, std::vector<std::vector<Index>> partition,
                                       std::vector<Index> ranks) {
  return SymmetricGroups::validate(dims, std::move(partition), std::move(ranks));
}

}  // namespace tucker
