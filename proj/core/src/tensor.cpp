#include "tucker/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

namespace tucker {

namespace {

std::string dims_string(const Dims& dims) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << ')';
  return os.str();
}

void check_mode(const DenseTensor& t, Index mode) {
  if (mode < 0 || mode >= t.order())
    throw DimensionError("mode " + std::to_string(mode) + " out of range for order-" +
                         std::to_string(t.order()) + " tensor");
}

void check_dims(const Dims& dims) {
  if (dims.empty()) throw DimensionError("tensor order must be at least 1");
  for (Index p : dims)
    if (p < 1) throw DimensionError("tensor dimensions must be positive, got " + dims_string(dims));
}

// left = prod_{m<k} p_m, right = prod_{m>k} p_m
std::pair<Index, Index> split(const Dims& dims, Index mode) {
  Index left = 1, right = 1;
  for (Index m = 0; m < mode; ++m) left *= dims[static_cast<std::size_t>(m)];
  for (Index m = mode + 1; m < static_cast<Index>(dims.size()); ++m)
    right *= dims[static_cast<std::size_t>(m)];
  return {left, right};
}

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

}  // namespace

Index product(std::span<const Index> values) {
  return std::accumulate(values.begin(), values.end(), Index{1}, std::multiplies<>());
}

DenseTensor::DenseTensor() : dims_{1}, values_(1, 0.0) {}

DenseTensor::DenseTensor(Dims dims) : dims_(std::move(dims)) {
  check_dims(dims_);
  values_.assign(static_cast<std::size_t>(product(dims_)), 0.0);
}

DenseTensor::DenseTensor(Dims dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  check_dims(dims_);
  if (static_cast<Index>(values_.size()) != product(dims_))
    throw DimensionError("value count " + std::to_string(values_.size()) +
                         " does not match dims " + dims_string(dims_));
}

Index DenseTensor::dim(Index mode) const {
  check_mode(*this, mode);
  return dims_[static_cast<std::size_t>(mode)];
}

Index DenseTensor::offset(std::span<const Index> index) const {
  if (static_cast<Index>(index.size()) != order())
    throw DimensionError("index has " + std::to_string(index.size()) + " entries, tensor order is " +
                         std::to_string(order()));
  Index off = 0, stride = 1;
  for (std::size_t l = 0; l < dims_.size(); ++l) {
    if (index[l] < 0 || index[l] >= dims_[l]) throw DimensionError("index out of range");
    off += index[l] * stride;
    stride *= dims_[l];
  }
  return off;
}

std::vector<double> DenseTensor::take_values() && {
  std::vector<double> out = std::move(values_);
  dims_ = {1};
  values_.assign(1, 0.0);
  return out;
}

namespace {

DenseTensor combine(const DenseTensor& a, const DenseTensor& b, double sb, const char* what) {
  if (a.dims() != b.dims())
    throw DimensionError(std::string(what) + ": shapes " + dims_string(a.dims()) + " and " +
                         dims_string(b.dims()) + " differ");
  std::vector<double> v(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += sb * b.values()[i];
  return DenseTensor(a.dims(), std::move(v));
}

}  // namespace

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b) { return combine(a, b, 1.0, "add"); }
DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) { return combine(a, b, -1.0, "subtract"); }

DenseTensor operator*(double s, const DenseTensor& a) {
  std::vector<double> v(a.values().begin(), a.values().end());
  for (double& x : v) x *= s;
  return DenseTensor(a.dims(), std::move(v));
}

// With (left, p_k, right) = split at k, slab b (fixed trailing index block) is a
// left x p_k column-major block X_b. Its transpose is the column block
// [b*left, (b+1)*left) of the unfolding.
Matrix matricize(const DenseTensor& t, Index mode) {
  check_mode(t, mode);
  const Index pk = t.dims()[static_cast<std::size_t>(mode)];
  auto [left, right] = split(t.dims(), mode);
  Matrix m(pk, left * right);
  if (left == 1) {
    m = ConstMap(t.data(), pk, right);
    return m;
  }
  for (Index b = 0; b < right; ++b)
    m.middleCols(b * left, left) = ConstMap(t.data() + b * left * pk, left, pk).transpose();
  return m;
}

DenseTensor tensorize(const Matrix& m, Index mode, Dims dims) {
  check_dims(dims);
  if (mode < 0 || mode >= static_cast<Index>(dims.size()))
    throw DimensionError("mode out of range in tensorize");
  const Index pk = dims[static_cast<std::size_t>(mode)];
  auto [left, right] = split(dims, mode);
  if (m.rows() != pk || m.cols() != left * right)
    throw DimensionError("tensorize: matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(pk) + "x" +
                         std::to_string(left * right) + " for dims " + dims_string(dims));
  std::vector<double> v(static_cast<std::size_t>(pk * left * right));
  if (left == 1) {
    MutMap(v.data(), pk, right) = m;
  } else {
    for (Index b = 0; b < right; ++b)
      MutMap(v.data() + b * left * pk, left, pk) = m.middleCols(b * left, left).transpose();
  }
  return DenseTensor(std::move(dims), std::move(v));
}

DenseTensor mode_product(const DenseTensor& t, Index mode, const Matrix& a) {
  check_mode(t, mode);
  const Index pk = t.dims()[static_cast<std::size_t>(mode)];
  if (a.cols() != pk)
    throw DimensionError("mode_product: matrix has " + std::to_string(a.cols()) +
                         " columns, mode " + std::to_string(mode) + " has dimension " +
                         std::to_string(pk));
  if (!a.allFinite()) throw InvalidArgument("mode_product: non-finite matrix entries");
  auto [left, right] = split(t.dims(), mode);
  const Index q = a.rows();
  Dims out_dims = t.dims();
  out_dims[static_cast<std::size_t>(mode)] = q;
  std::vector<double> v(static_cast<std::size_t>(left * q * right));
  if (left == 1) {
    MutMap(v.data(), q, right).noalias() = a * ConstMap(t.data(), pk, right);
  } else {
    const Matrix at = a.transpose();
    for (Index b = 0; b < right; ++b)
      MutMap(v.data() + b * left * q, left, q).noalias() =
          ConstMap(t.data() + b * left * pk, left, pk) * at;
  }
  return DenseTensor(std::move(out_dims), std::move(v));
}

DenseTensor group_product(const DenseTensor& t, std::span<const Index> modes, const Matrix& a) {
  std::vector<Index> sorted(modes.begin(), modes.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DimensionError("group_product: repeated mode");
  for (Index k : sorted) {
    check_mode(t, k);
    if (t.dims()[static_cast<std::size_t>(k)] != a.cols())
      throw DimensionError("group_product: mode " + std::to_string(k) +
                           " dimension differs from matrix columns");
  }
  if (sorted.empty()) return t;
  DenseTensor out = mode_product(t, sorted.front(), a);
  for (std::size_t i = 1; i < sorted.size(); ++i) out = mode_product(out, sorted[i], a);
  return out;
}

double hs_inner(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims())
    throw DimensionError("hs_inner: shapes " + dims_string(a.dims()) + " and " +
                         dims_string(b.dims()) + " differ");
  return Eigen::Map<const Vector>(a.data(), a.size()).dot(Eigen::Map<const Vector>(b.data(), b.size()));
}

double hs_norm(const DenseTensor& t) { return Eigen::Map<const Vector>(t.data(), t.size()).norm(); }

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

DenseTensor outer(std::span<const Vector> vectors) {
  if (vectors.empty()) throw DimensionError("outer: need at least one vector");
  Dims dims;
  for (const Vector& v : vectors) dims.push_back(v.size());
  check_dims(dims);
  std::vector<double> vals(vectors[0].data(), vectors[0].data() + vectors[0].size());
  for (std::size_t k = 1; k < vectors.size(); ++k) {
    std::vector<double> next;
    next.reserve(vals.size() * static_cast<std::size_t>(vectors[k].size()));
    for (Index i = 0; i < vectors[k].size(); ++i)
      for (double x : vals) next.push_back(x * vectors[k](i));
    vals = std::move(next);
  }
  return DenseTensor(std::move(dims), std::move(vals));
}

SymmetricGroups SymmetricGroups::validate(const Dims& dims, std::vector<std::vector<Index>> partition,
                                          std::vector<Index> ranks) {
  check_dims(dims);
  const Index d = static_cast<Index>(dims.size());
  if (partition.empty()) throw InvalidArgument("symmetric groups: empty partition");
  if (ranks.size() != partition.size())
    throw InvalidArgument("symmetric groups: " + std::to_string(ranks.size()) + " ranks for " +
                          std::to_string(partition.size()) + " groups");
  SymmetricGroups g;
  g.group_of_mode_.assign(static_cast<std::size_t>(d), -1);
  for (std::size_t i = 0; i < partition.size(); ++i) {
    auto& modes = partition[i];
    if (modes.empty()) throw InvalidArgument("symmetric groups: group " + std::to_string(i) + " is empty");
    std::sort(modes.begin(), modes.end());
    for (Index k : modes) {
      if (k < 0 || k >= d) throw DimensionError("symmetric groups: mode " + std::to_string(k) + " out of range");
      if (g.group_of_mode_[static_cast<std::size_t>(k)] != -1)
        throw InvalidArgument("symmetric groups: mode " + std::to_string(k) + " appears in two groups");
      g.group_of_mode_[static_cast<std::size_t>(k)] = static_cast<Index>(i);
    }
    const Index p = dims[static_cast<std::size_t>(modes.front())];
    for (Index k : modes)
      if (dims[static_cast<std::size_t>(k)] != p)
        throw DimensionError("symmetric groups: group " + std::to_string(i) +
                             " mixes dimensions " + std::to_string(p) + " and " +
                             std::to_string(dims[static_cast<std::size_t>(k)]));
    if (ranks[i] < 1 || ranks[i] > p)
      throw InvalidArgument("symmetric groups: rank " + std::to_string(ranks[i]) +
                            " outside [1, " + std::to_string(p) + "] for group " + std::to_string(i));
    g.dims_.push_back(p);
  }
  for (Index k = 0; k < d; ++k)
    if (g.group_of_mode_[static_cast<std::size_t>(k)] == -1)
      throw InvalidArgument("symmetric groups: mode " + std::to_string(k) + " not covered");
  g.groups_ = std::move(partition);
  g.ranks_ = std::move(ranks);
  return g;
}

SymmetricGroups SymmetricGroups::asymmetric(const Dims& dims, std::vector<Index> ranks) {
  std::vector<std::vector<Index>> parts;
  for (Index k = 0; k < static_cast<Index>(dims.size()); ++k) parts.push_back({k});
  return validate(dims, std::move(parts), std::move(ranks));
}

}  // namespace tucker
