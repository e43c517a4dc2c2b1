#pragma once

#include <random>
#include <string>

#include "tucker/tensor.hpp"

namespace tucker {

using Rng = std::mt19937_64;

/// Schatten-q index: a real q >= 1 or infinity.
class SchattenQ {
 public:
  explicit SchattenQ(double q);
  static SchattenQ inf() noexcept { return SchattenQ(); }

  bool is_inf() const noexcept { return inf_; }
  /// q itself; +infinity for the spectral norm.
  double value() const noexcept;
  /// Holder conjugate q* with 1/q + 1/q* = 1.
  SchattenQ dual() const;
  /// (sum s_i^q)^(1/q) of nonnegative values; max for q = inf.
  double norm(const Vector& s) const;

  std::string to_string() const;
  friend bool operator==(const SchattenQ&, const SchattenQ&) = default;

 private:
  SchattenQ() : q_(0.0), inf_(true) {}
  double q_;
  bool inf_;
};

/// p x r matrix with orthonormal columns, checked to 1e-10 on construction.
class OrthonormalBasis {
 public:
  static constexpr double kTolerance = 1e-10;

  explicit OrthonormalBasis(Matrix m);
  /// Skips the orthonormality check; for results of QR/SVD factorizations.
  static OrthonormalBasis trusted(Matrix m);

  const Matrix& matrix() const noexcept { return m_; }
  Index p() const noexcept { return m_.rows(); }
  Index r() const noexcept { return m_.cols(); }

  friend bool operator==(const OrthonormalBasis&, const OrthonormalBasis&) = default;

 private:
  struct Trusted {};
  OrthonormalBasis(Matrix m, Trusted) : m_(std::move(m)) {}
  Matrix m_;
};

struct SvdResult {
  OrthonormalBasis basis;   // leading r left singular vectors
  Vector singular_values;   // all min(rows, cols), descending
  Matrix right_vectors;     // cols x r
};

/// Leading-r SVD. Each left vector has its largest-magnitude entry (lowest
/// index on ties) nonnegative, with the right vector flipped to match.
SvdResult svd_r(const Matrix& m, Index r);

Vector singular_values(const Matrix& m);

/// Schatten-q norm of the best rank-r approximation of m.
double truncated_schatten(const Matrix& m, Index r, SchattenQ q);

/// ||sin Theta(uhat, u)||_q. The sines of the principal angles are taken as
/// the singular values of (I - uhat uhat^T) u, clamped to [0, 1].
double sin_theta(const OrthonormalBasis& uhat, const OrthonormalBasis& u, SchattenQ q);

/// Sines of the principal angles, descending.
Vector principal_sines(const OrthonormalBasis& uhat, const OrthonormalBasis& u);

/// p x (p - r) orthonormal complement. Throws when r == p.
OrthonormalBasis orth_complement(const OrthonormalBasis& u);

/// Same as orth_complement but returns a p x 0 matrix when r == p.
Matrix complement_matrix(const Matrix& u);

/// Haar-distributed basis: QR of an i.i.d. Gaussian matrix with diag(R) >= 0.
OrthonormalBasis random_orthonormal(Index p, Index r, Rng& rng);

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng);

}  // namespace tucker
