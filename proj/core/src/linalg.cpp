#include "tucker/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tucker {

SchattenQ::SchattenQ(double q) : q_(q), inf_(std::isinf(q) && q > 0) {
  if (!inf_ && !(q >= 1.0)) throw InvalidArgument("Schatten index must be >= 1 or inf");
  if (inf_) q_ = 0.0;
}

double SchattenQ::value() const noexcept { return inf_ ? std::numeric_limits<double>::infinity() : q_; }

SchattenQ SchattenQ::dual() const {
  if (inf_) return SchattenQ(1.0);
  if (q_ == 1.0) return inf();
  return SchattenQ(q_ / (q_ - 1.0));
}

double SchattenQ::norm(const Vector& s) const {
  if (s.size() == 0) return 0.0;
  const double top = s.cwiseAbs().maxCoeff();
  if (inf_ || top == 0.0) return top;
  if (q_ == 2.0) return s.norm();
  if (q_ == 1.0) return s.cwiseAbs().sum();
  return top * std::pow((s.cwiseAbs() / top).array().pow(q_).sum(), 1.0 / q_);
}

std::string SchattenQ::to_string() const {
  if (inf_) return "inf";
  std::ostringstream os;
  os << q_;
  return os.str();
}

OrthonormalBasis::OrthonormalBasis(Matrix m) : m_(std::move(m)) {
  if (m_.rows() < 1 || m_.cols() < 1 || m_.cols() > m_.rows())
    throw DimensionError("orthonormal basis must be p x r with 1 <= r <= p");
  if (!m_.allFinite()) throw InvalidArgument("orthonormal basis has non-finite entries");
  const Matrix gram = m_.transpose() * m_ - Matrix::Identity(m_.cols(), m_.cols());
  if (gram.cwiseAbs().maxCoeff() > kTolerance)
    throw InvalidArgument("columns are not orthonormal (max |U^T U - I| = " +
                          std::to_string(gram.cwiseAbs().maxCoeff()) + ")");
}

OrthonormalBasis OrthonormalBasis::trusted(Matrix m) { return OrthonormalBasis(std::move(m), Trusted{}); }

namespace {

void fix_signs(Matrix& u, Matrix& v) {
  for (Index j = 0; j < u.cols(); ++j) {
    Index best = 0;
    double mag = -1.0;
    for (Index i = 0; i < u.rows(); ++i) {
      const double a = std::abs(u(i, j));
      if (a > mag) {
        mag = a;
        best = i;
      }
    }
    if (u(best, j) < 0.0) {
      u.col(j) = -u.col(j);
      if (v.cols() > j) v.col(j) = -v.col(j);
    }
  }
}

struct FullSvd {
  Matrix u;  // rows x n, n = min(rows, cols)
  Vector s;
  Matrix v;  // cols x n
};

// Wide inputs are reduced by a QR of the transpose first; the square SVD of
// the triangular factor is markedly cheaper than a direct wide SVD here.
FullSvd thin_svd(const Matrix& m) {
  FullSvd out;
  if (m.cols() > m.rows()) {
    Eigen::HouseholderQR<Matrix> qr(m.transpose());
    const Index n = m.rows();
    const Matrix rt = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>().toDenseMatrix().transpose();
    Eigen::BDCSVD<Matrix> svd(rt, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.u = svd.matrixU();
    out.s = svd.singularValues();
    const Matrix q = qr.householderQ() * Matrix::Identity(m.cols(), n);
    out.v = q * svd.matrixV();
  } else {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.u = svd.matrixU();
    out.s = svd.singularValues();
    out.v = svd.matrixV();
  }
  return out;
}

}  // namespace

SvdResult svd_r(const Matrix& m, Index r) {
  if (r < 1 || r > std::min(m.rows(), m.cols()))
    throw InvalidArgument("svd_r: rank " + std::to_string(r) + " outside [1, " +
                          std::to_string(std::min(m.rows(), m.cols())) + "]");
  if (!m.allFinite()) throw InvalidArgument("svd_r: non-finite entries");
  FullSvd f = thin_svd(m);
  Matrix u = f.u.leftCols(r);
  Matrix v = f.v.leftCols(r);
  fix_signs(u, v);
  return SvdResult{OrthonormalBasis::trusted(std::move(u)), std::move(f.s), std::move(v)};
}

Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  if (!m.allFinite()) throw InvalidArgument("singular_values: non-finite entries");
  if (m.cols() > m.rows()) {
    Eigen::HouseholderQR<Matrix> qr(m.transpose());
    const Matrix r = qr.matrixQR().topRows(m.rows()).triangularView<Eigen::Upper>();
    return Eigen::BDCSVD<Matrix>(r).singularValues();
  }
  return Eigen::BDCSVD<Matrix>(m).singularValues();
}

double truncated_schatten(const Matrix& m, Index r, SchattenQ q) {
  if (r < 0 || r > std::min(m.rows(), m.cols()))
    throw InvalidArgument("truncated_schatten: rank " + std::to_string(r) + " out of range");
  if (r == 0) return 0.0;
  return q.norm(singular_values(m).head(r));
}

Vector principal_sines(const OrthonormalBasis& uhat, const OrthonormalBasis& u) {
  if (uhat.p() != u.p() || uhat.r() != u.r())
    throw DimensionError("sin_theta: bases must have equal shape");
  const Matrix& a = uhat.matrix();
  const Matrix& b = u.matrix();
  const Matrix resid = b - a * (a.transpose() * b);
  Vector s = singular_values(resid);
  for (Index i = 0; i < s.size(); ++i) s(i) = std::clamp(s(i), 0.0, 1.0);
  return s;
}

double sin_theta(const OrthonormalBasis& uhat, const OrthonormalBasis& u, SchattenQ q) {
  return q.norm(principal_sines(uhat, u));
}

Matrix complement_matrix(const Matrix& u) {
  const Index p = u.rows(), r = u.cols();
  if (r > p) throw DimensionError("complement: more columns than rows");
  if (r == p) return Matrix(p, 0);
  Eigen::HouseholderQR<Matrix> qr(u);
  const Matrix q = qr.householderQ();
  return q.rightCols(p - r);
}

OrthonormalBasis orth_complement(const OrthonormalBasis& u) {
  if (u.r() == u.p()) throw InvalidArgument("orth_complement: basis is already square (r == p)");
  return OrthonormalBasis::trusted(complement_matrix(u.matrix()));
}

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = n01(rng);
  return g;
}

OrthonormalBasis random_orthonormal(Index p, Index r, Rng& rng) {
  if (r < 1 || r > p) throw InvalidArgument("random_orthonormal: need 1 <= r <= p");
  const Matrix g = gaussian_matrix(p, r, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(p, r);
  const Matrix& rr = qr.matrixQR();
  for (Index j = 0; j < r; ++j)
    if (rr(j, j) < 0.0) q.col(j) = -q.col(j);
  return OrthonormalBasis::trusted(std::move(q));
}

}  // namespace tucker
