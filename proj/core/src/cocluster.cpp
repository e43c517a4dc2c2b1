#include "tucker/cocluster.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include <Eigen/SVD>

#include "tucker/hungarian.hpp"
#include "tucker/seeding.hpp"

namespace tucker {

MembershipMatrix::MembershipMatrix(std::vector<Index> assignment, Index r) : assign_(std::move(assignment)), r_(r) {
  if (r_ < 1) throw InvalidArgument("membership: cluster count must be >= 1");
  if (assign_.empty()) throw InvalidArgument("membership: no rows");
  for (Index a : assign_)
    if (a < 0 || a >= r_) throw InvalidArgument("membership: label " + std::to_string(a) + " outside [0, r)");
}

Matrix MembershipMatrix::matrix() const {
  Matrix m = Matrix::Zero(p(), r_);
  for (Index i = 0; i < p(); ++i) m(i, assign_[static_cast<std::size_t>(i)]) = 1.0;
  return m;
}

std::vector<Index> MembershipMatrix::cluster_sizes() const {
  std::vector<Index> n(static_cast<std::size_t>(r_), 0);
  for (Index a : assign_) ++n[static_cast<std::size_t>(a)];
  return n;
}

MembershipMatrix balanced_membership(Index p, Index r, Rng& rng) {
  if (r < 1 || r > p) throw InvalidArgument("balanced_membership: need 1 <= r <= p");
  std::vector<Index> a(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) a[static_cast<std::size_t>(i)] = i % r;
  // Fisher-Yates with an explicit draw so the result is library-independent.
  for (Index i = p - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]);
  }
  return MembershipMatrix(std::move(a), r);
}

namespace {

void check_memberships(const DenseTensor& b, const std::vector<MembershipMatrix>& m) {
  if (static_cast<Index>(m.size()) != b.order()) throw DimensionError("one membership per mode expected");
  for (Index k = 0; k < b.order(); ++k)
    if (m[static_cast<std::size_t>(k)].r() != b.dims()[static_cast<std::size_t>(k)])
      throw DimensionError("membership cluster count does not match core mode " + std::to_string(k));
}

}  // namespace

DenseTensor block_expand(const DenseTensor& b, const std::vector<MembershipMatrix>& memberships) {
  check_memberships(b, memberships);
  DenseTensor t = b;
  for (Index k = 0; k < b.order(); ++k) t = mode_product(t, k, memberships[static_cast<std::size_t>(k)].matrix());
  return t;
}

BlockTucker block_tucker(const DenseTensor& b, const std::vector<MembershipMatrix>& memberships) {
  check_memberships(b, memberships);
  std::vector<Vector> root(memberships.size());
  DenseTensor scaled = b;
  for (Index k = 0; k < b.order(); ++k) {
    const auto sizes = memberships[static_cast<std::size_t>(k)].cluster_sizes();
    Vector s(static_cast<Index>(sizes.size()));
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      if (sizes[j] == 0)
        throw InvalidArgument("block_tucker: cluster " + std::to_string(j) + " of mode " + std::to_string(k) + " is empty");
      s(static_cast<Index>(j)) = std::sqrt(static_cast<double>(sizes[j]));
    }
    scaled = mode_product(scaled, k, Matrix(s.asDiagonal()));
    root[static_cast<std::size_t>(k)] = std::move(s);
  }
  BlockTucker out;
  std::vector<Matrix> v;
  for (Index k = 0; k < b.order(); ++k) {
    const Index r = b.dims()[static_cast<std::size_t>(k)];
    const Matrix m = matricize(scaled, k);
    // Square orthogonal V_k: full left singular basis of the unfolding.
    Matrix vk = r <= m.cols() ? svd_r(m, r).basis.matrix() : Matrix(Eigen::BDCSVD<Matrix>(m, Eigen::ComputeFullU).matrixU());
    v.push_back(vk);
  }
  DenseTensor core = scaled;
  for (Index k = 0; k < b.order(); ++k) core = mode_product(core, k, v[static_cast<std::size_t>(k)].transpose());
  out.core = std::move(core);
  for (Index k = 0; k < b.order(); ++k) {
    const Matrix pi = memberships[static_cast<std::size_t>(k)].matrix();
    const Vector inv = root[static_cast<std::size_t>(k)].cwiseInverse();
    out.factors.push_back(OrthonormalBasis(pi * inv.asDiagonal() * v[static_cast<std::size_t>(k)]));
  }
  return out;
}

double kmeans_objective(const Matrix& u, const MembershipMatrix& m, const Matrix& centers) {
  if (m.p() != u.rows() || centers.rows() != m.r() || centers.cols() != u.cols())
    throw DimensionError("kmeans_objective: shape mismatch");
  double obj = 0.0;
  for (Index i = 0; i < u.rows(); ++i) obj += (u.row(i) - centers.row(m[i])).squaredNorm();
  return obj;
}

namespace {

struct Run {
  std::vector<Index> assign;
  Matrix centers;
  double objective;
};

void recompute_centers(const Matrix& u, const std::vector<Index>& a, Index k, Matrix& c, std::vector<Index>& n) {
  c.setZero(k, u.cols());
  n.assign(static_cast<std::size_t>(k), 0);
  for (Index i = 0; i < u.rows(); ++i) {
    c.row(a[static_cast<std::size_t>(i)]) += u.row(i);
    ++n[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])];
  }
  for (Index j = 0; j < k; ++j)
    if (n[static_cast<std::size_t>(j)] > 0) c.row(j) /= static_cast<double>(n[static_cast<std::size_t>(j)]);
}

Matrix plus_plus_seed(const Matrix& u, Index k, Rng& rng) {
  const Index p = u.rows();
  Matrix c(k, u.cols());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  c.row(0) = u.row(static_cast<Index>(rng() % static_cast<std::uint64_t>(p)));
  Vector d2(p);
  for (Index i = 0; i < p; ++i) d2(i) = (u.row(i) - c.row(0)).squaredNorm();
  for (Index j = 1; j < k; ++j) {
    const double total = d2.sum();
    Index pick = 0;
    if (total > 0.0) {
      double x = unif(rng) * total;
      pick = p - 1;
      for (Index i = 0; i < p; ++i) {
        x -= d2(i);
        if (x < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng() % static_cast<std::uint64_t>(p));
    }
    c.row(j) = u.row(pick);
    for (Index i = 0; i < p; ++i) d2(i) = std::min(d2(i), (u.row(i) - c.row(j)).squaredNorm());
  }
  return c;
}

Run lloyd(const Matrix& u, Index k, Index max_iters, Rng& rng) {
  const Index p = u.rows();
  Matrix c = plus_plus_seed(u, k, rng);
  std::vector<Index> a(static_cast<std::size_t>(p), -1), n;
  for (Index it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Index i = 0; i < p; ++i) {
      Index best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < k; ++j) {
        const double dist = (u.row(i) - c.row(j)).squaredNorm();
        if (dist < bd) {
          bd = dist;
          best = j;
        }
      }
      if (a[static_cast<std::size_t>(i)] != best) {
        a[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    recompute_centers(u, a, k, c, n);
    // Empty clusters take the point farthest from its current center.
    for (Index j = 0; j < k; ++j) {
      if (n[static_cast<std::size_t>(j)] > 0) continue;
      Index far = -1;
      double fd = -1.0;
      for (Index i = 0; i < p; ++i) {
        if (n[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])] < 2) continue;
        const double dist = (u.row(i) - c.row(a[static_cast<std::size_t>(i)])).squaredNorm();
        if (dist > fd) {
          fd = dist;
          far = i;
        }
      }
      if (far < 0) break;
      a[static_cast<std::size_t>(far)] = j;
      recompute_centers(u, a, k, c, n);
      changed = true;
    }
    if (!changed) break;
  }
  // Single-point moves: relocating x from A to B changes the objective by
  // n_B/(n_B+1)|x-c_B|^2 - n_A/(n_A-1)|x-c_A|^2.
  bool moved = true;
  for (Index sweep = 0; moved && sweep < 100 * max_iters; ++sweep) {
    moved = false;
    for (Index i = 0; i < p; ++i) {
      const Index from = a[static_cast<std::size_t>(i)];
      const double na = static_cast<double>(n[static_cast<std::size_t>(from)]);
      if (na < 2) continue;
      const double loss = na / (na - 1.0) * (u.row(i) - c.row(from)).squaredNorm();
      Index to = -1;
      double gain = 0.0;
      for (Index j = 0; j < k; ++j) {
        if (j == from) continue;
        const double nb = static_cast<double>(n[static_cast<std::size_t>(j)]);
        const double delta = nb / (nb + 1.0) * (u.row(i) - c.row(j)).squaredNorm() - loss;
        if (delta < gain - 1e-14 * (1.0 + loss)) {
          gain = delta;
          to = j;
        }
      }
      if (to < 0) continue;
      const double nb = static_cast<double>(n[static_cast<std::size_t>(to)]);
      c.row(from) = (c.row(from) * na - u.row(i)) / (na - 1.0);
      c.row(to) = (c.row(to) * nb + u.row(i)) / (nb + 1.0);
      --n[static_cast<std::size_t>(from)];
      ++n[static_cast<std::size_t>(to)];
      a[static_cast<std::size_t>(i)] = to;
      moved = true;
    }
  }
  recompute_centers(u, a, k, c, n);
  Run r{std::move(a), std::move(c), 0.0};
  for (Index i = 0; i < p; ++i) r.objective += (u.row(i) - r.centers.row(r.assign[static_cast<std::size_t>(i)])).squaredNorm();
  return r;
}

}  // namespace

KMeansResult kmeans_rows(const Matrix& u, Index k, const KMeansOptions& options) {
  if (k < 1 || k > u.rows()) throw InvalidArgument("kmeans_rows: need 1 <= k <= p");
  if (options.restarts < 1 || options.max_iters < 1) throw InvalidArgument("kmeans_rows: restarts and max_iters must be >= 1");
  if (!u.allFinite()) throw InvalidArgument("kmeans_rows: non-finite input");
  std::vector<double> objs;
  Run best{{}, Matrix(), std::numeric_limits<double>::infinity()};
  for (Index s = 0; s < options.restarts; ++s) {
    Rng rng(derive_seed({options.seed, static_cast<std::uint64_t>(s)}));
    Run r = lloyd(u, k, options.max_iters, rng);
    objs.push_back(r.objective);
    if (r.objective < best.objective) best = std::move(r);
  }
  MembershipMatrix m(std::move(best.assign), k);
  const double obj = kmeans_objective(u, m, best.centers);
  return KMeansResult{std::move(m), std::move(best.centers), obj, std::move(objs)};
}

std::vector<MembershipMatrix> cluster_factors(const TuckerFit& fit, const KMeansOptions& kmeans) {
  std::vector<MembershipMatrix> out;
  for (std::size_t i = 0; i < fit.factors.size(); ++i) {
    KMeansOptions o = kmeans;
    o.seed = derive_seed({kmeans.seed, static_cast<std::uint64_t>(i)});
    out.push_back(kmeans_rows(fit.factors[i].matrix(), fit.factors[i].r(), o).membership);
  }
  return out;
}

CoclusterResult cocluster(const DenseTensor& t, const std::vector<Index>& ranks, const InitSpec& init,
                          const HooiOptions& options, const KMeansOptions& kmeans) {
  TuckerFit fit = hooi(t, SymmetricGroups::asymmetric(t.dims(), ranks), init, options);
  auto m = cluster_factors(fit, kmeans);
  return CoclusterResult{std::move(m), std::move(fit)};
}

namespace {

Matrix confusion(const MembershipMatrix& hat, const MembershipMatrix& truth) {
  if (hat.p() != truth.p() || hat.r() != truth.r()) throw DimensionError("membership shapes differ");
  Matrix c = Matrix::Zero(hat.r(), hat.r());
  for (Index i = 0; i < hat.p(); ++i) c(hat[i], truth[i]) += 1.0;
  return c;
}

constexpr Index kExhaustiveMax = 8;

}  // namespace

double misclass_err(const MembershipMatrix& hat, const MembershipMatrix& truth) {
  const Matrix c = confusion(hat, truth);
  const Index r = hat.r();
  double matched = 0.0;
  if (r <= kExhaustiveMax) {
    std::vector<Index> perm(static_cast<std::size_t>(r));
    std::iota(perm.begin(), perm.end(), Index{0});
    do {
      double s = 0.0;
      for (Index a = 0; a < r; ++a) s += c(a, perm[static_cast<std::size_t>(a)]);
      matched = std::max(matched, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    const auto assign = hungarian_min_cost(-c);
    for (Index a = 0; a < r; ++a) matched += c(a, assign[static_cast<std::size_t>(a)]);
  }
  return 2.0 * (static_cast<double>(hat.p()) - matched) / static_cast<double>(hat.p());
}

double worst_case_err(const MembershipMatrix& hat, const MembershipMatrix& truth) {
  const Matrix c = confusion(hat, truth);
  const Index r = hat.r();
  if (r > kExhaustiveMax) throw Unsupported("worst_case_err: exact search supports at most 8 clusters");
  const auto sizes = truth.cluster_sizes();
  for (std::size_t j = 0; j < sizes.size(); ++j)
    if (sizes[j] == 0) throw InvalidArgument("worst_case_err: true cluster " + std::to_string(j) + " is empty");
  std::vector<Index> perm(static_cast<std::size_t>(r));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (Index a = 0; a < r; ++a) {
      const Index j = perm[static_cast<std::size_t>(a)];
      const double pj = static_cast<double>(sizes[static_cast<std::size_t>(j)]);
      worst = std::max(worst, 2.0 * (pj - c(a, j)) / pj);
    }
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

void write_membership(std::ostream& out, const MembershipMatrix& m) {
  for (Index a : m.assignment()) out << (a + 1) << '\n';
  if (!out) throw IoError("failed writing membership");
}

MembershipMatrix read_membership(std::istream& in, Index r) {
  std::vector<Index> a;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(line, &used);
    } catch (const std::exception&) {
      throw IoError("membership line is not an integer: " + line);
    }
    if (used != line.size() || v < 1 || v > r) throw IoError("bad membership line: " + line);
    a.push_back(static_cast<Index>(v - 1));
  }
  return MembershipMatrix(std::move(a), r);
}

}  // namespace tucker
