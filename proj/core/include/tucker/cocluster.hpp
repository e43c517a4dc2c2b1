#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tucker/hooi.hpp"
#include "tucker/linalg.hpp"
#include "tucker/tensor.hpp"

namespace tucker {

/// Assignment of p rows to r clusters (0-based labels).
class MembershipMatrix {
 public:
  MembershipMatrix(std::vector<Index> assignment, Index r);

  Index p() const noexcept { return static_cast<Index>(assign_.size()); }
  Index r() const noexcept { return r_; }
  const std::vector<Index>& assignment() const noexcept { return assign_; }
  Index operator[](Index i) const { return assign_[static_cast<std::size_t>(i)]; }

  /// p x r 0/1 matrix with a single 1 per row.
  Matrix matrix() const;
  std::vector<Index> cluster_sizes() const;

  friend bool operator==(const MembershipMatrix&, const MembershipMatrix&) = default;

 private:
  std::vector<Index> assign_;
  Index r_;
};

/// Row i goes to cluster i mod r, then rows are shuffled.
MembershipMatrix balanced_membership(Index p, Index r, Rng& rng);

/// t[i_1..i_d] = b[g_1(i_1)..g_d(i_d)].
DenseTensor block_expand(const DenseTensor& b, const std::vector<MembershipMatrix>& memberships);

struct BlockTucker {
  DenseTensor core;
  std::vector<OrthonormalBasis> factors;
};

/// Tucker form of block_expand(b, memberships): with D_i the square roots of
/// the cluster sizes and b x_i D_i = s x_i V_i, the factors are Pi_i D_i^{-1} V_i.
BlockTucker block_tucker(const DenseTensor& b, const std::vector<MembershipMatrix>& memberships);

struct KMeansOptions {
  Index restarts = 20;
  Index max_iters = 100;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  MembershipMatrix membership;
  Matrix centers;  // k x cols
  double objective = 0.0;
  std::vector<double> restart_objectives;
};

/// k-means on the rows of u: k-means++ seeding, Lloyd iterations with empty
/// clusters reseeded at the farthest point, then single-point moves until no
/// move lowers the objective. Best of `restarts` runs.
KMeansResult kmeans_rows(const Matrix& u, Index k, const KMeansOptions& options = {});

/// ||Pi X - U||_F^2 for a given assignment and centers.
double kmeans_objective(const Matrix& u, const MembershipMatrix& m, const Matrix& centers);

struct CoclusterResult {
  std::vector<MembershipMatrix> memberships;
  TuckerFit fit;
};

/// HOOI with singleton groups followed by k-means on each fitted factor.
CoclusterResult cocluster(const DenseTensor& t, const std::vector<Index>& ranks, const InitSpec& init,
                          const HooiOptions& options = {}, const KMeansOptions& kmeans = {});

/// k-means on each factor of an existing fit.
std::vector<MembershipMatrix> cluster_factors(const TuckerFit& fit, const KMeansOptions& kmeans = {});

/// (1/p) min_J ||Pi_hat J - Pi||_0 over cluster relabelings J.
double misclass_err(const MembershipMatrix& hat, const MembershipMatrix& truth);

/// min_J max_j (1/p_j) ||(Pi_hat J - Pi) restricted to true cluster j||_0.
/// Exhaustive over relabelings; r > 8 throws Unsupported.
double worst_case_err(const MembershipMatrix& hat, const MembershipMatrix& truth);

/// One 1-based label per line.
void write_membership(std::ostream& out, const MembershipMatrix& m);
MembershipMatrix read_membership(std::istream& in, Index r);

}  // namespace tucker
