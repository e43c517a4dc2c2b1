#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tucker/cocluster.hpp"
#include "tucker/experiments.hpp"

using namespace tucker;

namespace {

DenseTensor gauss(const Dims& dims, std::uint64_t seed, double sigma = 1.0) {
  Rng rng(seed);
  return gaussian_noise(dims, sigma, rng);
}

MembershipMatrix random_membership(Index p, Index r, Rng& rng) {
  std::uniform_int_distribution<Index> u(0, r - 1);
  std::vector<Index> a(static_cast<std::size_t>(p));
  for (auto& x : a) x = u(rng);
  return MembershipMatrix(a, r);
}

}  // namespace

TEST(Membership, Validation) {
  EXPECT_THROW(MembershipMatrix({0, 2}, 2), InvalidArgument);
  EXPECT_THROW(MembershipMatrix({0, -1}, 2), InvalidArgument);
  const MembershipMatrix m({1, 0, 1}, 2);
  EXPECT_EQ(m.cluster_sizes(), (std::vector<Index>{1, 2}));
  EXPECT_EQ(m.matrix().rowwise().sum(), Vector::Ones(3));
}

TEST(Membership, BalancedSizes) {
  Rng rng(101);
  const auto m = balanced_membership(11, 3, rng);
  EXPECT_EQ(m.cluster_sizes(), (std::vector<Index>{4, 4, 3}));
  Rng a(5), b(5);
  EXPECT_EQ(balanced_membership(20, 4, a), balanced_membership(20, 4, b));
}

TEST(Membership, TextRoundTripIsOneBased) {
  const MembershipMatrix m({2, 0, 1, 1}, 3);
  std::stringstream ss;
  write_membership(ss, m);
  EXPECT_EQ(ss.str(), "3\n1\n2\n2\n");
  EXPECT_EQ(read_membership(ss, 3), m);
  std::stringstream bad("1\n4\n");
  EXPECT_THROW(read_membership(bad, 3), IoError);
}

TEST(BlockExpand, SmallCases) {
  const DenseTensor b1({1, 1, 1}, {2.5});
  Rng rng(102);
  const auto one = balanced_membership(4, 1, rng);
  const DenseTensor c = block_expand(b1, {one, one, one});
  for (double v : c.values()) EXPECT_EQ(v, 2.5);

  const DenseTensor b({2, 2}, {1, 3, 2, 4});  // b(0,0)=1, b(1,0)=3, b(0,1)=2, b(1,1)=4
  const MembershipMatrix id({0, 1}, 2);
  EXPECT_EQ(block_expand(b, {id, id}), b);

  const MembershipMatrix g({0, 1, 0, 1}, 2);
  const DenseTensor t = block_expand(b, {g, g});
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) EXPECT_EQ(t.at({i, j}), b.at({g[i], g[j]}));
}

TEST(BlockTucker, ReconstructionIdentity) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(110 + s);
    const Dims dims{9, 8, 10};
    const std::vector<Index> r{3, 2, 4};
    std::vector<MembershipMatrix> ms;
    for (std::size_t i = 0; i < 3; ++i) ms.push_back(balanced_membership(dims[i], r[i], rng));
    const DenseTensor b = gaussian_noise({3, 2, 4}, 1.0, rng);
    const auto bt = block_tucker(b, ms);
    std::vector<std::vector<Index>> modes{{0}, {1}, {2}};
    const DenseTensor t = block_expand(b, ms);
    EXPECT_LE(hs_norm(expand_core(bt.core, bt.factors, modes) - t), 1e-10 * hs_norm(t));
    for (const auto& f : bt.factors)
      EXPECT_LE((f.matrix().transpose() * f.matrix() - Matrix::Identity(f.r(), f.r())).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(BlockTucker, IdentityMembershipsGivePlainTucker) {
  const DenseTensor b = gauss({3, 3, 3}, 120);
  const MembershipMatrix id({0, 1, 2}, 3);
  const auto bt = block_tucker(b, {id, id, id});
  EXPECT_LE(hs_norm(expand_core(bt.core, bt.factors, {{0}, {1}, {2}}) - b), 1e-12 * hs_norm(b));
}

TEST(BlockTucker, MatrixCase) {
  Rng rng(121);
  const auto m1 = balanced_membership(12, 3, rng), m2 = balanced_membership(7, 2, rng);
  const DenseTensor b = gaussian_noise({3, 2}, 1.0, rng);
  const auto bt = block_tucker(b, {m1, m2});
  const DenseTensor t = block_expand(b, {m1, m2});
  EXPECT_LE(hs_norm(expand_core(bt.core, bt.factors, {{0}, {1}}) - t), 1e-12 * hs_norm(t));
}

TEST(BlockTucker, EmptyClusterRejected) {
  const MembershipMatrix m({0, 0, 0}, 2);
  EXPECT_THROW(block_tucker(gauss({2, 2}, 1), {m, m}), InvalidArgument);
}

TEST(KMeans, DistinctPointsAndKEqualsP) {
  Matrix u(6, 2);
  u << 0, 0, 5, 5, 0, 0, 5, 5, -3, 1, -3, 1;
  const auto res = kmeans_rows(u, 3, {.restarts = 5, .max_iters = 100, .seed = 1});
  EXPECT_NEAR(res.objective, 0.0, 1e-15);
  EXPECT_EQ(misclass_err(res.membership, MembershipMatrix({0, 1, 0, 1, 2, 2}, 3)), 0.0);
  Rng rng(130);
  const Matrix x = gaussian_matrix(5, 3, rng);
  EXPECT_NEAR(kmeans_rows(x, 5).objective, 0.0, 1e-15);
  EXPECT_THROW(kmeans_rows(x, 6), InvalidArgument);
}

TEST(KMeans, OneDimensionalExhaustiveCase) {
  Matrix u(8, 1);
  u << 0, 0, 0, 0, 1, 1, 1, 1.2;
  const auto res = kmeans_rows(u, 2);
  EXPECT_NEAR(res.objective, oracle::kmeans_exhaustive(u, 2), 1e-9);
}

TEST(KMeans, ObjectiveConsistencyAndBestRestart) {
  Rng rng(131);
  const Matrix x = gaussian_matrix(30, 3, rng);
  const auto res = kmeans_rows(x, 4, {.restarts = 7, .max_iters = 100, .seed = 9});
  EXPECT_NEAR(res.objective, kmeans_objective(x, res.membership, res.centers), 1e-12);
  ASSERT_EQ(res.restart_objectives.size(), 7u);
  for (double o : res.restart_objectives) EXPECT_LE(res.objective, o + 1e-12);
  const auto again = kmeans_rows(x, 4, {.restarts = 7, .max_iters = 100, .seed = 9});
  EXPECT_EQ(res.membership, again.membership);
  EXPECT_EQ(res.objective, again.objective);
}

TEST(KMeans, MatchesExhaustiveOracleOnSmallInputs) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(140 + s);
    const Matrix x = gaussian_matrix(8, 2, rng);
    const int k = 2 + static_cast<int>(s % 2);
    EXPECT_NEAR(kmeans_rows(x, k, {.restarts = 20, .max_iters = 100, .seed = s}).objective,
                oracle::kmeans_exhaustive(x, k), 1e-9)
        << "seed " << s;
  }
}

TEST(Misclass, IdentityAndRelabeling) {
  const MembershipMatrix m({0, 1, 2, 0, 1, 2}, 3);
  EXPECT_EQ(misclass_err(m, m), 0.0);
  EXPECT_EQ(worst_case_err(m, m), 0.0);
  const MembershipMatrix relabeled({2, 0, 1, 2, 0, 1}, 3);
  EXPECT_EQ(misclass_err(relabeled, m), 0.0);
  EXPECT_EQ(worst_case_err(relabeled, m), 0.0);
}

TEST(Misclass, OneFlippedRow) {
  std::vector<Index> t{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  auto h = t;
  h[4] = 1;
  const MembershipMatrix mt(t, 2), mh(h, 2);
  EXPECT_DOUBLE_EQ(misclass_err(mh, mt), 0.2);
  EXPECT_DOUBLE_EQ(oracle::misclass_brute(h, t, 2), 0.2);
  EXPECT_DOUBLE_EQ(worst_case_err(mh, mt), 2.0 / 5.0);
}

TEST(Misclass, MatchesBruteForce) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    Rng rng(150 + s);
    const Index r = 1 + static_cast<Index>(s % 5), p = 12;
    const auto a = random_membership(p, r, rng), b = random_membership(p, r, rng);
    EXPECT_DOUBLE_EQ(misclass_err(a, b), oracle::misclass_brute(a.assignment(), b.assignment(), r));
  }
}

TEST(Misclass, LargeRankUsesAssignment) {
  Rng rng(160);
  const auto a = balanced_membership(40, 10, rng);
  std::vector<Index> perm(10);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Index> b(40);
  for (Index i = 0; i < 40; ++i) b[static_cast<std::size_t>(i)] = perm[static_cast<std::size_t>(a[i])];
  b[0] = (b[0] + 1) % 10;
  EXPECT_DOUBLE_EQ(misclass_err(MembershipMatrix(b, 10), a), 2.0 / 40.0);
  EXPECT_THROW(worst_case_err(MembershipMatrix(b, 10), a), Unsupported);
}

TEST(Misclass, EmptyTrueClusterRejectedForWorstCase) {
  EXPECT_THROW(worst_case_err(MembershipMatrix({0, 1, 0}, 3), MembershipMatrix({0, 0, 1}, 3)), InvalidArgument);
}

TEST(MisclassProperties, OrderingAndInvariances) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(170 + s);
    const Index r = 1 + static_cast<Index>(s % 4), p = 10;
    const auto truth = balanced_membership(p, r, rng);
    const auto hat = random_membership(p, r, rng);
    const double e = misclass_err(hat, truth), w = worst_case_err(hat, truth);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, w + 1e-15);
    EXPECT_LE(w, 2.0);
    // Simultaneous row permutation.
    std::vector<Index> rows(static_cast<std::size_t>(p));
    std::iota(rows.begin(), rows.end(), Index{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    std::vector<Index> ph(rows.size()), pt(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      ph[i] = hat[rows[i]];
      pt[i] = truth[rows[i]];
    }
    EXPECT_DOUBLE_EQ(misclass_err(MembershipMatrix(ph, r), MembershipMatrix(pt, r)), e);
    EXPECT_DOUBLE_EQ(worst_case_err(MembershipMatrix(ph, r), MembershipMatrix(pt, r)), w);
    // Relabeling the estimate.
    std::vector<Index> lab(static_cast<std::size_t>(r));
    std::iota(lab.begin(), lab.end(), Index{0});
    std::shuffle(lab.begin(), lab.end(), rng);
    std::vector<Index> rh(hat.assignment());
    for (auto& x : rh) x = lab[static_cast<std::size_t>(x)];
    EXPECT_DOUBLE_EQ(misclass_err(MembershipMatrix(rh, r), truth), e);
    EXPECT_DOUBLE_EQ(worst_case_err(MembershipMatrix(rh, r), truth), w);
  }
}

TEST(Cocluster, NoiselessPipelineRecoversClusters) {
  Rng rng(180);
  const Dims dims{24, 24, 24};
  const auto bm = gen_block_model(dims, 3, 10.0, rng);
  const auto res = cocluster(bm.t, {3, 3, 3}, init::StHosvd{});
  ASSERT_EQ(res.memberships.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(misclass_err(res.memberships[k], bm.memberships[k]), 0.0);
}

TEST(Cocluster, PureNoiseStaysInRange) {
  Rng rng(181);
  const auto bm = gen_block_model({15, 15, 15}, 3, 1e-6, rng);
  const DenseTensor obs = bm.t + gaussian_noise({15, 15, 15}, 100.0, rng);
  const auto res = cocluster(obs, {3, 3, 3}, init::THosvd{});
  for (std::size_t k = 0; k < 3; ++k) {
    const double e = misclass_err(res.memberships[k], bm.memberships[k]);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 2.0);
  }
}

TEST(Cocluster, BlockModelCoreScaling) {
  Rng rng(182);
  const auto bm = gen_block_model({10, 12, 14}, 2, 3.0, rng);
  double smin = 1e300;
  for (Index k = 0; k < 3; ++k) smin = std::min(smin, singular_values(matricize(bm.core, k))(1));
  EXPECT_NEAR(smin, 3.0, 1e-12);
  EXPECT_EQ(bm.t, block_expand(bm.core, bm.memberships));
}
