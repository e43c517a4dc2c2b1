#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tucker/experiments.hpp"
#include "tucker/hooi.hpp"
#include "tucker/linalg.hpp"

using namespace tucker;

namespace {

DenseTensor noise(const Dims& dims, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  return gaussian_noise(dims, sigma, rng);
}

double rel_err(const DenseTensor& a, const DenseTensor& b) { return hs_norm(a - b) / hs_norm(b); }

double max_sin(const std::vector<OrthonormalBasis>& a, const std::vector<OrthonormalBasis>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, sin_theta(a[i], b[i], SchattenQ::inf()));
  return m;
}

struct Noisy {
  LowRankInstance inst;
  DenseTensor obs;
};

Noisy noisy_instance(Index p, Index r, double lambda0, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  auto inst = gen_low_rank_instance({p, p, p}, r, lambda0, rng);
  DenseTensor obs = inst.t + gaussian_noise({p, p, p}, sigma, rng);
  return {std::move(inst), std::move(obs)};
}

}  // namespace

TEST(Hooi, ExactRecoveryFromPerturbedInit) {
  Rng rng(21);
  const auto inst = gen_low_rank_instance({10, 10, 10}, 2, 1.0, rng);
  const auto init = perturbed_init(inst.factors, rng);
  const auto groups = SymmetricGroups::asymmetric({10, 10, 10}, {2, 2, 2});
  const auto fit = hooi(inst.t, groups, init::Explicit{init}, {.t_max = 50, .stop_tol = 0.0, .reference = {}});
  EXPECT_LE(rel_err(fit.reconstruction, inst.t), 1e-8);
  EXPECT_LE(max_sin(fit.factors, inst.factors), 1e-8);
  EXPECT_EQ(fit.iterations_run, 50);
}

TEST(Hooi, ZeroSweepsWithTrueFactorsReproducesSignal) {
  Rng rng(22);
  const auto inst = gen_low_rank_instance({8, 7, 6}, 3, 2.0, rng);
  const auto groups = SymmetricGroups::asymmetric({8, 7, 6}, {3, 3, 3});
  const auto fit = hooi(inst.t, groups, init::Explicit{inst.factors}, {.t_max = 0, .stop_tol = 0.0, .reference = {}});
  EXPECT_LE(hs_norm(fit.reconstruction - inst.t), 1e-10 * hs_norm(inst.t));
  EXPECT_EQ(fit.iterations_run, 0);
  EXPECT_EQ(fit.trace.size(), 1u);
}

TEST(Hooi, SupersymmetricGroupSharesOneFactor) {
  Rng rng(23);
  const Index p = 7, r = 2;
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> raw(static_cast<std::size_t>(r * r * r));
  for (auto& x : raw) x = n(rng);
  std::vector<double> sym(raw.size(), 0.0);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j)
      for (Index k = 0; k < r; ++k) {
        const Index perms[6][3] = {{i, j, k}, {i, k, j}, {j, i, k}, {j, k, i}, {k, i, j}, {k, j, i}};
        double s = 0.0;
        for (const auto& q : perms) s += raw[static_cast<std::size_t>(q[0] + r * (q[1] + r * q[2]))];
        sym[static_cast<std::size_t>(i + r * (j + r * k))] = s / 6.0;
      }
  const auto u = random_orthonormal(p, r, rng);
  const DenseTensor core({r, r, r}, sym);
  const DenseTensor t = expand_core(core, {u}, {{0, 1, 2}}) + noise({p, p, p}, 0.01, 24);
  const auto groups = validate_groups({p, p, p}, {{0, 1, 2}}, {r});
  const auto fit = hooi(t, groups, init::THosvd{});
  ASSERT_EQ(fit.factors.size(), 1u);
  EXPECT_EQ(fit.factor_modes[0], (std::vector<Index>{0, 1, 2}));
  const Matrix proj = Matrix::Identity(p, p) - fit.factors[0].matrix() * fit.factors[0].matrix().transpose();
  for (Index k = 0; k < 3; ++k) EXPECT_LE((proj * matricize(fit.reconstruction, k)).norm(), 1e-10);
}

TEST(Hooi, OrderThreeSpecialisationIsBitIdentical) {
  Rng rng(25);
  const DenseTensor t = gaussian_noise({8, 9, 10}, 1.0, rng);
  const auto groups = SymmetricGroups::asymmetric({8, 9, 10}, {2, 3, 4});
  const auto a = hooi(t, groups, init::StHosvd{});
  const auto b = hooi_d3(t, {2, 3, 4}, init::StHosvd{});
  ASSERT_EQ(a.factors.size(), b.factors.size());
  for (std::size_t i = 0; i < a.factors.size(); ++i) EXPECT_EQ(a.factors[i], b.factors[i]);
  EXPECT_EQ(a.reconstruction, b.reconstruction);
}

TEST(Hooi, OneSweepEqualsOneStepHooi) {
  const auto nz = noisy_instance(12, 3, 10.0, 1.0, 26);
  const auto groups = SymmetricGroups::asymmetric({12, 12, 12}, {3, 3, 3});
  const auto a = hooi(nz.obs, groups, init::THosvd{}, {.t_max = 1, .stop_tol = 0.0, .reference = {}});
  const auto b = one_step_hooi(nz.obs, groups, init::THosvd{});
  for (std::size_t i = 0; i < a.factors.size(); ++i) EXPECT_EQ(a.factors[i], b.factors[i]);
  EXPECT_EQ(a.reconstruction, b.reconstruction);
}

TEST(Hooi, OneStepRecoversNoiselessSignal) {
  Rng rng(27);
  const auto inst = gen_low_rank_instance({12, 12, 12}, 3, 1.0, rng);
  const auto init = perturbed_init(inst.factors, rng);
  const auto fit = one_step_hooi(inst.t, SymmetricGroups::asymmetric({12, 12, 12}, {3, 3, 3}), init::Explicit{init});
  EXPECT_LE(rel_err(fit.reconstruction, inst.t), 1e-8);
}

TEST(HooiPartial, NoiselessRecoveryOnLowRankModes) {
  Rng rng(28);
  const Index p1 = 5, p = 9, r = 2;
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> sv(static_cast<std::size_t>(p1 * r * r));
  for (auto& x : sv) x = n(rng);
  const DenseTensor s({p1, r, r}, sv);
  const auto u2 = random_orthonormal(p, r, rng), u3 = random_orthonormal(p, r, rng);
  const DenseTensor t = expand_core(s, {u2, u3}, {{1}, {2}});
  const auto init = perturbed_init({u2, u3}, rng);
  const auto fit = hooi_partial(t, {1, 2}, {r, r}, init::Explicit{init});
  ASSERT_EQ(fit.factors.size(), 2u);
  EXPECT_LE(rel_err(fit.reconstruction, t), 1e-8);
  EXPECT_LE(sin_theta(fit.factors[0], u2, SchattenQ::inf()), 1e-8);
  EXPECT_LE(sin_theta(fit.factors[1], u3, SchattenQ::inf()), 1e-8);
}

TEST(HooiPartial, AllModesEqualsHooi) {
  const auto nz = noisy_instance(10, 2, 8.0, 1.0, 29);
  const auto a = hooi_partial(nz.obs, {0, 1, 2}, {2, 2, 2}, init::THosvd{});
  const auto b = hooi(nz.obs, SymmetricGroups::asymmetric({10, 10, 10}, {2, 2, 2}), init::THosvd{});
  for (std::size_t i = 0; i < a.factors.size(); ++i) EXPECT_EQ(a.factors[i], b.factors[i]);
  EXPECT_EQ(a.reconstruction, b.reconstruction);
}

TEST(HooiPartial, FullRankReturnsInput) {
  const DenseTensor t = noise({4, 5, 6}, 1.0, 30);
  const auto fit = hooi_partial(t, {1, 2}, {5, 6}, init::THosvd{});
  EXPECT_LE(hs_norm(fit.reconstruction - t), 1e-10 * hs_norm(t));
}

TEST(THosvd, NoiselessExactRecovery) {
  Rng rng(31);
  const auto inst = gen_low_rank_instance({9, 10, 11}, 3, 1.0, rng);
  const auto groups = SymmetricGroups::asymmetric({9, 10, 11}, {3, 3, 3});
  EXPECT_LE(rel_err(t_hosvd(inst.t, groups).reconstruction, inst.t), 1e-10);
  EXPECT_LE(rel_err(st_hosvd(inst.t, groups).reconstruction, inst.t), 1e-10);
  EXPECT_LE(rel_err(st_hosvd(inst.t, groups, {2, 0, 1}).reconstruction, inst.t), 1e-10);
}

TEST(THosvd, MatrixCaseIsTruncatedSvd) {
  Rng rng(32);
  const Matrix m = gaussian_matrix(8, 6, rng);
  const DenseTensor t({8, 6}, std::vector<double>(m.data(), m.data() + m.size()));
  const auto fit = t_hosvd(t, SymmetricGroups::asymmetric({8, 6}, {2, 2}));
  const auto s = svd_r(m, 2);
  const Matrix best = s.basis.matrix() * s.singular_values.head(2).asDiagonal() * s.right_vectors.transpose();
  EXPECT_LE((matricize(fit.reconstruction, 0) - best).norm(), 1e-10);
}

TEST(THosvd, EqualsHooiWithOneShotInitAndNoSweeps) {
  const auto nz = noisy_instance(10, 3, 5.0, 1.0, 33);
  const auto groups = SymmetricGroups::asymmetric({10, 10, 10}, {3, 3, 3});
  const auto a = t_hosvd(nz.obs, groups);
  const auto b = hooi(nz.obs, groups, init::THosvd{}, {.t_max = 0, .stop_tol = 0.0, .reference = {}});
  for (std::size_t i = 0; i < a.factors.size(); ++i) EXPECT_EQ(a.factors[i], b.factors[i]);
  EXPECT_EQ(a.reconstruction, b.reconstruction);
}

TEST(StHosvd, FirstFactorMatchesTHosvd) {
  const auto nz = noisy_instance(10, 3, 5.0, 1.0, 34);
  const auto groups = SymmetricGroups::asymmetric({10, 10, 10}, {3, 3, 3});
  EXPECT_EQ(t_hosvd(nz.obs, groups).factors[0], st_hosvd(nz.obs, groups).factors[0]);
}

TEST(StHosvd, CapturesAtLeastAsMuchAsTHosvdUsually) {
  int wins = 0;
  for (int s = 0; s < 100; ++s) {
    const auto nz = noisy_instance(10, 3, 4.0, 1.0, 1000 + static_cast<std::uint64_t>(s));
    const auto groups = SymmetricGroups::asymmetric({10, 10, 10}, {3, 3, 3});
    wins += st_hosvd(nz.obs, groups).captured_norm() >= t_hosvd(nz.obs, groups).captured_norm();
  }
  RecordProperty("sthosvd_win_rate_percent", wins);
  EXPECT_GE(wins, 80);
}

TEST(HooiProperties, CapturedNormNondecreasing) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto nz = noisy_instance(12, 3, 3.0, 1.0, 40 + s);
    const auto fit = hooi(nz.obs, SymmetricGroups::asymmetric({12, 12, 12}, {3, 3, 3}), init::Random{s},
                          {.t_max = 30, .stop_tol = 0.0, .reference = {}});
    for (std::size_t i = 1; i < fit.trace.size(); ++i)
      EXPECT_GE(fit.trace[i].captured_norm, fit.trace[i - 1].captured_norm - 1e-9);
  }
}

TEST(HooiProperties, ProjectionPythagoras) {
  const auto nz = noisy_instance(11, 3, 4.0, 1.0, 50);
  const auto fit = hooi(nz.obs, SymmetricGroups::asymmetric({11, 11, 11}, {3, 2, 4}), init::StHosvd{});
  const double lhs = std::pow(hs_norm(nz.obs), 2);
  const double rhs = std::pow(hs_norm(fit.reconstruction), 2) + std::pow(hs_norm(nz.obs - fit.reconstruction), 2);
  EXPECT_NEAR(lhs, rhs, 1e-9 * lhs);
  EXPECT_NEAR(fit.captured_norm(), hs_norm(fit.reconstruction), 1e-9 * lhs);
}

TEST(HooiProperties, RightRotationOfInitDoesNotChangeSubspaces) {
  const auto nz = noisy_instance(12, 3, 6.0, 1.0, 51);
  Rng rng(52);
  const auto init = perturbed_init(nz.inst.factors, rng);
  std::vector<OrthonormalBasis> rotated;
  for (const auto& b : init) rotated.push_back(OrthonormalBasis(b.matrix() * random_orthonormal(3, 3, rng).matrix()));
  const auto groups = SymmetricGroups::asymmetric({12, 12, 12}, {3, 3, 3});
  const HooiOptions o{.t_max = 20, .stop_tol = 0.0, .reference = {}};
  const auto a = hooi(nz.obs, groups, init::Explicit{init}, o);
  const auto b = hooi(nz.obs, groups, init::Explicit{rotated}, o);
  EXPECT_LE(max_sin(a.factors, b.factors), 1e-9);
}

TEST(HooiProperties, ReconstructionHasRequestedMultilinearRank) {
  const auto nz = noisy_instance(9, 3, 2.0, 1.0, 53);
  const std::vector<Index> ranks{2, 3, 2};
  const auto fit = hooi(nz.obs, SymmetricGroups::asymmetric({9, 9, 9}, ranks), init::THosvd{});
  for (Index k = 0; k < 3; ++k) {
    const Vector s = singular_values(matricize(fit.reconstruction, k));
    for (Index i = ranks[static_cast<std::size_t>(k)]; i < s.size(); ++i) EXPECT_LE(s(i), 1e-9);
  }
}

TEST(HooiProperties, ReferenceOnlyAffectsTrace) {
  const auto nz = noisy_instance(10, 2, 5.0, 1.0, 54);
  const auto groups = SymmetricGroups::asymmetric({10, 10, 10}, {2, 2, 2});
  const auto a = hooi(nz.obs, groups, init::THosvd{});
  const auto b = hooi(nz.obs, groups, init::THosvd{}, {.t_max = 50, .stop_tol = 1e-10, .reference = nz.inst.factors});
  EXPECT_EQ(a.reconstruction, b.reconstruction);
  EXPECT_TRUE(a.trace.back().sin_theta.empty());
  EXPECT_EQ(b.trace.back().sin_theta.size(), 3u);
}

TEST(HooiErrors, Rejected) {
  const DenseTensor t = noise({4, 5, 6}, 1.0, 55);
  EXPECT_ANY_THROW(hooi(t, SymmetricGroups::asymmetric({4, 5, 6}, {5, 1, 1}), init::THosvd{}));
  const auto groups = SymmetricGroups::asymmetric({4, 5, 6}, {2, 2, 2});
  Rng rng(56);
  std::vector<OrthonormalBasis> wrong{random_orthonormal(4, 2, rng), random_orthonormal(5, 2, rng),
                                      random_orthonormal(5, 2, rng)};
  EXPECT_THROW(hooi(t, groups, init::Explicit{wrong}), DimensionError);
  std::vector<double> v(t.values().begin(), t.values().end());
  v[3] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(hooi(DenseTensor({4, 5, 6}, v), groups, init::THosvd{}), InvalidArgument);
  EXPECT_THROW(st_hosvd(t, groups, {0, 0, 1}), InvalidArgument);
}
