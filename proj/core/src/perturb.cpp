#include "tucker/perturb.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tucker/seeding.hpp"

namespace tucker {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool contains(const std::vector<Index>& v, Index x) { return std::find(v.begin(), v.end(), x) != v.end(); }

void check_factors(const DenseTensor& z, const std::vector<OrthonormalBasis>& f, const SymmetricGroups& g) {
  if (g.order() != z.order()) throw DimensionError("groups do not match tensor order");
  if (static_cast<Index>(f.size()) != g.count()) throw DimensionError("one factor per group expected");
  for (Index i = 0; i < g.count(); ++i) {
    const auto& b = f[static_cast<std::size_t>(i)];
    if (b.p() != g.dim(i) || b.r() != g.rank(i))
      throw DimensionError("factor " + std::to_string(i) + " does not match its group's dimension and rank");
    for (Index k : g.modes(i))
      if (z.dims()[static_cast<std::size_t>(k)] != g.dim(i)) throw DimensionError("noise tensor shape mismatch");
  }
}

// Schatten-q norm of the leading r singular values (all of them if fewer).
double top_schatten(const Vector& s, Index r, SchattenQ q) {
  return q.norm(s.head(std::min<Index>(r, s.size())));
}

// Every subset of `pool` of the given size, in lexicographic order.
std::vector<std::vector<Index>> subsets(const std::vector<Index>& pool, Index size) {
  std::vector<std::vector<Index>> out;
  const Index n = static_cast<Index>(pool.size());
  if (size < 0 || size > n) return out;
  std::vector<Index> idx(static_cast<std::size_t>(size));
  std::iota(idx.begin(), idx.end(), Index{0});
  while (true) {
    std::vector<Index> s;
    for (Index i : idx) s.push_back(pool[static_cast<std::size_t>(i)]);
    out.push_back(std::move(s));
    Index i = size - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - size + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < size; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

// Fixed part of one (k, S) subproblem: z contracted with U^T on S^c and with
// U_perp^T on S. The remaining objective is ||top_r(M_k(w x_{i in S} V_i^T))||_q.
struct Subproblem {
  DenseTensor w;
  Index rep = 0;
  Index rank = 0;
  std::vector<Index> modes;      // S
  std::vector<Index> v_groups;   // distinct groups of S, ascending
  std::vector<Index> slot;       // per mode of S: index into v_groups
  std::vector<Index> v_rows;     // p_g - r_g per v_group
  std::vector<Index> v_cols;     // r_g per v_group
};

double objective(const Subproblem& sp, const std::vector<Matrix>& v, SchattenQ q, Matrix* unfolding = nullptr,
                 Dims* xdims = nullptr) {
  DenseTensor x = sp.w;
  for (std::size_t a = 0; a < sp.modes.size(); ++a)
    x = mode_product(x, sp.modes[a], v[static_cast<std::size_t>(sp.slot[a])].transpose());
  Matrix m = matricize(x, sp.rep);
  const double f = top_schatten(singular_values(m), sp.rank, q);
  if (unfolding) *unfolding = std::move(m);
  if (xdims) *xdims = x.dims();
  return f;
}

// Gradient of the objective with respect to v[g].
Matrix gradient(const Subproblem& sp, const std::vector<Matrix>& v, SchattenQ q, Index g, double f) {
  Matrix a;
  Dims xdims;
  objective(sp, v, q, &a, &xdims);
  const Index g_rows = sp.v_rows[static_cast<std::size_t>(g)], g_cols = sp.v_cols[static_cast<std::size_t>(g)];
  Matrix grad = Matrix::Zero(g_rows, g_cols);
  if (f <= 0.0) return grad;
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const Index r = std::min<Index>(sp.rank, s.size());
  Vector w = Vector::Zero(r);
  if (q.is_inf()) {
    w(0) = 1.0;
  } else {
    for (Index i = 0; i < r; ++i) w(i) = std::pow(s(i) / f, q.value() - 1.0);
  }
  const Matrix da = svd.matrixU().leftCols(r) * w.asDiagonal() * svd.matrixV().leftCols(r).transpose();
  const DenseTensor gx = tensorize(da, sp.rep, xdims);
  for (std::size_t a_idx = 0; a_idx < sp.modes.size(); ++a_idx) {
    if (sp.slot[a_idx] != g) continue;
    const Index mode = sp.modes[a_idx];
    DenseTensor y = sp.w;
    for (std::size_t b = 0; b < sp.modes.size(); ++b)
      if (b != a_idx) y = mode_product(y, sp.modes[b], v[static_cast<std::size_t>(sp.slot[b])].transpose());
    grad += matricize(y, mode) * matricize(gx, mode).transpose();
  }
  return grad;
}

// argmax <G, V> over ||V||_q <= 1.
Matrix dual_direction(const Matrix& g, SchattenQ q) {
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Vector w(s.size());
  if (q.is_inf()) {
    w.setOnes();
  } else if (q.value() == 1.0) {
    w.setZero();
    w(0) = 1.0;
  } else {
    const double qs = q.dual().value();
    const double top = s(0);
    for (Index i = 0; i < s.size(); ++i) w(i) = top > 0 ? std::pow(s(i) / top, qs - 1.0) : 0.0;
    const double n = q.norm(w);
    if (n > 0) w /= n;
  }
  return svd.matrixU() * w.asDiagonal() * svd.matrixV().transpose();
}

Matrix random_unit(Index rows, Index cols, SchattenQ q, Rng& rng) {
  Matrix v = gaussian_matrix(rows, cols, rng);
  const double n = q.norm(singular_values(v));
  return n > 0 ? Matrix(v / n) : v;
}

struct Best {
  double value = -1.0;
  std::vector<Matrix> v;
};

// One V_g whose group touches a single mode of S: with the other directions
// fixed, y = w contracted with them is reused across the inner iterations.
// Both unfoldings of x = y x_mode V_g^T are related by a fixed permutation.
struct SingleMode {
  Matrix ym;                  // M_mode(y)
  std::vector<Index> to_rep;  // entry j of M_rep(x) sits at to_rep[j] of M_mode(x)
  Index rep_rows = 0;
  Index rank = 0;

  SingleMode(const DenseTensor& y, Index mode, Index rep, Index r_g, Index rank_) : ym(matricize(y, mode)), rank(rank_) {
    Dims xd = y.dims();
    xd[static_cast<std::size_t>(mode)] = r_g;
    std::vector<double> ids(static_cast<std::size_t>(product(xd)));
    std::iota(ids.begin(), ids.end(), 0.0);
    const DenseTensor idx(xd, std::move(ids));
    const Matrix by_mode = matricize(idx, mode), by_rep = matricize(idx, rep);
    std::vector<Index> where(static_cast<std::size_t>(idx.size()));
    for (Index j = 0; j < by_mode.size(); ++j) where[static_cast<std::size_t>(by_mode.data()[j])] = j;
    to_rep.resize(where.size());
    for (Index j = 0; j < by_rep.size(); ++j) to_rep[static_cast<std::size_t>(j)] = where[static_cast<std::size_t>(by_rep.data()[j])];
    rep_rows = by_rep.rows();
  }
};

struct SingleModeStep {
  double f = 0.0;
  Matrix grad;
};

SingleModeStep single_mode_step(const SingleMode& sm, const Matrix& vg, SchattenQ q) {
  const Matrix xm = vg.transpose() * sm.ym;
  Matrix m(sm.rep_rows, xm.size() / sm.rep_rows);
  for (std::size_t j = 0; j < sm.to_rep.size(); ++j) m.data()[j] = xm.data()[sm.to_rep[j]];
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  SingleModeStep out;
  out.f = top_schatten(s, sm.rank, q);
  out.grad = Matrix::Zero(vg.rows(), vg.cols());
  if (out.f <= 0.0) return out;
  const Index r = std::min<Index>(sm.rank, s.size());
  Vector w = Vector::Zero(r);
  if (q.is_inf()) {
    w(0) = 1.0;
  } else {
    for (Index i = 0; i < r; ++i) w(i) = std::pow(s(i) / out.f, q.value() - 1.0);
  }
  const Matrix da = svd.matrixU().leftCols(r) * w.asDiagonal() * svd.matrixV().leftCols(r).transpose();
  Matrix dm(xm.rows(), xm.cols());
  for (std::size_t j = 0; j < sm.to_rep.size(); ++j) dm.data()[sm.to_rep[j]] = da.data()[j];
  out.grad = sm.ym * dm.transpose();
  return out;
}

Index maximize(const Subproblem& sp, SchattenQ q, Index budget, Rng& rng, Best& best) {
  constexpr double kRelTol = 1e-12;
  constexpr int kInner = 300;
  constexpr int kRounds = 100;
  Index evals = 0;
  for (Index start = 0; start < budget; ++start) {
    std::vector<Matrix> v;
    for (std::size_t g = 0; g < sp.v_groups.size(); ++g) v.push_back(random_unit(sp.v_rows[g], sp.v_cols[g], q, rng));
    double f = objective(sp, v, q);
    ++evals;
    for (int round = 0; round < kRounds; ++round) {
      const double round_start = f;
      for (Index g = 0; g < static_cast<Index>(sp.v_groups.size()); ++g) {
        const auto touches = std::count(sp.slot.begin(), sp.slot.end(), g);
        if (touches == 1) {
          const std::size_t a_idx = static_cast<std::size_t>(std::find(sp.slot.begin(), sp.slot.end(), g) - sp.slot.begin());
          DenseTensor y = sp.w;
          for (std::size_t b = 0; b < sp.modes.size(); ++b)
            if (b != a_idx) y = mode_product(y, sp.modes[b], v[static_cast<std::size_t>(sp.slot[b])].transpose());
          Matrix& vg = v[static_cast<std::size_t>(g)];
          const SingleMode sm(y, sp.modes[a_idx], sp.rep, vg.cols(), sp.rank);
          SingleModeStep cur = single_mode_step(sm, vg, q);
          for (int it = 0; it < kInner; ++it) {
            if (cur.grad.cwiseAbs().maxCoeff() == 0.0) break;
            Matrix trial = dual_direction(cur.grad, q);
            SingleModeStep next = single_mode_step(sm, trial, q);
            ++evals;
            if (!(next.f > f * (1.0 + kRelTol))) break;
            vg = std::move(trial);
            f = next.f;
            cur = std::move(next);
          }
          continue;
        }
        for (int it = 0; it < kInner; ++it) {
          const Matrix grad = gradient(sp, v, q, g, f);
          if (grad.cwiseAbs().maxCoeff() == 0.0) break;
          std::vector<Matrix> trial = v;
          trial[static_cast<std::size_t>(g)] = dual_direction(grad, q);
          const double ft = objective(sp, trial, q);
          ++evals;
          if (!(ft > f * (1.0 + kRelTol))) break;
          v = std::move(trial);
          f = ft;
        }
      }
      if (!(f > round_start * (1.0 + kRelTol))) break;
    }
    if (f > best.value) {
      best.value = f;
      best.v = v;
    }
  }
  return evals;
}

Subproblem make_subproblem(const DenseTensor& z, const std::vector<OrthonormalBasis>& f, const SymmetricGroups& g,
                           Index group, const std::vector<Index>& modes, const std::vector<Matrix>& comps) {
  Subproblem sp;
  sp.rep = g.representative(group);
  sp.rank = g.rank(group);
  sp.modes = modes;
  for (Index k : modes) {
    const Index gk = g.group_of(k);
    if (!contains(sp.v_groups, gk)) sp.v_groups.push_back(gk);
  }
  std::sort(sp.v_groups.begin(), sp.v_groups.end());
  for (Index k : modes)
    sp.slot.push_back(std::find(sp.v_groups.begin(), sp.v_groups.end(), g.group_of(k)) - sp.v_groups.begin());
  for (Index gk : sp.v_groups) {
    sp.v_rows.push_back(comps[static_cast<std::size_t>(gk)].cols());
    sp.v_cols.push_back(g.rank(gk));
  }
  DenseTensor w = z;
  for (Index k = 0; k < z.order(); ++k) {
    if (k == sp.rep) continue;
    const Index gk = g.group_of(k);
    if (contains(modes, k))
      w = mode_product(w, k, comps[static_cast<std::size_t>(gk)].transpose());
    else
      w = mode_product(w, k, f[static_cast<std::size_t>(gk)].matrix().transpose());
  }
  sp.w = std::move(w);
  return sp;
}

}  // namespace

std::string to_string(EstimateKind k) { return k == EstimateKind::Exact ? "EXACT" : "LOWER_BOUND"; }

double signal_strength(const DenseTensor& t, const SymmetricGroups& groups) {
  if (groups.order() != t.order()) throw DimensionError("groups do not match tensor order");
  double lam = kInf;
  for (Index i = 0; i < groups.count(); ++i) {
    const Matrix m = matricize(t, groups.representative(i));
    if (groups.rank(i) > std::min(m.rows(), m.cols())) throw InvalidArgument("rank exceeds unfolding size");
    const Vector s = singular_values(m);
    lam = std::min(lam, s(groups.rank(i) - 1));
  }
  return lam;
}

Tau1Result tau1(const DenseTensor& z, const std::vector<OrthonormalBasis>& factors, const SymmetricGroups& groups,
                SchattenQ q, const std::vector<Index>& dense_groups) {
  check_factors(z, factors, groups);
  Tau1Result out;
  for (Index i = 0; i < groups.count(); ++i) {
    const Index rep = groups.representative(i);
    DenseTensor w = z;
    for (Index k = 0; k < z.order(); ++k)
      if (k != rep) w = mode_product(w, k, factors[static_cast<std::size_t>(groups.group_of(k))].matrix().transpose());
    const double v = top_schatten(singular_values(matricize(w, rep)), groups.rank(i), q);
    out.per_group.push_back(v);
    if (!contains(dense_groups, i)) out.tau1 = std::max(out.tau1, v);
  }
  return out;
}

double tau_objective(const DenseTensor& z, const std::vector<OrthonormalBasis>& factors, const SymmetricGroups& groups,
                     SchattenQ q, Index group, const std::vector<Index>& modes,
                     const std::map<Index, Matrix>& directions) {
  check_factors(z, factors, groups);
  const Index rep = groups.representative(group);
  DenseTensor w = z;
  for (Index k = 0; k < z.order(); ++k) {
    if (k == rep) continue;
    const Index gk = groups.group_of(k);
    const Matrix& u = factors[static_cast<std::size_t>(gk)].matrix();
    if (contains(modes, k)) {
      const Matrix comp = complement_matrix(u);
      if (comp.cols() == 0) return 0.0;
      const auto it = directions.find(gk);
      if (it == directions.end()) throw InvalidArgument("tau_objective: missing direction for group " + std::to_string(gk));
      w = mode_product(w, k, (comp * it->second).transpose());
    } else {
      w = mode_product(w, k, u.transpose());
    }
  }
  return top_schatten(singular_values(matricize(w, rep)), groups.rank(group), q);
}

TauEstimate tau_j_estimate(const DenseTensor& z, const std::vector<OrthonormalBasis>& factors,
                           const SymmetricGroups& groups, SchattenQ q, Index j, Index budget, std::uint64_t seed,
                           const std::vector<Index>& dense_groups) {
  check_factors(z, factors, groups);
  const Index d = z.order();
  if (j < 2 || j > d) throw InvalidArgument("tau_j needs 2 <= j <= d");
  if (budget < 1) throw InvalidArgument("tau_j budget must be >= 1");
  std::vector<Matrix> comps;
  for (const auto& f : factors) comps.push_back(complement_matrix(f.matrix()));

  TauEstimate est;
  est.j = j;
  est.budget = budget;
  double best = 0.0;
  for (Index gi = 0; gi < groups.count(); ++gi) {
    if (contains(dense_groups, gi)) continue;
    const Index rep = groups.representative(gi);
    std::vector<Index> pool;
    for (Index k = 0; k < d; ++k)
      if (k != rep) pool.push_back(k);
    const auto sets = subsets(pool, j - 1);
    for (std::size_t si = 0; si < sets.size(); ++si) {
      const auto& s = sets[si];
      bool empty = false;
      for (Index k : s) empty = empty || comps[static_cast<std::size_t>(groups.group_of(k))].cols() == 0;
      if (empty) continue;  // sup over an empty complement is 0
      const Subproblem sp = make_subproblem(z, factors, groups, gi, s, comps);
      Rng rng(derive_seed({seed, static_cast<std::uint64_t>(gi), static_cast<std::uint64_t>(si)}));
      Best b;
      est.evaluations += maximize(sp, q, budget, rng, b);
      // Value reported is the objective re-evaluated at the stored maximizer.
      const double v = objective(sp, b.v, q);
      if (v > best || est.group < 0) {
        best = v;
        est.group = gi;
        est.modes = s;
        est.v_groups = sp.v_groups;
        est.v = b.v;
      }
    }
  }
  est.value = std::max(best, 0.0);
  return est;
}

double tau_trivial_upper(const DenseTensor& z, Index r, SchattenQ q) {
  const double expo = q.is_inf() ? 0.0 : std::max(0.0, 1.0 / q.value() - 0.5);
  return std::pow(static_cast<double>(r), expo) * hs_norm(z);
}

XiEstimate xi_estimate(const DenseTensor& z, const std::vector<Index>& ranks, Index restarts, Index t_max,
                       std::uint64_t seed) {
  if (static_cast<Index>(ranks.size()) != z.order()) throw DimensionError("xi_estimate: one rank per mode");
  if (restarts < 1) throw InvalidArgument("xi_estimate: restarts must be >= 1");
  std::vector<Index> low, low_ranks;
  for (Index k = 0; k < z.order(); ++k) {
    const Index p = z.dims()[static_cast<std::size_t>(k)], r = ranks[static_cast<std::size_t>(k)];
    if (r < 1 || r > p) throw InvalidArgument("xi_estimate: rank out of range on mode " + std::to_string(k));
    if (r < p) {
      low.push_back(k);
      low_ranks.push_back(r);
    }
  }
  XiEstimate out;
  out.restarts = restarts;
  out.z_norm = hs_norm(z);
  for (Index s = 0; s < restarts; ++s) {
    std::vector<OrthonormalBasis> per_mode;
    double value = out.z_norm, resid = 0.0;
    if (low.empty()) {
      for (Index k = 0; k < z.order(); ++k)
        per_mode.push_back(OrthonormalBasis::trusted(Matrix::Identity(z.dims()[static_cast<std::size_t>(k)],
                                                                        z.dims()[static_cast<std::size_t>(k)])));
    } else {
      const std::uint64_t rs = derive_seed({seed, static_cast<std::uint64_t>(s)});
      init::Explicit start;
      for (std::size_t a = 0; a < low.size(); ++a) {
        Rng rng(derive_seed({rs, static_cast<std::uint64_t>(low[a])}));
        start.bases.push_back(random_orthonormal(z.dims()[static_cast<std::size_t>(low[a])], low_ranks[a], rng));
      }
      HooiOptions opt;
      opt.t_max = t_max;
      const TuckerFit fit = hooi_partial(z, low, low_ranks, start, opt);
      value = fit.captured_norm();
      resid = hs_norm(z - fit.reconstruction);
      std::size_t a = 0;
      for (Index k = 0; k < z.order(); ++k) {
        if (a < low.size() && low[a] == k) {
          per_mode.push_back(fit.factors[a]);
          ++a;
        } else {
          const Index p = z.dims()[static_cast<std::size_t>(k)];
          per_mode.push_back(OrthonormalBasis::trusted(Matrix::Identity(p, p)));
        }
      }
    }
    out.restart_values.push_back(value);
    out.restart_residuals.push_back(resid);
    out.restart_factors.push_back(std::move(per_mode));
    if (s == 0 || value > out.value) {
      out.value = value;
      out.best_restart = s;
    }
  }
  return out;
}

NoiseProjection noise_projection_bound(const DenseTensor& z, const std::vector<OrthonormalBasis>& true_factors,
                                       const std::vector<OrthonormalBasis>& fitted) {
  const Index d = z.order();
  if (d > 10) throw InvalidArgument("noise_projection_bound: order above 10 is not enumerated");
  if (static_cast<Index>(true_factors.size()) != d || static_cast<Index>(fitted.size()) != d)
    throw DimensionError("noise_projection_bound: one factor per mode");
  for (Index k = 0; k < d; ++k) {
    const auto& u = true_factors[static_cast<std::size_t>(k)];
    const auto& uh = fitted[static_cast<std::size_t>(k)];
    if (u.p() != z.dims()[static_cast<std::size_t>(k)] || uh.p() != u.p() || uh.r() != u.r())
      throw DimensionError("noise_projection_bound: factor shape mismatch on mode " + std::to_string(k));
  }
  NoiseProjection out;
  std::vector<Matrix> comps;
  for (Index k = 0; k < d; ++k) {
    comps.push_back(complement_matrix(true_factors[static_cast<std::size_t>(k)].matrix()));
    out.sin_theta.push_back(
        sin_theta(fitted[static_cast<std::size_t>(k)], true_factors[static_cast<std::size_t>(k)], SchattenQ::inf()));
  }
  DenseTensor proj = z;
  for (Index k = 0; k < d; ++k) proj = mode_product(proj, k, fitted[static_cast<std::size_t>(k)].matrix().transpose());
  out.lhs = hs_norm(proj);

  const std::size_t n = std::size_t{1} << d;
  out.theta.assign(n, 0.0);
  for (std::size_t mask = 0; mask < n; ++mask) {
    bool empty = false;
    for (Index k = 0; k < d; ++k)
      if (!(mask >> k & 1U) && comps[static_cast<std::size_t>(k)].cols() == 0) empty = true;
    double weight = 1.0;
    for (Index k = 0; k < d; ++k)
      if (!(mask >> k & 1U)) weight *= out.sin_theta[static_cast<std::size_t>(k)];
    if (empty) continue;
    DenseTensor w = z;
    for (Index k = 0; k < d; ++k) {
      const Matrix& m = (mask >> k & 1U) ? true_factors[static_cast<std::size_t>(k)].matrix()
                                         : comps[static_cast<std::size_t>(k)];
      w = mode_product(w, k, m.transpose());
    }
    out.theta[mask] = hs_norm(w);
    out.rhs += out.theta[mask] * weight;
  }
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-10) + 1e-12;
  return out;
}

bool BoundReport::conditions_hold() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const auto& kv) { return kv.second; });
}

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kE0Max = kSqrt2 / 2.0;
constexpr double kE0Slack = 1e-12;

double tau_at(const BoundInputs& in, Index j) {
  if (j == 1) return in.tau1;
  if (static_cast<Index>(in.tau.size()) < j) throw InvalidArgument("bound inputs lack tau_" + std::to_string(j));
  return in.tau[static_cast<std::size_t>(j - 1)];
}

double binom(Index n, Index k) {
  double c = 1.0;
  for (Index i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

}  // namespace

double signal_condition_constant_d3() { return 16.0 + 12.0 * kSqrt2; }
double signal_condition_constant_general(Index d) {
  return std::pow(2.0, (static_cast<double>(d) + 4.0) / 2.0) * std::pow(1.0 + kSqrt2 / 2.0, static_cast<double>(d));
}
double signal_condition_constant_partial() { return 16.0; }

BoundReport evaluate_bounds_d3(const BoundInputs& in) {
  BoundReport r;
  const double lam = in.lambda;
  const double t = static_cast<double>(in.t);
  const double ratio = in.tau1 / lam;
  r.values["max_sin_theta_t_step"] = 8.0 * ratio + in.e0 / std::pow(2.0, t);
  const double x = 8.0 * ratio + in.e0 / std::pow(2.0, t - 1.0);
  r.values["reconstruction_t_step"] = x < 1.0 ? (1.0 + 6.0 / (1.0 - x * x)) * in.xi : kInf;
  r.values["max_sin_theta_final"] = 9.0 * ratio;
  for (std::size_t k = 0; k < in.tau1k.size(); ++k)
    r.values["sin_theta_mode_" + std::to_string(k + 1)] =
        4.0 * (in.tau1k[k] / lam + 18.0 * in.tau1 * tau_at(in, 2) / (lam * lam) +
               81.0 * in.tau1 * in.tau1 * tau_at(in, 3) / (lam * lam * lam));
  r.values["reconstruction_final"] = 13.0 * in.xi;
  r.conditions["e0_at_most_sqrt2_over_2"] = in.e0 <= kE0Max + kE0Slack;
  r.conditions["signal_strength"] = lam >= signal_condition_constant_d3() * in.xi;
  return r;
}

BoundReport evaluate_bounds_general(Index d, Index m, const BoundInputs& in) {
  if (d < 2) throw InvalidArgument("evaluate_bounds_general: order must be >= 2");
  BoundReport r;
  const double dd = static_cast<double>(d);
  const double lam = in.lambda;
  const double t = static_cast<double>(in.t);
  const double c = std::pow(2.0, (dd + 3.0) / 2.0);
  const double ratio = in.tau1 / lam;
  const double half = (dd - 1.0) / 2.0;
  r.values["max_sin_theta_t_step"] = c * ratio + in.e0 / std::pow(2.0, t);
  const double x = c * ratio + in.e0 / std::pow(2.0, t - 1.0);
  r.values["reconstruction_t_step"] = x < 1.0 ? (1.0 + 2.0 * dd * std::pow(1.0 - x * x, -half)) * in.xi : kInf;
  r.values["max_sin_theta_final"] = (c + 1.0) * ratio;
  const double cstar = (c + 2.0) * (c + 2.0) * ratio * ratio;
  const double factor = cstar < 1.0 ? std::pow(1.0 - cstar, -half) : kInf;
  r.values["c_star"] = cstar;
  r.values["c_star_factor"] = factor;
  double tail = 0.0;
  for (Index j = 1; j <= d - 1; ++j)
    tail += binom(d - 1, j) * std::pow(c + 1.0, static_cast<double>(j)) * std::pow(in.tau1, static_cast<double>(j)) *
            tau_at(in, j + 1) / std::pow(lam, static_cast<double>(j + 1));
  for (std::size_t k = 0; k < in.tau1k.size(); ++k)
    r.values["sin_theta_mode_" + std::to_string(k + 1)] = 2.0 * factor * (in.tau1k[k] / lam + tail);
  r.values["reconstruction_final"] = (1.0 + 2.0 * dd * factor) * in.xi;
  r.values["groups"] = static_cast<double>(m);
  r.conditions["e0_at_most_sqrt2_over_2"] = in.e0 <= kE0Max + kE0Slack;
  r.conditions["signal_strength"] = lam >= signal_condition_constant_general(d) * in.xi;
  r.conditions["c_star_at_most_half"] = cstar <= 0.5;
  return r;
}

BoundReport evaluate_bounds_partial(const BoundInputs& in) {
  BoundReport r;
  const double lam = in.lambda;
  const double c = 4.0 * kSqrt2;
  const double ratio = in.tau1 / lam;
  r.values["max_sin_theta_t_step"] = c * ratio + in.e0 / std::pow(2.0, static_cast<double>(in.t));
  r.values["max_sin_theta_final"] = (c + 1.0) * ratio;
  for (std::size_t k = 0; k < in.tau1k.size(); ++k)
    r.values["sin_theta_mode_" + std::to_string(k + 1)] =
        2.0 * kSqrt2 * (in.tau1k[k] / lam + (c + 1.0) * in.tau1 * tau_at(in, 2) / (lam * lam));
  r.values["reconstruction_final"] = (c + 1.0) * in.xi;
  r.conditions["e0_at_most_sqrt2_over_2"] = in.e0 <= kE0Max + kE0Slack;
  r.conditions["signal_strength"] = lam >= signal_condition_constant_partial() * in.xi;
  return r;
}

LowerBoundInstance lower_bound_instance(const Dims& dims, Index r, double xi) {
  if (dims.empty()) throw DimensionError("lower_bound_instance: empty dims");
  if (r < 1) throw InvalidArgument("lower_bound_instance: r must be >= 1");
  if (2 * r > *std::min_element(dims.begin(), dims.end()))
    throw InvalidArgument("lower_bound_instance: need 2r <= min dim");
  if (xi < 0) throw InvalidArgument("lower_bound_instance: xi must be nonnegative");
  const double v = xi / std::sqrt(static_cast<double>(r));
  std::vector<double> a(static_cast<std::size_t>(product(dims)), 0.0), b = a;
  DenseTensor shape(dims);
  std::vector<Index> idx(dims.size());
  for (Index i = 0; i < r; ++i) {
    std::fill(idx.begin(), idx.end(), i);
    a[static_cast<std::size_t>(shape.offset(idx))] = v;
    std::fill(idx.begin(), idx.end(), r + i);
    b[static_cast<std::size_t>(shape.offset(idx))] = v;
  }
  LowerBoundInstance out{DenseTensor(dims, a), DenseTensor(dims, b), DenseTensor(dims, b), DenseTensor(dims, a)};
  return out;
}

namespace {

nlohmann::ordered_json finite_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

}  // namespace

nlohmann::ordered_json to_json(const PerturbationReport& r) {
  nlohmann::ordered_json j;
  j["q"] = r.q.to_string();
  j["lambda"] = r.lambda;
  j["e0"] = r.e0;
  j["tau1"] = r.tau1;
  j["tau1_per_group"] = r.tau1_per_group;
  auto& tj = j["tau_j"] = nlohmann::ordered_json::array();
  for (const auto& t : r.tau_j) {
    nlohmann::ordered_json e;
    e["j"] = t.j;
    e["value"] = t.value;
    e["kind"] = to_string(t.kind);
    e["budget"] = t.budget;
    e["evaluations"] = t.evaluations;
    e["group"] = t.group;
    e["modes"] = t.modes;
    tj.push_back(std::move(e));
  }
  j["tau_trivial_upper"] = r.tau_upper;
  if (r.xi) {
    nlohmann::ordered_json x;
    x["value"] = r.xi->value;
    x["kind"] = to_string(r.xi->kind);
    x["restarts"] = r.xi->restarts;
    x["best_restart"] = r.xi->best_restart;
    x["z_norm"] = r.xi->z_norm;
    x["restart_values"] = r.xi->restart_values;
    j["xi"] = std::move(x);
  }
  auto& bv = j["bound_values"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.bounds.values) bv[k] = finite_or_null(v);
  auto& cv = j["conditions"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.bounds.conditions) cv[k] = v;
  auto& ev = j["empirical_values"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.empirical) ev[k] = finite_or_null(v);
  auto& au = j["audit"] = nlohmann::ordered_json::array();
  for (const auto& a : r.audit) {
    nlohmann::ordered_json e;
    e["name"] = a.name;
    e["empirical"] = finite_or_null(a.empirical);
    e["bound"] = finite_or_null(a.bound);
    e["margin"] = finite_or_null(a.margin());
    e["status"] = a.pass ? "PASS" : "FAIL";
    au.push_back(std::move(e));
  }
  return j;
}

}  // namespace tucker
