#include "tucker/hooi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "tucker/seeding.hpp"

namespace tucker {

namespace {

// One factor to estimate: the modes it acts on (sorted), its rank and the
// common dimension of those modes.
struct Plan {
  std::vector<Index> modes;
  Index rank;
  Index dim;
  Index rep() const { return modes.front(); }
};

std::vector<Plan> plans_from(const SymmetricGroups& g) {
  std::vector<Plan> plans;
  for (Index i = 0; i < g.count(); ++i) plans.push_back({g.modes(i), g.rank(i), g.dim(i)});
  return plans;
}

std::vector<std::vector<Index>> modes_of(const std::vector<Plan>& plans) {
  std::vector<std::vector<Index>> out;
  for (const Plan& p : plans) out.push_back(p.modes);
  return out;
}

void check_finite(const DenseTensor& t) {
  for (double x : t.values())
    if (!std::isfinite(x)) throw InvalidArgument("input tensor has non-finite entries");
}

// factor index per mode, -1 for modes without a factor
std::vector<Index> owner_map(Index order, const std::vector<Plan>& plans) {
  std::vector<Index> owner(static_cast<std::size_t>(order), -1);
  for (std::size_t i = 0; i < plans.size(); ++i)
    for (Index k : plans[i].modes) owner[static_cast<std::size_t>(k)] = static_cast<Index>(i);
  return owner;
}

// Contract every factored mode except `skip` with the transpose of its factor.
DenseTensor contract_except(const DenseTensor& t, const std::vector<Matrix>& factors_t,
                            const std::vector<Index>& owner, Index skip) {
  const DenseTensor* cur = &t;
  DenseTensor tmp;
  for (Index k = 0; k < t.order(); ++k) {
    const Index f = owner[static_cast<std::size_t>(k)];
    if (k == skip || f < 0) continue;
    tmp = mode_product(*cur, k, factors_t[static_cast<std::size_t>(f)]);
    cur = &tmp;
  }
  return cur == &t ? t : std::move(tmp);
}

std::vector<Matrix> transposes(const std::vector<OrthonormalBasis>& f) {
  std::vector<Matrix> out;
  out.reserve(f.size());
  for (const auto& b : f) out.push_back(b.matrix().transpose());
  return out;
}

void check_ranks_fit(const DenseTensor& t, const std::vector<Plan>& plans) {
  const auto owner = owner_map(t.order(), plans);
  for (std::size_t i = 0; i < plans.size(); ++i) {
    Index cols = 1;
    for (Index k = 0; k < t.order(); ++k) {
      if (k == plans[i].rep()) continue;
      const Index f = owner[static_cast<std::size_t>(k)];
      cols *= f < 0 ? t.dims()[static_cast<std::size_t>(k)] : plans[static_cast<std::size_t>(f)].rank;
    }
    if (plans[i].rank > cols)
      throw InvalidArgument("rank " + std::to_string(plans[i].rank) + " for mode " +
                            std::to_string(plans[i].rep()) +
                            " exceeds the column count of its contracted unfolding (" +
                            std::to_string(cols) + ")");
  }
}

void check_plans(const DenseTensor& t, const std::vector<Plan>& plans) {
  for (const Plan& p : plans) {
    for (Index k : p.modes)
      if (t.dims()[static_cast<std::size_t>(k)] != p.dim)
        throw DimensionError("group dimension does not match tensor mode " + std::to_string(k));
    if (p.rank < 1 || p.rank > p.dim)
      throw InvalidArgument("rank " + std::to_string(p.rank) + " outside [1, " + std::to_string(p.dim) + "]");
  }
}

std::vector<OrthonormalBasis> init_for(const DenseTensor& t, const std::vector<Plan>& plans,
                                       const InitSpec& spec) {
  std::vector<OrthonormalBasis> out;
  if (const auto* e = std::get_if<init::Explicit>(&spec)) {
    if (e->bases.size() != plans.size())
      throw DimensionError("explicit init has " + std::to_string(e->bases.size()) + " bases for " +
                           std::to_string(plans.size()) + " factors");
    for (std::size_t i = 0; i < plans.size(); ++i)
      if (e->bases[i].p() != plans[i].dim || e->bases[i].r() != plans[i].rank)
        throw DimensionError("explicit init basis " + std::to_string(i) + " has the wrong shape");
    return e->bases;
  }
  if (std::holds_alternative<init::THosvd>(spec)) {
    for (const Plan& p : plans) out.push_back(svd_r(matricize(t, p.rep()), p.rank).basis);
    return out;
  }
  if (const auto* st = std::get_if<init::StHosvd>(&spec)) {
    std::vector<Index> order = st->order;
    if (order.empty()) {
      order.resize(plans.size());
      std::iota(order.begin(), order.end(), Index{0});
    }
    std::vector<Index> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      if (sorted.size() != plans.size() || sorted[i] != static_cast<Index>(i))
        throw InvalidArgument("truncation order must be a permutation of the groups");
    std::vector<Matrix> ft(plans.size());
    std::vector<std::optional<OrthonormalBasis>> slot(plans.size());
    DenseTensor cur = t;
    for (Index g : order) {
      const Plan& p = plans[static_cast<std::size_t>(g)];
      SvdResult s = svd_r(matricize(cur, p.rep()), p.rank);
      ft[static_cast<std::size_t>(g)] = s.basis.matrix().transpose();
      for (Index k : p.modes) cur = mode_product(cur, k, ft[static_cast<std::size_t>(g)]);
      slot[static_cast<std::size_t>(g)] = std::move(s.basis);
    }
    for (auto& s : slot) out.push_back(std::move(*s));
    return out;
  }
  const auto& rnd = std::get<init::Random>(spec);
  for (std::size_t i = 0; i < plans.size(); ++i) {
    Rng rng(derive_seed({rnd.seed, static_cast<std::uint64_t>(i)}));
    out.push_back(random_orthonormal(plans[i].dim, plans[i].rank, rng));
  }
  return out;
}

TraceEntry trace_entry(Index it, const std::vector<OrthonormalBasis>& f, double captured,
                       const HooiOptions& opt) {
  TraceEntry e;
  e.iteration = it;
  e.captured_norm = captured;
  if (opt.reference)
    for (std::size_t i = 0; i < f.size(); ++i)
      e.sin_theta.push_back(sin_theta(f[i], (*opt.reference)[i], SchattenQ::inf()));
  return e;
}

TuckerFit finish(const DenseTensor& t, std::vector<OrthonormalBasis> factors, const std::vector<Plan>& plans,
                 std::vector<TraceEntry> trace, Index iterations) {
  TuckerFit fit;
  fit.factor_modes = modes_of(plans);
  fit.core = project_core(t, factors, fit.factor_modes);
  fit.reconstruction = expand_core(fit.core, factors, fit.factor_modes);
  fit.factors = std::move(factors);
  fit.trace = std::move(trace);
  fit.iterations_run = iterations;
  return fit;
}

TuckerFit run(const DenseTensor& t, const std::vector<Plan>& plans, const InitSpec& spec,
              const HooiOptions& opt) {
  check_finite(t);
  check_plans(t, plans);
  if (opt.t_max < 0) throw InvalidArgument("t_max must be nonnegative");
  if (opt.reference) {
    if (opt.reference->size() != plans.size()) throw DimensionError("reference factor count mismatch");
    for (std::size_t i = 0; i < plans.size(); ++i)
      if ((*opt.reference)[i].p() != plans[i].dim || (*opt.reference)[i].r() != plans[i].rank)
        throw DimensionError("reference factor " + std::to_string(i) + " has the wrong shape");
  }
  check_ranks_fit(t, plans);

  std::vector<OrthonormalBasis> factors = init_for(t, plans, spec);
  const auto owner = owner_map(t.order(), plans);
  const auto modes = modes_of(plans);
  std::vector<Matrix> ft = transposes(factors);

  std::vector<TraceEntry> trace;
  double prev = hs_norm(project_core(t, factors, modes));
  trace.push_back(trace_entry(0, factors, prev, opt));

  Index it = 0;
  while (it < opt.t_max) {
    ++it;
    double captured = 0.0;
    for (std::size_t i = 0; i < plans.size(); ++i) {
      const Plan& p = plans[i];
      const DenseTensor y = contract_except(t, ft, owner, p.rep());
      SvdResult s = svd_r(matricize(y, p.rep()), p.rank);
      // With a single-mode final group, ||U^T M||_F is the captured norm.
      if (i + 1 == plans.size() && p.modes.size() == 1)
        captured = s.singular_values.head(p.rank).norm();
      ft[i] = s.basis.matrix().transpose();
      factors[i] = std::move(s.basis);
    }
    if (plans.back().modes.size() != 1) captured = hs_norm(project_core(t, factors, modes));
    trace.push_back(trace_entry(it, factors, captured, opt));
    const bool stalled = opt.stop_tol > 0.0 && std::abs(captured - prev) <= opt.stop_tol * prev;
    prev = captured;
    if (stalled) break;
  }
  return finish(t, std::move(factors), plans, std::move(trace), it);
}

}  // namespace

DenseTensor project_core(const DenseTensor& t, const std::vector<OrthonormalBasis>& factors,
                         const std::vector<std::vector<Index>>& factor_modes) {
  if (factors.size() != factor_modes.size()) throw DimensionError("factor/mode list size mismatch");
  DenseTensor cur = t;
  for (std::size_t i = 0; i < factors.size(); ++i)
    cur = group_product(cur, factor_modes[i], factors[i].matrix().transpose());
  return cur;
}

DenseTensor expand_core(const DenseTensor& core, const std::vector<OrthonormalBasis>& factors,
                        const std::vector<std::vector<Index>>& factor_modes) {
  if (factors.size() != factor_modes.size()) throw DimensionError("factor/mode list size mismatch");
  DenseTensor cur = core;
  for (std::size_t i = 0; i < factors.size(); ++i) cur = group_product(cur, factor_modes[i], factors[i].matrix());
  return cur;
}

TuckerFit hooi(const DenseTensor& t, const SymmetricGroups& groups, const InitSpec& init,
               const HooiOptions& options) {
  if (groups.order() != t.order()) throw DimensionError("groups do not match tensor order");
  return run(t, plans_from(groups), init, options);
}

TuckerFit hooi_d3(const DenseTensor& t, const std::array<Index, 3>& ranks, const InitSpec& init,
                  const HooiOptions& options) {
  if (t.order() != 3) throw DimensionError("hooi_d3 needs an order-3 tensor");
  return hooi(t, SymmetricGroups::asymmetric(t.dims(), {ranks[0], ranks[1], ranks[2]}), init, options);
}

TuckerFit hooi_partial(const DenseTensor& t, std::vector<Index> low_rank_modes, std::vector<Index> ranks,
                       const InitSpec& init, const HooiOptions& options) {
  if (low_rank_modes.empty()) throw InvalidArgument("hooi_partial: no low-rank modes");
  if (low_rank_modes.size() != ranks.size()) throw InvalidArgument("hooi_partial: one rank per low-rank mode");
  std::vector<std::size_t> idx(low_rank_modes.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return low_rank_modes[a] < low_rank_modes[b]; });
  std::vector<Plan> plans;
  for (std::size_t j : idx) {
    const Index k = low_rank_modes[j];
    if (k < 0 || k >= t.order()) throw DimensionError("hooi_partial: mode out of range");
    if (!plans.empty() && plans.back().rep() == k) throw InvalidArgument("hooi_partial: repeated mode");
    plans.push_back({{k}, ranks[j], t.dims()[static_cast<std::size_t>(k)]});
  }
  return run(t, plans, init, options);
}

TuckerFit t_hosvd(const DenseTensor& t, const SymmetricGroups& groups) {
  HooiOptions opt;
  opt.t_max = 0;
  return hooi(t, groups, init::THosvd{}, opt);
}

TuckerFit st_hosvd(const DenseTensor& t, const SymmetricGroups& groups, std::vector<Index> order) {
  HooiOptions opt;
  opt.t_max = 0;
  return hooi(t, groups, init::StHosvd{std::move(order)}, opt);
}

TuckerFit one_step_hooi(const DenseTensor& t, const SymmetricGroups& groups, const InitSpec& init,
                        std::optional<std::vector<OrthonormalBasis>> reference) {
  HooiOptions opt;
  opt.t_max = 1;
  opt.reference = std::move(reference);
  return hooi(t, groups, init, opt);
}

std::vector<OrthonormalBasis> initial_factors(const DenseTensor& t, const SymmetricGroups& groups,
                                              const InitSpec& init) {
  if (groups.order() != t.order()) throw DimensionError("groups do not match tensor order");
  const auto plans = plans_from(groups);
  check_plans(t, plans);
  return init_for(t, plans, init);
}

}  // namespace tucker
