#include "tucker/audit.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "tucker/hooi.hpp"
#include "tucker/parallel.hpp"
#include "tucker/perturb.hpp"
#include "tucker/seeding.hpp"

namespace tucker {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Roundoff allowance: a line passes when empirical <= bound (1 + kRel) + slack.
constexpr double kRel = 1e-10;
constexpr double kAbs = 1e-10;

enum class BoundFamily { Order3, General, Partial };

std::string family_name(BoundFamily f) {
  switch (f) {
    case BoundFamily::Order3:
      return "order3";
    case BoundFamily::General:
      return "general";
    case BoundFamily::Partial:
      return "partial";
  }
  return "?";
}

double condition_constant(BoundFamily f, Index d) {
  switch (f) {
    case BoundFamily::Order3:
      return signal_condition_constant_d3();
    case BoundFamily::General:
      return signal_condition_constant_general(d);
    case BoundFamily::Partial:
      return signal_condition_constant_partial();
  }
  return kInf;
}

BoundReport evaluate(BoundFamily f, Index d, const BoundInputs& in) {
  switch (f) {
    case BoundFamily::Order3:
      return evaluate_bounds_d3(in);
    case BoundFamily::General:
      return evaluate_bounds_general(d, d, in);
    case BoundFamily::Partial:
      return evaluate_bounds_partial(in);
  }
  throw InvalidArgument("unknown bound family");
}

AuditLine line(std::string name, double empirical, double bound, double slack) {
  AuditLine a;
  a.name = std::move(name);
  a.empirical = empirical;
  a.bound = bound;
  a.pass = std::isfinite(empirical) && empirical <= bound * (1.0 + kRel) + slack;
  return a;
}

struct TrialOutcome {
  PerturbationReport report;
  Index iterations = 0;
  double z_norm = 0.0;
  double t_norm = 0.0;
};

}  // namespace

AuditResult run_bounds_audit(const ExperimentConfig& c) {
  if (c.kind != ExperimentKind::BoundsAudit) throw InvalidArgument("run_bounds_audit: kind must be BOUNDS_AUDIT");
  const Index d = static_cast<Index>(c.dims.front().size());
  const bool partial = c.audit_variant == AuditVariant::Partial;
  const BoundFamily family = partial ? BoundFamily::Partial : (d == 3 ? BoundFamily::Order3 : BoundFamily::General);
  const double cond = condition_constant(family, d);
  const SchattenQ q = SchattenQ::inf();

  auto grid = expand_grid(c);
  auto xi_ranks = [&](const GridPoint& pt) {
    std::vector<Index> ranks(pt.dims.size(), pt.r);
    if (partial) ranks.back() = pt.dims.back();
    return ranks;
  };

  nlohmann::ordered_json report;
  report["kind"] = to_string(c.kind);
  report["bound_family"] = family_name(family);
  report["q"] = q.to_string();
  report["master_seed"] = c.master_seed;
  report["repetitions"] = c.repetitions;
  report["signal_condition_constant"] = cond;
  auto& gj = report["grid"] = nlohmann::ordered_json::array();
  for (auto& pt : grid) {
    // Rules other than xi_multiple still get a pilot so the condition can be checked up front.
    if (!pt.xi_pilot) {
      const std::uint64_t s = derive_seed({c.master_seed, label_hash(to_string(c.kind)),
                                           static_cast<std::uint64_t>(pt.index), label_hash("pilot")});
      Rng rng(s);
      const DenseTensor z = gaussian_noise(pt.dims, pt.sigma, rng);
      pt.xi_pilot = xi_estimate(z, xi_ranks(pt), c.xi_restarts, c.t_max, derive_seed({s, 1})).value;
    }
    const double xi_hat = c.pilot_safety * *pt.xi_pilot;
    const bool ok = pt.lambda >= cond * *pt.xi_pilot;
    nlohmann::ordered_json e;
    e["index"] = pt.index;
    e["dims"] = pt.dims;
    e["r"] = pt.r;
    e["sigma"] = pt.sigma;
    e["alpha"] = pt.alpha;
    e["lambda"] = pt.lambda;
    e["xi_pilot"] = *pt.xi_pilot;
    e["xi_hat"] = xi_hat;
    e["signal_condition_holds"] = ok;
    gj.push_back(std::move(e));
    if (!ok && c.enforce_conditions)
      throw ConditionViolation("grid point " + std::to_string(pt.index) + ": lambda = " + std::to_string(pt.lambda) +
                               " is below " + std::to_string(cond) + " * xi = " + std::to_string(cond * *pt.xi_pilot) +
                               " (pilot estimate of xi " + std::to_string(*pt.xi_pilot) +
                               "); raise alpha or set enforce_conditions to false");
  }

  const std::size_t reps = static_cast<std::size_t>(c.repetitions);
  auto outcomes = parallel_map<TrialOutcome>(grid.size() * reps, [&](std::size_t i) {
    const GridPoint& pt = grid[i / reps];
    const Index rep = static_cast<Index>(i % reps);
    const std::uint64_t seed =
        trial_seed(c.master_seed, to_string(c.kind), static_cast<std::uint64_t>(pt.index), static_cast<std::uint64_t>(rep));
    Rng sig(derive_seed({seed, 1})), noise(derive_seed({seed, 2})), ir(derive_seed({seed, 3}));
    const LowRankInstance inst = gen_low_rank_instance(pt.dims, pt.r, pt.lambda, sig);
    const DenseTensor z = gaussian_noise(pt.dims, pt.sigma, noise);
    const DenseTensor obs = inst.t + z;

    // Factors in the audited model: the dense mode of the partial variant
    // carries the identity.
    std::vector<OrthonormalBasis> truth = inst.factors;
    std::vector<Index> ranks = xi_ranks(pt);
    std::vector<Index> low;
    for (Index k = 0; k < d; ++k)
      if (!(partial && k == d - 1)) low.push_back(k);
    if (partial) {
      const Index p = pt.dims.back();
      truth.back() = OrthonormalBasis::trusted(Matrix::Identity(p, p));
    }
    const auto groups = SymmetricGroups::asymmetric(pt.dims, ranks);
    const std::vector<Index> dense = partial ? std::vector<Index>{d - 1} : std::vector<Index>{};

    std::vector<OrthonormalBasis> low_truth;
    for (Index k : low) low_truth.push_back(inst.factors[static_cast<std::size_t>(k)]);
    const auto start = perturbed_init(low_truth, ir);
    double e0 = 0.0;
    for (std::size_t a = 0; a < start.size(); ++a) e0 = std::max(e0, sin_theta(start[a], low_truth[a], q));

    HooiOptions opt;
    opt.t_max = c.t_max;
    opt.stop_tol = c.stop_tol;
    opt.reference = low_truth;
    std::vector<Index> low_ranks(low.size(), pt.r);
    const TuckerFit fit = partial ? hooi_partial(obs, low, low_ranks, init::Explicit{start}, opt)
                                  : hooi(obs, groups, init::Explicit{start}, opt);

    TrialOutcome out;
    out.iterations = fit.iterations_run;
    out.z_norm = hs_norm(z);
    out.t_norm = hs_norm(obs);
    PerturbationReport& rep_ = out.report;
    rep_.q = q;
    rep_.e0 = e0;
    rep_.lambda = signal_strength(inst.t, SymmetricGroups::asymmetric(pt.dims, std::vector<Index>(pt.dims.size(), pt.r)));
    const Tau1Result t1 = tau1(z, truth, groups, q, dense);
    rep_.tau1 = t1.tau1;
    rep_.tau1_per_group = t1.per_group;
    const Index jmax = partial ? 2 : d;
    for (Index j = 2; j <= jmax; ++j)
      rep_.tau_j.push_back(tau_j_estimate(z, truth, groups, q, j, c.tau_budget,
                                          derive_seed({seed, 5, static_cast<std::uint64_t>(j)}), dense));
    rep_.tau_upper = tau_trivial_upper(z, pt.r, q);
    rep_.xi = xi_estimate(z, ranks, c.xi_restarts, c.t_max, derive_seed({seed, 4}));
    const double xi = rep_.xi->value;

    BoundInputs in;
    in.tau1 = rep_.tau1;
    for (Index k : low) in.tau1k.push_back(t1.per_group[static_cast<std::size_t>(k)]);
    in.tau.push_back(rep_.tau1);
    for (const auto& t : rep_.tau_j) in.tau.push_back(t.value);
    in.xi = xi;
    in.lambda = rep_.lambda;
    in.e0 = e0;
    in.t = fit.iterations_run;
    rep_.bounds = evaluate(family, d, in);

    // Cross-check: the same displays with every tau_j (j >= 2) and xi
    // replaced by the trivial upper bound ||Z||_HS.
    BoundInputs up = in;
    for (std::size_t j = 1; j < up.tau.size(); ++j) up.tau[j] = rep_.tau_upper;
    up.xi = out.z_norm;
    const BoundReport upper = evaluate(family, d, up);

    std::vector<double> fin;
    for (std::size_t a = 0; a < low.size(); ++a) fin.push_back(sin_theta(fit.factors[a], low_truth[a], q));
    double fin_max = 0.0;
    for (double v : fin) fin_max = std::max(fin_max, v);
    const double rmse = hs_norm(fit.reconstruction - inst.t);
    const double rslack = kAbs * (1.0 + out.t_norm);
    rep_.empirical["max_sin_theta"] = fin_max;
    for (std::size_t a = 0; a < fin.size(); ++a) rep_.empirical["sin_theta_mode_" + std::to_string(low[a] + 1)] = fin[a];
    rep_.empirical["reconstruction"] = rmse;
    rep_.empirical["z_norm"] = out.z_norm;
    rep_.empirical["iterations"] = static_cast<double>(fit.iterations_run);

    auto& au = rep_.audit;
    {
      // Every sweep t >= 1 of the trace against c tau_1 / lambda + e0 / 2^t; the tightest one is reported.
      const double head = rep_.bounds.values.at("max_sin_theta_t_step") - e0 / std::pow(2.0, static_cast<double>(in.t));
      AuditLine worst;
      bool first = true;
      for (const auto& te : fit.trace) {
        if (te.iteration < 1) continue;
        double m = 0.0;
        for (double v : te.sin_theta) m = std::max(m, v);
        AuditLine l = line("max_sin_theta_t_step", m, head + e0 / std::pow(2.0, static_cast<double>(te.iteration)), kAbs);
        if (first || (!l.pass && worst.pass) || (l.pass == worst.pass && l.margin() < worst.margin())) worst = l;
        first = false;
      }
      if (!first) au.push_back(worst);
    }
    if (rep_.bounds.values.count("reconstruction_t_step") && in.t >= 1)
      au.push_back(line("reconstruction_t_step", rmse, rep_.bounds.values.at("reconstruction_t_step"), rslack));
    au.push_back(line("max_sin_theta_final", fin_max, rep_.bounds.values.at("max_sin_theta_final"), kAbs));
    for (std::size_t a = 0; a < fin.size(); ++a) {
      const std::string key = "sin_theta_mode_" + std::to_string(a + 1);
      au.push_back(line(key, fin[a], rep_.bounds.values.at(key), kAbs));
      au.push_back(line(key + "_trivial_tau", fin[a], upper.values.at(key), kAbs));
    }
    au.push_back(line("reconstruction_final", rmse, rep_.bounds.values.at("reconstruction_final"), rslack));
    au.push_back(line("reconstruction_final_trivial_xi", rmse, upper.values.at("reconstruction_final"), rslack));
    au.push_back(line("xi_within_trivial_upper", xi, out.z_norm, kAbs * (1.0 + out.z_norm)));
    {
      std::vector<OrthonormalBasis> fitted;
      std::size_t a = 0;
      for (Index k = 0; k < d; ++k) {
        if (a < low.size() && low[a] == k) fitted.push_back(fit.factors[a++]);
        else fitted.push_back(truth[static_cast<std::size_t>(k)]);
      }
      const NoiseProjection np = noise_projection_bound(z, truth, fitted);
      rep_.empirical["noise_projection_lhs"] = np.lhs;
      au.push_back(line("noise_projection", np.lhs, np.rhs, 1e-12));
    }
    au.push_back(line("signal_condition", cond * xi, rep_.lambda, 0.0));
    au.push_back(line("initialization_error", e0, std::sqrt(2.0) / 2.0, 1e-12));
    return out;
  });

  AuditResult res;
  res.lines.columns = {"grid", "rep", "name", "empirical", "bound", "margin", "status"};
  res.lines.meta = {{"kind", to_string(c.kind)}, {"table", "audit"}, {"master_seed", std::to_string(c.master_seed)}};
  struct Agg {
    Index n = 0, fails = 0;
    double min_margin = kInf;
  };
  std::map<std::string, Agg> agg;
  std::vector<std::string> agg_order;
  auto& tj = report["trials"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const GridPoint& pt = grid[i / reps];
    const Index rep = static_cast<Index>(i % reps);
    const auto& o = outcomes[i];
    nlohmann::ordered_json e;
    e["grid"] = pt.index;
    e["rep"] = rep;
    e["seed"] = std::to_string(
        trial_seed(c.master_seed, to_string(c.kind), static_cast<std::uint64_t>(pt.index), static_cast<std::uint64_t>(rep)));
    e["iterations"] = o.iterations;
    e["report"] = to_json(o.report);
    tj.push_back(std::move(e));
    for (const auto& l : o.report.audit) {
      res.lines.add_row({static_cast<std::int64_t>(pt.index), static_cast<std::int64_t>(rep), l.name, l.empirical, l.bound,
                         l.margin(), std::string(l.pass ? "PASS" : "FAIL")});
      auto [it, fresh] = agg.try_emplace(l.name);
      if (fresh) agg_order.push_back(l.name);
      ++it->second.n;
      if (!l.pass) {
        ++it->second.fails;
        ++res.violations;
      }
      it->second.min_margin = std::min(it->second.min_margin, l.margin());
    }
  }
  auto& sj = report["summary"] = nlohmann::ordered_json::array();
  for (const auto& name : agg_order) {
    const Agg& a = agg[name];
    nlohmann::ordered_json e;
    e["name"] = name;
    e["trials"] = a.n;
    e["fails"] = a.fails;
    e["min_margin"] = a.min_margin;
    e["status"] = a.fails == 0 ? "PASS" : "FAIL";
    sj.push_back(std::move(e));
  }
  report["violations"] = res.violations;
  report["status"] = res.violations == 0 ? "PASS" : "FAIL";
  res.report = std::move(report);
  return res;
}

void write_audit_outputs(const ExperimentConfig& c, const AuditResult& r) {
  if (!c.output.report.empty()) {
    std::ofstream f(c.output.report, std::ios::binary);
    if (!f) throw IoError("cannot open " + c.output.report + " for writing");
    f << r.report.dump(2) << '\n';
    if (!f) throw IoError("failed writing " + c.output.report);
  }
  if (!c.output.csv.empty()) write_csv(c.output.csv, r.lines);
}

}  // namespace tucker
