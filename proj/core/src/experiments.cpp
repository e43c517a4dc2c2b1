#include "tucker/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "tucker/error.hpp"
#include "tucker/hooi.hpp"
#include "tucker/parallel.hpp"
#include "tucker/perturb.hpp"
#include "tucker/seeding.hpp"

namespace tucker {

namespace {

template <class E>
struct NameTable {
  E value;
  const char* name;
};

constexpr NameTable<ExperimentKind> kKinds[] = {
    {ExperimentKind::DenoiseRecon, "DENOISE_RECON"},   {ExperimentKind::DenoiseSubspace, "DENOISE_SUBSPACE"},
    {ExperimentKind::AlgoCompare, "ALGO_COMPARE"},     {ExperimentKind::Cocluster, "COCLUSTER"},
    {ExperimentKind::BoundsAudit, "BOUNDS_AUDIT"},     {ExperimentKind::LowerBoundCheck, "LOWER_BOUND_CHECK"},
};
constexpr NameTable<Algorithm> kAlgorithms[] = {
    {Algorithm::Hooi, "hooi"}, {Algorithm::OHooi, "ohooi"}, {Algorithm::StHosvd, "sthosvd"}, {Algorithm::THosvd, "thosvd"}};
constexpr NameTable<InitScheme> kInits[] = {{InitScheme::Perturbed, "perturbed"},
                                            {InitScheme::StHosvd, "sthosvd"},
                                            {InitScheme::THosvd, "thosvd"},
                                            {InitScheme::Random, "random"}};
constexpr NameTable<LambdaRule> kRules[] = {
    {LambdaRule::Absolute, "absolute"},         {LambdaRule::SqrtPr, "sqrt_pr"},
    {LambdaRule::Unilateral, "unilateral"},     {LambdaRule::PThreeQuarters, "p_three_quarters"},
    {LambdaRule::Cocluster, "cocluster"},       {LambdaRule::XiMultiple, "xi_multiple"},
};

template <class E, std::size_t N>
std::string name_of(const NameTable<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <class E, std::size_t N>
E parse_name(const NameTable<E> (&table)[N], const std::string& s, const char* what) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  std::string known;
  for (const auto& e : table) known += std::string(known.empty() ? "" : ", ") + e.name;
  throw InvalidArgument(std::string("unknown ") + what + " '" + s + "' (expected one of " + known + ")");
}

std::string dims_label(const Dims& d) {
  std::string s;
  for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "x" : "") + std::to_string(d[i]);
  return s;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

std::vector<std::vector<Index>> singleton_modes(Index d) {
  std::vector<std::vector<Index>> m;
  for (Index k = 0; k < d; ++k) m.push_back({k});
  return m;
}

}  // namespace

std::string to_string(ExperimentKind k) { return name_of(kKinds, k); }
ExperimentKind parse_experiment_kind(const std::string& s) { return parse_name(kKinds, s, "experiment kind"); }
std::string to_string(Algorithm a) { return name_of(kAlgorithms, a); }
Algorithm parse_algorithm(const std::string& s) { return parse_name(kAlgorithms, s, "algorithm"); }
std::string to_string(InitScheme s) { return name_of(kInits, s); }
InitScheme parse_init_scheme(const std::string& s) { return parse_name(kInits, s, "init scheme"); }
std::string to_string(LambdaRule r) { return name_of(kRules, r); }
LambdaRule parse_lambda_rule(const std::string& s) { return parse_name(kRules, s, "lambda rule"); }

double lambda_for(LambdaRule rule, const Dims& dims, Index r, double sigma, double alpha, double xi_hat) {
  const double p = static_cast<double>(dims.front());
  const double pl = static_cast<double>(dims.back());
  const double rr = static_cast<double>(r);
  switch (rule) {
    case LambdaRule::Absolute:
      return alpha;
    case LambdaRule::SqrtPr:
      return alpha * std::sqrt(p * rr) * sigma;
    case LambdaRule::Unilateral:
      return alpha * pl * std::sqrt(rr) / std::sqrt(p) * sigma;
    case LambdaRule::PThreeQuarters:
      return alpha * std::pow(p, 0.75) * sigma;
    case LambdaRule::Cocluster:
      return alpha * std::pow(rr, 1.5) / std::pow(p, 0.75) * sigma;
    case LambdaRule::XiMultiple:
      return alpha * xi_hat;
  }
  throw InvalidArgument("lambda_for: unknown rule");
}

// ---------------------------------------------------------------- config

namespace {

void set_kind_defaults(ExperimentConfig& c) {
  auto cube = [](Index p) { return Dims{p, p, p}; };
  switch (c.kind) {
    case ExperimentKind::DenoiseRecon:
      for (Index p = 20; p <= 100; p += 10) c.dims.push_back(cube(p));
      c.ranks = {5};
      c.sigma = {1, 2, 3, 4};
      c.lambda_rule = LambdaRule::SqrtPr;
      c.alpha = {5};
      c.algorithms = {Algorithm::Hooi};
      break;
    case ExperimentKind::DenoiseSubspace:
      c.dims = {Dims{10, 60, 200}};
      c.ranks = {3, 5};
      c.sigma = {1};
      c.lambda_rule = LambdaRule::Unilateral;
      c.alpha = {0.25, 0.5, 1, 2, 4};
      c.algorithms = {Algorithm::Hooi};
      break;
    case ExperimentKind::AlgoCompare:
      c.dims = {cube(100)};
      c.ranks = {5};
      c.sigma = {1, 2};
      c.lambda_rule = LambdaRule::PThreeQuarters;
      c.alpha = {1, 1.5, 2, 2.5, 3, 3.5, 4};
      c.init = InitScheme::StHosvd;
      c.algorithms = {Algorithm::Hooi, Algorithm::OHooi, Algorithm::StHosvd, Algorithm::THosvd};
      break;
    case ExperimentKind::Cocluster:
      c.dims = {cube(50), cube(80)};
      c.ranks = {3, 5, 8};
      c.sigma = {1};
      c.lambda_rule = LambdaRule::Cocluster;
      c.alpha = {0.3, 0.35, 0.4, 0.45, 0.5, 0.8};
      c.init = InitScheme::StHosvd;
      c.algorithms = {Algorithm::Hooi, Algorithm::OHooi, Algorithm::StHosvd, Algorithm::THosvd};
      break;
    case ExperimentKind::BoundsAudit:
      c.dims = {cube(40)};
      c.ranks = {3};
      c.sigma = {1};
      c.lambda_rule = LambdaRule::XiMultiple;
      c.alpha = {30};
      c.repetitions = 50;
      c.tau_budget = 2;
      c.algorithms = {Algorithm::Hooi};
      break;
    case ExperimentKind::LowerBoundCheck:
      c.dims = {cube(6)};
      c.ranks = {1, 2};
      c.xi_values = {0.5, 1, 3};
      break;
  }
}

template <class T>
std::vector<T> scalar_or_list(const nlohmann::json& v, const char* key) {
  std::vector<T> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(e.get<T>());
  } else if (v.is_number()) {
    out.push_back(v.get<T>());
  } else {
    throw InvalidArgument(std::string("config: '") + key + "' must be a number or a list of numbers");
  }
  return out;
}

Dims parse_dims_entry(const nlohmann::json& v) {
  if (!v.is_array() || v.empty()) throw InvalidArgument("config: each dims entry must be a nonempty list");
  Dims d;
  for (const auto& e : v) d.push_back(e.get<Index>());
  return d;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  if (!j.contains("kind")) throw InvalidArgument("config: missing 'kind'");
  ExperimentConfig c;
  c.kind = parse_experiment_kind(j.at("kind").get<std::string>());
  set_kind_defaults(c);
  static const std::set<std::string> known = {
      "kind",     "dims",         "p_grid",        "order",          "ranks",      "sigma",         "lambda_rule",
      "alpha",    "xi",           "repetitions",   "master_seed",    "t_max",      "stop_tol",      "init",
      "algorithms", "xi_restarts", "tau_budget",   "kmeans_restarts", "pilot_safety", "compute_xi", "enforce_conditions",
      "full_scale", "audit_variant", "output"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw InvalidArgument("config: unknown key '" + k + "'");

  try {
    if (j.contains("dims") && j.contains("p_grid")) throw InvalidArgument("config: give either 'dims' or 'p_grid'");
    if (j.contains("dims")) {
      const auto& v = j.at("dims");
      c.dims.clear();
      if (v.is_array() && !v.empty() && v.front().is_array()) {
        for (const auto& e : v) c.dims.push_back(parse_dims_entry(e));
      } else {
        c.dims.push_back(parse_dims_entry(v));
      }
    }
    if (j.contains("p_grid")) {
      const Index order = j.value("order", Index{3});
      if (order < 2) throw InvalidArgument("config: 'order' must be >= 2");
      c.dims.clear();
      for (Index p : scalar_or_list<Index>(j.at("p_grid"), "p_grid")) c.dims.push_back(Dims(static_cast<std::size_t>(order), p));
    } else if (j.contains("order")) {
      throw InvalidArgument("config: 'order' only applies together with 'p_grid'");
    }
    if (j.contains("ranks")) c.ranks = scalar_or_list<Index>(j.at("ranks"), "ranks");
    if (j.contains("sigma")) c.sigma = scalar_or_list<double>(j.at("sigma"), "sigma");
    if (j.contains("lambda_rule")) c.lambda_rule = parse_lambda_rule(j.at("lambda_rule").get<std::string>());
    if (j.contains("alpha")) c.alpha = scalar_or_list<double>(j.at("alpha"), "alpha");
    if (j.contains("xi")) c.xi_values = scalar_or_list<double>(j.at("xi"), "xi");
    c.repetitions = j.value("repetitions", c.repetitions);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.t_max = j.value("t_max", c.t_max);
    c.stop_tol = j.value("stop_tol", c.stop_tol);
    if (j.contains("init")) c.init = parse_init_scheme(j.at("init").get<std::string>());
    if (j.contains("algorithms")) {
      c.algorithms.clear();
      for (const auto& a : j.at("algorithms")) c.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    }
    c.xi_restarts = j.value("xi_restarts", c.xi_restarts);
    c.tau_budget = j.value("tau_budget", c.tau_budget);
    c.kmeans_restarts = j.value("kmeans_restarts", c.kmeans_restarts);
    c.pilot_safety = j.value("pilot_safety", c.pilot_safety);
    c.compute_xi = j.value("compute_xi", c.compute_xi);
    c.enforce_conditions = j.value("enforce_conditions", c.enforce_conditions);
    c.full_scale = j.value("full_scale", c.full_scale);
    if (j.contains("audit_variant")) {
      const auto v = j.at("audit_variant").get<std::string>();
      if (v == "asymmetric") c.audit_variant = AuditVariant::Asymmetric;
      else if (v == "partial") c.audit_variant = AuditVariant::Partial;
      else throw InvalidArgument("config: audit_variant must be 'asymmetric' or 'partial'");
    }
    if (j.contains("output")) {
      const auto& o = j.at("output");
      static const std::set<std::string> keys = {"csv", "summary", "timing", "report"};
      for (const auto& [k, v] : o.items())
        if (!keys.count(k)) throw InvalidArgument("config: unknown output key '" + k + "'");
      c.output.csv = o.value("csv", std::string());
      c.output.summary = o.value("summary", std::string());
      c.output.timing = o.value("timing", std::string());
      c.output.report = o.value("report", std::string());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }

  if (c.full_scale && c.kind == ExperimentKind::DenoiseSubspace && !j.contains("dims")) c.dims = {Dims{10, 100, 500}};

  if (c.repetitions < 1) throw InvalidArgument("config: repetitions must be >= 1");
  if (c.dims.empty() || c.ranks.empty() || c.sigma.empty() || c.alpha.empty())
    throw InvalidArgument("config: dims, ranks, sigma and alpha grids must be nonempty");
  if (c.kind == ExperimentKind::LowerBoundCheck && c.xi_values.empty())
    throw InvalidArgument("config: lower-bound check needs a nonempty 'xi' list");
  const std::size_t order = c.dims.front().size();
  for (const auto& d : c.dims) {
    if (d.size() != order) throw InvalidArgument("config: every dims entry must have the same order");
    for (Index p : d)
      if (p < 1) throw InvalidArgument("config: dimensions must be >= 1");
  }
  for (Index r : c.ranks)
    if (r < 1) throw InvalidArgument("config: ranks must be >= 1");
  for (double s : c.sigma)
    if (!(s >= 0.0)) throw InvalidArgument("config: sigma must be >= 0");
  if (c.t_max < 0) throw InvalidArgument("config: t_max must be >= 0");
  if (c.xi_restarts < 1 || c.tau_budget < 1 || c.kmeans_restarts < 1)
    throw InvalidArgument("config: xi_restarts, tau_budget and kmeans_restarts must be >= 1");
  if (!(c.pilot_safety > 0.0)) throw InvalidArgument("config: pilot_safety must be positive");
  if (c.kind != ExperimentKind::LowerBoundCheck && c.algorithms.empty())
    throw InvalidArgument("config: algorithms must be nonempty");
  if (c.audit_variant == AuditVariant::Partial && order != 3)
    throw InvalidArgument("config: the partial audit variant needs order-3 dims");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------- generators

LowRankInstance gen_low_rank_instance(const Dims& dims, Index r, double lambda0, Rng& rng) {
  if (dims.empty()) throw InvalidArgument("gen_low_rank_instance: empty dims");
  for (Index p : dims)
    if (r < 1 || r > p) throw InvalidArgument("gen_low_rank_instance: need 1 <= r <= every dim");
  const Index d = static_cast<Index>(dims.size());
  const Dims cd(dims.size(), r);
  std::vector<double> cv(static_cast<std::size_t>(product(cd)), 0.0);
  Index stride = 0, s = 1;
  for (Index k = 0; k < d; ++k, s *= r) stride += s;
  for (Index i = 0; i < r; ++i) cv[static_cast<std::size_t>(i * stride)] = static_cast<double>(i + 1) * lambda0;
  DenseTensor core(cd, std::move(cv));
  std::vector<OrthonormalBasis> factors;
  for (Index p : dims) factors.push_back(random_orthonormal(p, r, rng));
  DenseTensor t = expand_core(core, factors, singleton_modes(d));
  return LowRankInstance{std::move(t), std::move(core), std::move(factors)};
}

std::vector<OrthonormalBasis> perturbed_init(const std::vector<OrthonormalBasis>& factors, Rng& rng) {
  std::vector<OrthonormalBasis> out;
  for (const auto& u : factors) {
    const Index p = u.p(), r = u.r();
    if (p < 2 * r)
      throw InvalidArgument("perturbed_init: need p >= 2r (p=" + std::to_string(p) + ", r=" + std::to_string(r) + ")");
    const Matrix perp = orth_complement(u).matrix();
    const Matrix o = random_orthonormal(p - r, r, rng).matrix();
    out.push_back(OrthonormalBasis((u.matrix() + perp * o) / std::sqrt(2.0)));
  }
  return out;
}

DenseTensor gaussian_noise(const Dims& dims, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw InvalidArgument("gaussian_noise: sigma must be >= 0");
  std::vector<double> v(static_cast<std::size_t>(product(dims)), 0.0);
  if (sigma > 0.0) {
    std::normal_distribution<double> n(0.0, sigma);
    for (double& x : v) x = n(rng);
  }
  return DenseTensor(dims, std::move(v));
}

BlockModel gen_block_model(const Dims& dims, Index r, double lambda, Rng& rng) {
  if (dims.empty()) throw InvalidArgument("gen_block_model: empty dims");
  std::vector<MembershipMatrix> m;
  for (Index p : dims) m.push_back(balanced_membership(p, r, rng));
  const Dims bd(dims.size(), r);
  std::vector<double> bv(static_cast<std::size_t>(product(bd)));
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& x : bv) x = n(rng);
  const DenseTensor b0(bd, std::move(bv));
  double smin = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < b0.order(); ++k) smin = std::min(smin, singular_values(matricize(b0, k))(r - 1));
  if (!(smin > 0.0)) throw InvalidArgument("gen_block_model: degenerate core draw");
  DenseTensor b = (lambda / smin) * b0;
  DenseTensor t = block_expand(b, m);
  return BlockModel{std::move(b), std::move(m), std::move(t)};
}

// ---------------------------------------------------------------- grid

std::vector<GridPoint> expand_grid(const ExperimentConfig& c) {
  std::vector<GridPoint> out;
  Index g = 0;
  for (const auto& dims : c.dims)
    for (Index r : c.ranks)
      for (double sigma : c.sigma)
        for (double alpha : c.alpha) {
          GridPoint pt;
          pt.index = g;
          pt.dims = dims;
          pt.r = r;
          pt.sigma = sigma;
          pt.alpha = alpha;
          double xi_hat = 0.0;
          if (c.lambda_rule == LambdaRule::XiMultiple) {
            const std::uint64_t s = derive_seed({c.master_seed, label_hash(to_string(c.kind)),
                                                 static_cast<std::uint64_t>(g), label_hash("pilot")});
            Rng rng(s);
            const DenseTensor z = gaussian_noise(dims, sigma, rng);
            std::vector<Index> ranks(dims.size(), r);
            if (c.kind == ExperimentKind::BoundsAudit && c.audit_variant == AuditVariant::Partial)
              ranks.back() = dims.back();
            for (std::size_t k = 0; k < dims.size(); ++k) ranks[k] = std::min(ranks[k], dims[k]);
            pt.xi_pilot = xi_estimate(z, ranks, c.xi_restarts, c.t_max, derive_seed({s, 1})).value;
            xi_hat = c.pilot_safety * *pt.xi_pilot;
          }
          pt.lambda = lambda_for(c.lambda_rule, dims, r, sigma, alpha, xi_hat);
          out.push_back(std::move(pt));
          ++g;
        }
  return out;
}

// ---------------------------------------------------------------- summaries

Table summarize(const Table& trials, const std::vector<std::string>& keys, const std::vector<std::string>& metrics) {
  Table s;
  s.meta = trials.meta;
  s.meta["table"] = "summary";
  std::vector<std::size_t> kc, mc;
  for (const auto& k : keys) {
    kc.push_back(trials.column(k));
    s.columns.push_back(k);
  }
  s.columns.push_back("n");
  for (const auto& m : metrics) {
    mc.push_back(trials.column(m));
    s.columns.push_back(m + "_mean");
    s.columns.push_back(m + "_se");
  }
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < trials.rows.size(); ++i) {
    std::string key;
    for (std::size_t c : kc) key += format_cell(trials.rows[i][c]) + '\x1f';
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(i);
  }
  auto as_double = [](const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
    throw InvalidArgument("summarize: metric cell is not numeric");
  };
  for (const auto& key : order) {
    const auto& idx = groups[key];
    std::vector<Cell> row;
    for (std::size_t c : kc) row.push_back(trials.rows[idx.front()][c]);
    row.emplace_back(static_cast<std::int64_t>(idx.size()));
    for (std::size_t c : mc) {
      double mean = 0.0;
      for (std::size_t i : idx) mean += as_double(trials.rows[i][c]);
      mean /= static_cast<double>(idx.size());
      double ss = 0.0;
      for (std::size_t i : idx) ss += std::pow(as_double(trials.rows[i][c]) - mean, 2);
      const double n = static_cast<double>(idx.size());
      const double se = idx.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
      row.emplace_back(mean);
      row.emplace_back(se);
    }
    s.add_row(std::move(row));
  }
  return s;
}

void write_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
  if (!config.output.csv.empty()) write_csv(config.output.csv, result.trials);
  if (!config.output.summary.empty()) write_csv(config.output.summary, result.summary);
  if (!config.output.timing.empty()) write_csv(config.output.timing, result.timing);
}

// ---------------------------------------------------------------- trials

namespace {

struct AlgoRun {
  Algorithm algo;
  TuckerFit fit;
  double ms;
};

/// Runs every requested algorithm on the same observation. A one-shot
/// initializer is computed once and its time charged to the iterative runs.
std::vector<AlgoRun> run_algorithms(const ExperimentConfig& c, const DenseTensor& obs, const SymmetricGroups& groups,
                                    const std::vector<OrthonormalBasis>* truth, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  std::optional<TuckerFit> st, th;
  double st_ms = 0.0, th_ms = 0.0;
  auto need_st = [&] {
    if (!st) {
      const auto t0 = clock::now();
      st = st_hosvd(obs, groups);
      st_ms = elapsed_ms(t0);
    }
  };
  auto need_th = [&] {
    if (!th) {
      const auto t0 = clock::now();
      th = t_hosvd(obs, groups);
      th_ms = elapsed_ms(t0);
    }
  };
  std::vector<OrthonormalBasis> init;
  double init_ms = 0.0;
  const bool iterative = std::any_of(c.algorithms.begin(), c.algorithms.end(),
                                     [](Algorithm a) { return a == Algorithm::Hooi || a == Algorithm::OHooi; });
  if (iterative) {
    switch (c.init) {
      case InitScheme::Perturbed: {
        if (!truth) throw InvalidArgument("perturbed init needs the true factors");
        Rng rng(derive_seed({seed, 3}));
        init = perturbed_init(*truth, rng);
        break;
      }
      case InitScheme::StHosvd:
        need_st();
        init = st->factors;
        init_ms = st_ms;
        break;
      case InitScheme::THosvd:
        need_th();
        init = th->factors;
        init_ms = th_ms;
        break;
      case InitScheme::Random: {
        const auto t0 = clock::now();
        init = initial_factors(obs, groups, init::Random{derive_seed({seed, 3})});
        init_ms = elapsed_ms(t0);
        break;
      }
    }
  }
  std::vector<AlgoRun> out;
  for (Algorithm a : c.algorithms) {
    switch (a) {
      case Algorithm::Hooi: {
        HooiOptions o;
        o.t_max = c.t_max;
        o.stop_tol = c.stop_tol;
        const auto t0 = clock::now();
        TuckerFit f = hooi(obs, groups, init::Explicit{init}, o);
        out.push_back({a, std::move(f), init_ms + elapsed_ms(t0)});
        break;
      }
      case Algorithm::OHooi: {
        const auto t0 = clock::now();
        TuckerFit f = one_step_hooi(obs, groups, init::Explicit{init});
        out.push_back({a, std::move(f), init_ms + elapsed_ms(t0)});
        break;
      }
      case Algorithm::StHosvd:
        need_st();
        out.push_back({a, *st, st_ms});
        break;
      case Algorithm::THosvd:
        need_th();
        out.push_back({a, *th, th_ms});
        break;
    }
  }
  return out;
}

struct TrialRows {
  std::vector<std::vector<Cell>> rows;
  std::vector<std::vector<Cell>> timing;
};

std::vector<Cell> point_cells(const GridPoint& pt, Index rep, std::uint64_t seed) {
  return {static_cast<std::int64_t>(pt.index),
          static_cast<std::int64_t>(rep),
          std::to_string(seed),
          static_cast<std::int64_t>(pt.dims.front()),
          dims_label(pt.dims),
          static_cast<std::int64_t>(pt.r),
          pt.sigma,
          pt.alpha,
          pt.lambda};
}

const std::vector<std::string> kPointColumns = {"grid", "rep", "seed", "p", "dims", "r", "sigma", "alpha", "lambda"};
const std::vector<std::string> kSummaryKeys = {"grid", "p", "dims", "r", "sigma", "alpha", "lambda", "algo"};

template <class Job>
Table collect(const ExperimentConfig& c, const std::vector<GridPoint>& grid, const std::vector<std::string>& columns,
              Table& timing, Job job) {
  const std::size_t reps = static_cast<std::size_t>(c.repetitions);
  auto results = parallel_map<TrialRows>(grid.size() * reps, [&](std::size_t i) {
    const GridPoint& pt = grid[i / reps];
    const Index rep = static_cast<Index>(i % reps);
    const std::uint64_t seed =
        trial_seed(c.master_seed, to_string(c.kind), static_cast<std::uint64_t>(pt.index), static_cast<std::uint64_t>(rep));
    return job(pt, rep, seed);
  });
  Table t;
  t.columns = columns;
  t.meta = {{"kind", to_string(c.kind)}, {"table", "trials"}, {"master_seed", std::to_string(c.master_seed)}};
  timing.columns = {"grid", "rep", "algo", "runtime_ms"};
  timing.meta = {{"kind", to_string(c.kind)}, {"table", "timing"}};
  for (auto& r : results) {
    for (auto& row : r.rows) t.add_row(std::move(row));
    for (auto& row : r.timing) timing.add_row(std::move(row));
  }
  return t;
}

}  // namespace

ExperimentResult run_denoise_experiment(const ExperimentConfig& c) {
  if (c.kind != ExperimentKind::DenoiseRecon && c.kind != ExperimentKind::DenoiseSubspace &&
      c.kind != ExperimentKind::AlgoCompare)
    throw InvalidArgument("run_denoise_experiment: kind " + to_string(c.kind) + " is not a denoising experiment");
  const auto grid = expand_grid(c);
  const Index d = static_cast<Index>(c.dims.front().size());
  std::vector<std::string> cols = kPointColumns;
  cols.push_back("algo");
  std::vector<std::string> metrics;
  for (Index k = 1; k <= d; ++k) metrics.push_back("sin_theta_" + std::to_string(k));
  for (Index k = 1; k <= d; ++k) metrics.push_back("scaled_sin_theta_" + std::to_string(k));
  for (const char* m : {"sin_theta_max", "sin_theta_mean", "rmse", "rmse_ratio", "z_norm", "captured_norm", "tau1", "iterations"})
    metrics.push_back(m);
  if (c.compute_xi) metrics.push_back("xi");
  cols.insert(cols.end(), metrics.begin(), metrics.end());

  ExperimentResult res;
  res.trials = collect(c, grid, cols, res.timing, [&](const GridPoint& pt, Index rep, std::uint64_t seed) {
    Rng sig(derive_seed({seed, 1})), noise(derive_seed({seed, 2}));
    const LowRankInstance inst = gen_low_rank_instance(pt.dims, pt.r, pt.lambda, sig);
    const DenseTensor z = gaussian_noise(pt.dims, pt.sigma, noise);
    const DenseTensor obs = inst.t + z;
    const auto groups = SymmetricGroups::asymmetric(pt.dims, std::vector<Index>(pt.dims.size(), pt.r));
    const double z_norm = hs_norm(z);
    const double t1 = tau1(z, inst.factors, groups, SchattenQ::inf()).tau1;
    double xi = 0.0;
    if (c.compute_xi)
      xi = xi_estimate(z, groups.ranks(), c.xi_restarts, c.t_max, derive_seed({seed, 4})).value;
    TrialRows out;
    for (auto& run : run_algorithms(c, obs, groups, &inst.factors, seed)) {
      std::vector<Cell> row = point_cells(pt, rep, seed);
      row.emplace_back(to_string(run.algo));
      std::vector<double> s;
      for (Index k = 0; k < d; ++k)
        s.push_back(sin_theta(run.fit.factors[static_cast<std::size_t>(k)], inst.factors[static_cast<std::size_t>(k)],
                              SchattenQ::inf()));
      double smax = 0.0, smean = 0.0;
      for (double v : s) {
        row.emplace_back(v);
        smax = std::max(smax, v);
        smean += v / static_cast<double>(d);
      }
      for (Index k = 0; k < d; ++k)
        row.emplace_back(s[static_cast<std::size_t>(k)] / std::sqrt(static_cast<double>(pt.dims[static_cast<std::size_t>(k)])));
      const double rmse = hs_norm(run.fit.reconstruction - inst.t);
      row.emplace_back(smax);
      row.emplace_back(smean);
      row.emplace_back(rmse);
      row.emplace_back(z_norm > 0.0 ? rmse / z_norm : 0.0);
      row.emplace_back(z_norm);
      row.emplace_back(run.fit.captured_norm());
      row.emplace_back(t1);
      row.emplace_back(static_cast<std::int64_t>(run.fit.iterations_run));
      if (c.compute_xi) row.emplace_back(xi);
      out.rows.push_back(std::move(row));
      out.timing.push_back({static_cast<std::int64_t>(pt.index), static_cast<std::int64_t>(rep), to_string(run.algo), run.ms});
    }
    return out;
  });
  res.summary = summarize(res.trials, kSummaryKeys, metrics);
  return res;
}

ExperimentResult run_cocluster_experiment(const ExperimentConfig& c) {
  if (c.kind != ExperimentKind::Cocluster) throw InvalidArgument("run_cocluster_experiment: kind must be COCLUSTER");
  const auto grid = expand_grid(c);
  const Index d = static_cast<Index>(c.dims.front().size());
  std::vector<std::string> cols = kPointColumns;
  cols.push_back("algo");
  std::vector<std::string> metrics;
  for (Index k = 1; k <= d; ++k) metrics.push_back("err_" + std::to_string(k));
  metrics.push_back("err");
  metrics.push_back("err_tilde");
  metrics.push_back("captured_norm");
  cols.insert(cols.end(), metrics.begin(), metrics.end());
  // Enters the misclassification bound constant only; reported, not audited.
  for (Index k = 1; k <= d; ++k) cols.push_back("second_cluster_size_" + std::to_string(k));

  ExperimentResult res;
  res.trials = collect(c, grid, cols, res.timing, [&](const GridPoint& pt, Index rep, std::uint64_t seed) {
    Rng sig(derive_seed({seed, 1})), noise(derive_seed({seed, 2}));
    const BlockModel bm = gen_block_model(pt.dims, pt.r, pt.lambda, sig);
    const DenseTensor obs = bm.t + gaussian_noise(pt.dims, pt.sigma, noise);
    const auto groups = SymmetricGroups::asymmetric(pt.dims, std::vector<Index>(pt.dims.size(), pt.r));
    std::optional<std::vector<OrthonormalBasis>> truth;
    if (c.init == InitScheme::Perturbed) truth = block_tucker(bm.core, bm.memberships).factors;
    KMeansOptions km;
    km.restarts = c.kmeans_restarts;
    km.seed = derive_seed({seed, 4});
    TrialRows out;
    for (auto& run : run_algorithms(c, obs, groups, truth ? &*truth : nullptr, seed)) {
      using clock = std::chrono::steady_clock;
      const auto t0 = clock::now();
      const auto hat = cluster_factors(run.fit, km);
      const double km_ms = elapsed_ms(t0);
      std::vector<Cell> row = point_cells(pt, rep, seed);
      row.emplace_back(to_string(run.algo));
      double mean = 0.0, tilde = 0.0;
      for (Index k = 0; k < d; ++k) {
        const double e = misclass_err(hat[static_cast<std::size_t>(k)], bm.memberships[static_cast<std::size_t>(k)]);
        row.emplace_back(e);
        mean += e / static_cast<double>(d);
        tilde += (pt.r <= 8 ? worst_case_err(hat[static_cast<std::size_t>(k)], bm.memberships[static_cast<std::size_t>(k)])
                            : std::nan("")) /
                 static_cast<double>(d);
      }
      row.emplace_back(mean);
      row.emplace_back(tilde);
      row.emplace_back(run.fit.captured_norm());
      for (const auto& m : bm.memberships) {
        auto sizes = m.cluster_sizes();
        std::sort(sizes.begin(), sizes.end(), std::greater<>());
        row.emplace_back(static_cast<std::int64_t>(sizes.size() > 1 ? sizes[1] : 0));
      }
      out.rows.push_back(std::move(row));
      out.timing.push_back(
          {static_cast<std::int64_t>(pt.index), static_cast<std::int64_t>(rep), to_string(run.algo), run.ms + km_ms});
    }
    return out;
  });
  res.summary = summarize(res.trials, kSummaryKeys, metrics);
  return res;
}

ExperimentResult run_lower_bound_check(const ExperimentConfig& c) {
  ExperimentResult res;
  res.trials.columns = {"dims", "r", "xi", "shared_observation", "z1_norm", "z2_norm", "t_gap", "sqrt2_xi", "pass"};
  res.trials.meta = {{"kind", to_string(ExperimentKind::LowerBoundCheck)}, {"table", "trials"}};
  for (const auto& dims : c.dims)
    for (Index r : c.ranks)
      for (double xi : c.xi_values) {
        const auto inst = lower_bound_instance(dims, r, xi);
        const bool shared = (inst.t1 + inst.z1) == (inst.t2 + inst.z2);
        const double n1 = hs_norm(inst.z1), n2 = hs_norm(inst.z2), gap = hs_norm(inst.t1 - inst.t2);
        const double target = std::sqrt(2.0) * xi;
        const double tol = 1e-12 * std::max(1.0, xi);
        const bool pass = shared && std::abs(n1 - xi) <= tol && std::abs(n2 - xi) <= tol && std::abs(gap - target) <= tol;
        res.trials.add_row({dims_label(dims), static_cast<std::int64_t>(r), xi, static_cast<std::int64_t>(shared), n1, n2,
                            gap, target, static_cast<std::int64_t>(pass)});
      }
  res.summary = res.trials;
  res.summary.meta["table"] = "summary";
  return res;
}

}  // namespace tucker
