// Acceptance suite: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the listed numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "tucker/audit.hpp"
#include "tucker/cocluster.hpp"
#include "tucker/csv.hpp"
#include "tucker/experiments.hpp"
#include "tucker/hooi.hpp"
#include "tucker/perturb.hpp"
#include "tucker/plot.hpp"
#include "tucker/seeding.hpp"

using namespace tucker;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string g(double v) { return fmt("%.4g", v); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CsvData parse(const Table& t) {
  std::ostringstream o;
  write_csv(o, t);
  std::istringstream in(o.str());
  return read_csv(in);
}

// Rows of a summary keyed by the listed columns.
struct Summary {
  CsvData d;
  double at(std::size_t row, const std::string& col) const { return d.number(row, d.column(col)); }
  const std::string& str(std::size_t row, const std::string& col) const { return d.rows[row][d.column(col)]; }
  std::size_t rows() const { return d.rows.size(); }
};

// ---------------------------------------------------------------- 1

Outcome exact_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_rel = 0.0, worst_sin = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Index p = 20 + 10 * (i % 5);
    const Index r = 2 + (i / 5);
    Rng rng(derive_seed({0xACCE55, static_cast<std::uint64_t>(i)}));
    const Dims dims{p, p, p};
    const auto inst = gen_low_rank_instance(dims, r, 1.0, rng);
    const auto init = perturbed_init(inst.factors, rng);
    const auto fit = hooi(inst.t, SymmetricGroups::asymmetric(dims, {r, r, r}), init::Explicit{init});
    worst_rel = std::max(worst_rel, hs_norm(fit.reconstruction - inst.t) / hs_norm(inst.t));
    for (std::size_t k = 0; k < 3; ++k)
      worst_sin = std::max(worst_sin, sin_theta(fit.factors[k], inst.factors[k], SchattenQ::inf()));
  }
  const double secs = seconds_since(t0);
  return {worst_rel <= 1e-8 && worst_sin <= 1e-8 && secs < 30.0,
          "max_rel_err=" + g(worst_rel) + " max_sin_theta=" + g(worst_sin) + " runtime_s=" + fmt("%.1f", secs)};
}

// ---------------------------------------------------------------- 2

Outcome unfolding_identity() {
  std::mt19937_64 rng(0x1DE17);
  const Index cap[3] = {6, 7, 8};
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Dims dims(3), ranks(3);
    std::vector<Matrix> u;
    for (std::size_t k = 0; k < 3; ++k) {
      dims[k] = std::uniform_int_distribution<Index>(1, cap[k])(rng);
      ranks[k] = std::uniform_int_distribution<Index>(1, dims[k])(rng);
      u.push_back(gaussian_matrix(dims[k], ranks[k], rng));
    }
    const DenseTensor s = gaussian_noise(ranks, 1.0, rng);
    DenseTensor t = s;
    for (Index k = 0; k < 3; ++k) t = mode_product(t, k, u[static_cast<std::size_t>(k)]);
    for (Index k = 0; k < 3; ++k) {
      const Matrix rhs = oracle::unfolding_identity_rhs(s, u, k);
      const double den = rhs.norm();
      if (den == 0.0) continue;
      worst = std::max(worst, (matricize(t, k) - rhs).norm() / den);
    }
  }
  return {worst <= 1e-12, "instances=100 max_rel_err=" + g(worst)};
}

// ---------------------------------------------------------------- 3

Outcome lower_bound_fixture() {
  bool ok = true;
  double worst = 0.0;
  for (Index r : {1, 2})
    for (double xi : {0.5, 1.0, 3.0}) {
      const auto inst = lower_bound_instance({6, 6, 6}, r, xi);
      ok = ok && (inst.t1 + inst.z1) == (inst.t2 + inst.z2);
      const double e = std::max({std::abs(hs_norm(inst.z1) - xi), std::abs(hs_norm(inst.z2) - xi),
                                 std::abs(hs_norm(inst.t1 - inst.t2) - std::sqrt(2.0) * xi)});
      worst = std::max(worst, e);
      for (Index k = 0; k < 3; ++k) {
        const Vector s = singular_values(matricize(inst.t1, k));
        ok = ok && s(r - 1) > 0.0 && (s.size() == r || s(r) == 0.0);
      }
    }
  return {ok && worst <= 1e-12, std::string("shared_observation_and_rank=") + (ok ? "true" : "false") +
                                    " max_norm_err=" + g(worst) + " gap/xi=" + g(std::sqrt(2.0))};
}

// ---------------------------------------------------------------- 4

Outcome bounds_audit() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto c = parse_config(nlohmann::json{{"kind", "BOUNDS_AUDIT"},
                                             {"dims", {{40, 40, 40}}},
                                             {"ranks", {3}},
                                             {"alpha", {30}},
                                             {"repetitions", 50},
                                             {"master_seed", 2024}});
  const auto res = run_bounds_audit(c);
  const double secs = seconds_since(t0);
  std::set<std::string> required{"max_sin_theta_t_step",    "sin_theta_mode_1",
                                 "sin_theta_mode_2",        "sin_theta_mode_3",
                                 "reconstruction_final",    "xi_within_trivial_upper",
                                 "sin_theta_mode_1_trivial_tau", "reconstruction_final_trivial_xi",
                                 "noise_projection",        "signal_condition"};
  std::string worst;
  bool all_trials = true;
  for (const auto& s : res.report.at("summary")) {
    const std::string name = s.at("name").get<std::string>();
    required.erase(name);
    all_trials = all_trials && s.at("trials").get<Index>() == 50;
    if (name == "noise_projection" || name == "max_sin_theta_t_step" || name == "reconstruction_final")
      worst += " " + name + "_min_margin=" + g(s.at("min_margin").get<double>());
  }
  return {res.violations == 0 && required.empty() && all_trials && secs < 300.0,
          "trials=50 violations=" + std::to_string(res.violations) + worst + " runtime_s=" + fmt("%.1f", secs)};
}

// ---------------------------------------------------------------- 5

Outcome denoise_recon() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto c = parse_config(nlohmann::json{{"kind", "DENOISE_RECON"},
                                             {"p_grid", {20, 40, 60, 80, 100}},
                                             {"order", 3},
                                             {"repetitions", 30},
                                             {"master_seed", 55}});
  const Summary s{parse(run_denoise_experiment(c).summary)};
  const double secs = seconds_since(t0);
  std::map<double, std::vector<std::pair<double, double>>> by_sigma, by_p;
  double worst_ratio = 0.0;
  std::string worst_at;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const double p = s.at(i, "p"), sigma = s.at(i, "sigma"), rmse = s.at(i, "rmse_mean");
    by_sigma[sigma].push_back({p, rmse});
    by_p[p].push_back({sigma, rmse});
    const double ratio = rmse / s.at(i, "z_norm_mean");
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_at = "p=" + g(p) + ",sigma=" + g(sigma);
    }
  }
  auto min_spearman = [](const std::map<double, std::vector<std::pair<double, double>>>& m) {
    double lo = 1.0;
    for (const auto& [key, pts] : m) {
      std::vector<double> x, y;
      for (const auto& [a, b] : pts) {
        x.push_back(a);
        y.push_back(b);
      }
      lo = std::min(lo, oracle::spearman(x, y));
    }
    return lo;
  };
  const double sp_p = min_spearman(by_sigma), sp_sigma = min_spearman(by_p);
  return {sp_p >= 0.95 && sp_sigma >= 0.95 && worst_ratio < 0.2 && secs < 600.0,
          "min_spearman_p=" + g(sp_p) + " min_spearman_sigma=" + g(sp_sigma) + " max_rmse_over_znorm=" +
              g(worst_ratio) + " at " + worst_at + " runtime_s=" + fmt("%.1f", secs)};
}

// ---------------------------------------------------------------- 6

Outcome unilateral() {
  const auto c = parse_config(nlohmann::json{{"kind", "DENOISE_SUBSPACE"},
                                             {"dims", {{10, 60, 200}}},
                                             {"ranks", {3}},
                                             {"repetitions", 30},
                                             {"master_seed", 66}});
  const Summary s{parse(run_denoise_experiment(c).summary)};
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.rows(); ++i)
    if (s.at(i, "alpha") > s.at(best, "alpha")) best = i;
  std::vector<double> v;
  for (int k = 1; k <= 3; ++k) v.push_back(s.at(best, "scaled_sin_theta_" + std::to_string(k) + "_mean"));
  const double spread = *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
  return {spread <= 2.0, "alpha=" + g(s.at(best, "alpha")) + " scaled_sin_theta=(" + g(v[0]) + "," + g(v[1]) + "," +
                             g(v[2]) + ") spread=" + g(spread)};
}

// ---------------------------------------------------------------- 7

Outcome algorithm_ordering() {
  const auto c = parse_config(nlohmann::json{{"kind", "ALGO_COMPARE"},
                                             {"dims", {{100, 100, 100}}},
                                             {"ranks", {5}},
                                             {"sigma", {1}},
                                             {"alpha", {2, 3, 4}},
                                             {"repetitions", 30},
                                             {"master_seed", 77}});
  const CsvData d = parse(run_denoise_experiment(c).trials);
  // (alpha, rep) -> algo -> rmse
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> paired;
  for (std::size_t i = 0; i < d.rows.size(); ++i)
    paired[{d.rows[i][d.column("alpha")], d.rows[i][d.column("rep")]}][d.rows[i][d.column("algo")]] =
        d.number(i, d.column("rmse"));
  std::map<std::string, std::map<std::string, double>> mean;
  std::map<std::string, int> wins, n;
  for (const auto& [key, algos] : paired) {
    for (const auto& [a, v] : algos) mean[key.first][a] += v / 30.0;
    wins[key.first] += algos.at("hooi") < algos.at("thosvd");
    ++n[key.first];
  }
  bool ok = true;
  std::string detail;
  for (const auto& [alpha, m] : mean) {
    const bool order = m.at("hooi") <= m.at("ohooi") && m.at("ohooi") <= m.at("sthosvd") && m.at("hooi") < m.at("thosvd");
    const double rate = static_cast<double>(wins[alpha]) / n[alpha];
    ok = ok && order && rate >= 0.9 && n[alpha] == 30;
    detail += " alpha=" + alpha + ":hooi=" + fmt("%.7g", m.at("hooi")) + ",ohooi=" + fmt("%.7g", m.at("ohooi")) + ",sthosvd=" +
              g(m.at("sthosvd")) + ",thosvd=" + g(m.at("thosvd")) + ",win=" + g(rate);
  }
  return {ok, detail.substr(1)};
}

// ---------------------------------------------------------------- 8

Outcome coclustering() {
  const std::vector<double> alphas{0.3, 0.35, 0.4, 0.45, 0.5, 0.8};
  const auto c = parse_config(nlohmann::json{{"kind", "COCLUSTER"},
                                             {"dims", {{50, 50, 50}}},
                                             {"ranks", {3, 5}},
                                             {"sigma", {1}},
                                             {"alpha", alphas},
                                             {"algorithms", {"hooi"}},
                                             {"repetitions", 30},
                                             {"master_seed", 88}});
  const Summary s{parse(run_cocluster_experiment(c).summary)};
  std::map<Index, std::map<double, double>> err;
  for (std::size_t i = 0; i < s.rows(); ++i)
    err[static_cast<Index>(s.at(i, "r"))][s.at(i, "alpha")] = s.at(i, "err_mean");
  bool ok = true;
  std::string detail;
  for (const auto& [r, m] : err) {
    std::vector<double> x, y;
    for (const auto& [a, e] : m) {
      x.push_back(a);
      y.push_back(e);
    }
    const double rho = oracle::spearman(x, y);
    const double last = m.at(alphas.back());
    ok = ok && last < 0.01 && rho <= -0.8;
    detail += "r=" + std::to_string(r) + ":err_at_max_alpha=" + g(last) + ",spearman=" + g(rho) + " ";
  }
  int larger = 0;
  for (double a : alphas) larger += err.at(5).at(a) > err.at(3).at(a);
  ok = ok && 3 * larger >= 2 * static_cast<int>(alphas.size());
  return {ok, detail + "larger_r_worse=" + std::to_string(larger) + "/" + std::to_string(alphas.size())};
}

// ---------------------------------------------------------------- 9

Outcome oracle_equivalences() {
  // k-means against the exhaustive partition search.
  double worst_gap = 0.0;
  for (int i = 0; i < 50; ++i) {
    std::mt19937_64 rng(derive_seed({0x6E45, static_cast<std::uint64_t>(i)}));
    const Index p = std::uniform_int_distribution<Index>(4, 10)(rng);
    const int k = std::uniform_int_distribution<int>(2, 3)(rng);
    const Index cols = std::uniform_int_distribution<Index>(1, 3)(rng);
    Matrix x = gaussian_matrix(p, cols, rng);
    const Matrix centers = 3.0 * gaussian_matrix(k, cols, rng);
    for (Index row = 0; row < p; ++row) x.row(row) += centers.row(row % k);
    const auto res = kmeans_rows(x, k, {.restarts = 20, .max_iters = 100, .seed = static_cast<std::uint64_t>(i)});
    worst_gap = std::max(worst_gap, std::abs(res.objective - oracle::kmeans_exhaustive(x, k)));
  }
  // tau_2 / tau_3 against the angle grid.
  double worst_tau = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(derive_seed({0x7A0, s}));
    const DenseTensor z = gaussian_noise({3, 3, 3}, 1.0, rng);
    std::vector<OrthonormalBasis> f;
    std::array<Eigen::Vector3d, 3> u;
    for (std::size_t k = 0; k < 3; ++k) {
      f.push_back(random_orthonormal(3, 1, rng));
      u[k] = f.back().matrix().col(0);
    }
    const auto groups = SymmetricGroups::asymmetric({3, 3, 3}, {1, 1, 1});
    const auto grid = oracle::tau_grid_333(z, u);
    const double e2 = tau_j_estimate(z, f, groups, SchattenQ::inf(), 2, 20, s).value;
    const double e3 = tau_j_estimate(z, f, groups, SchattenQ::inf(), 3, 20, s).value;
    worst_tau = std::max({worst_tau, std::abs(e2 - grid.tau2) / grid.tau2, std::abs(e3 - grid.tau3) / grid.tau3});
  }
  // err against brute-force permutation matching.
  int mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    std::mt19937_64 rng(derive_seed({0xE77, static_cast<std::uint64_t>(i)}));
    const Index r = std::uniform_int_distribution<Index>(1, 5)(rng);
    const Index p = std::uniform_int_distribution<Index>(r, 30)(rng);
    std::uniform_int_distribution<Index> lab(0, r - 1);
    std::vector<Index> a(static_cast<std::size_t>(p)), b(static_cast<std::size_t>(p));
    for (auto& v : a) v = lab(rng);
    for (std::size_t j = 0; j < b.size(); ++j) b[j] = (rng() % 3 == 0) ? lab(rng) : a[j];
    mismatches += misclass_err(MembershipMatrix(a, r), MembershipMatrix(b, r)) != oracle::misclass_brute(a, b, r);
  }
  return {worst_gap <= 1e-9 && worst_tau <= 0.02 && mismatches == 0,
          "kmeans_max_gap=" + g(worst_gap) + " tau_max_rel_dev=" + g(worst_tau) +
              " err_mismatches=" + std::to_string(mismatches) + "/100"};
}

// ---------------------------------------------------------------- 10

std::map<std::string, std::string> run_all_outputs(const fs::path& dir) {
  fs::create_directories(dir);
  auto out = [&](const std::string& stem) {
    OutputPaths o;
    o.csv = (dir / (stem + ".csv")).string();
    o.summary = (dir / (stem + "_summary.csv")).string();
    o.timing = (dir / (stem + "_timing.csv")).string();
    o.report = (dir / (stem + "_report.json")).string();
    return o;
  };
  const std::vector<std::pair<std::string, nlohmann::json>> configs{
      {"recon", {{"kind", "DENOISE_RECON"}, {"p_grid", {10, 14}}, {"order", 3}, {"ranks", {2}}, {"sigma", {1, 2}}, {"repetitions", 3}}},
      {"subspace", {{"kind", "DENOISE_SUBSPACE"}, {"dims", {{6, 12, 20}}}, {"ranks", {2}}, {"alpha", {1, 2}}, {"repetitions", 3}}},
      {"algo", {{"kind", "ALGO_COMPARE"}, {"dims", {{14, 14, 14}}}, {"ranks", {2}}, {"alpha", {2, 3}}, {"repetitions", 3}}},
      {"cocluster", {{"kind", "COCLUSTER"}, {"dims", {{15, 15, 15}}}, {"ranks", {3}}, {"alpha", {1, 4}}, {"repetitions", 3}}},
      {"audit", {{"kind", "BOUNDS_AUDIT"}, {"dims", {{10, 10, 10}}}, {"ranks", {2}}, {"repetitions", 2}, {"tau_budget", 1}}},
      {"lower", {{"kind", "LOWER_BOUND_CHECK"}}},
  };
  for (auto [stem, j] : configs) {
    j["master_seed"] = 1010;
    auto c = parse_config(j);
    c.output = out(stem);
    switch (c.kind) {
      case ExperimentKind::BoundsAudit:
        write_audit_outputs(c, run_bounds_audit(c));
        break;
      case ExperimentKind::Cocluster:
        write_outputs(c, run_cocluster_experiment(c));
        break;
      case ExperimentKind::LowerBoundCheck:
        write_outputs(c, run_lower_bound_check(c));
        break;
      default:
        write_outputs(c, run_denoise_experiment(c));
    }
  }
  const std::vector<std::pair<std::string, std::string>> plots{
      {"recon", "fig2a"},   {"subspace", "fig2b"},       {"subspace", "fig2b-rescaled"},
      {"algo", "fig3"},     {"algo", "fig3-subspace"},   {"cocluster", "fig4"}};
  for (const auto& [stem, kind] : plots)
    emit_plot((dir / (stem + "_summary.csv")).string(), kind, (dir / (stem + "_" + kind + ".svg")).string());
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.find("_timing") != std::string::npos) continue;  // wall-clock runtimes
    std::ifstream f(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    files[name] = ss.str();
  }
  return files;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "tucker_acceptance_determinism";
  fs::remove_all(root);
  const auto a = run_all_outputs(root / "a");
  setenv("TUCKER_THREADS", "1", 1);
  const auto b = run_all_outputs(root / "b");
  unsetenv("TUCKER_THREADS");
  std::size_t csv = 0, svg = 0, differ = 0;
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != bytes) ++differ;
    csv += name.ends_with(".csv");
    svg += name.ends_with(".svg");
  }
  return {differ == 0 && a.size() == b.size() && svg == 6 && csv >= 10,
          "files=" + std::to_string(a.size()) + " csv=" + std::to_string(csv) + " svg=" + std::to_string(svg) +
              " differing=" + std::to_string(differ)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"exact_recovery", exact_recovery},
      {"unfolding_identity", unfolding_identity},
      {"lower_bound_fixture", lower_bound_fixture},
      {"bounds_audit", bounds_audit},
      {"denoise_recon_shape", denoise_recon},
      {"unilateral_subspace", unilateral},
      {"algorithm_ordering", algorithm_ordering},
      {"coclustering", coclustering},
      {"oracle_equivalences", oracle_equivalences},
      {"determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %-22s %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
