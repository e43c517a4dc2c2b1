#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tucker/audit.hpp"
#include "tucker/error.hpp"
#include "tucker/experiments.hpp"
#include "tucker/hooi.hpp"
#include "tucker/perturb.hpp"
#include "tucker/plot.hpp"
#include "tucker/tns_io.hpp"

namespace {

using namespace tucker;

constexpr int kOk = 0, kUsage = 1, kAuditFail = 2, kIo = 3;

std::vector<Index> parse_index_list(const std::string& s, const char* what) {
  std::vector<Index> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string("bad ") + what + " entry '" + item + "'");
    }
    if (used != item.size()) throw InvalidArgument(std::string("bad ") + what + " entry '" + item + "'");
    out.push_back(static_cast<Index>(v));
  }
  if (out.empty()) throw InvalidArgument(std::string(what) + " list is empty");
  return out;
}

/// "1,2;3" -> {{0,1},{2}}; 1-based on the command line.
std::vector<std::vector<Index>> parse_groups(const std::string& s) {
  std::vector<std::vector<Index>> out;
  std::stringstream ss(s);
  std::string grp;
  while (std::getline(ss, grp, ';')) {
    auto modes = parse_index_list(grp, "group");
    for (auto& m : modes) {
      if (m < 1) throw InvalidArgument("group modes are 1-based");
      --m;
    }
    out.push_back(std::move(modes));
  }
  return out;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << body;
  if (!f) throw IoError("failed writing " + path);
}

int cmd_decompose(const std::string& input, const std::string& ranks_s, const std::string& algo_s,
                  const std::string& groups_s, Index tmax, const std::string& init_s, std::uint64_t seed,
                  const std::string& out) {
  const DenseTensor t = read_tns(input);
  std::vector<std::vector<Index>> part;
  if (groups_s.empty()) {
    for (Index k = 0; k < t.order(); ++k) part.push_back({k});
  } else {
    part = parse_groups(groups_s);
  }
  auto ranks = parse_index_list(ranks_s, "rank");
  if (ranks.size() == 1 && part.size() > 1) ranks.assign(part.size(), ranks.front());
  const auto groups = SymmetricGroups::validate(t.dims(), part, ranks);
  const Algorithm algo = parse_algorithm(algo_s);

  auto make_init = [&]() -> InitSpec {
    const InitScheme s = parse_init_scheme(init_s);
    switch (s) {
      case InitScheme::StHosvd:
        return init::StHosvd{};
      case InitScheme::THosvd:
        return init::THosvd{};
      case InitScheme::Random:
        return init::Random{seed};
      case InitScheme::Perturbed:
        break;
    }
    throw InvalidArgument("decompose: perturbed init needs known true factors; use sthosvd, thosvd or random");
  };
  TuckerFit fit;
  HooiOptions opt;
  opt.t_max = tmax;
  switch (algo) {
    case Algorithm::Hooi:
      fit = hooi(t, groups, make_init(), opt);
      break;
    case Algorithm::OHooi:
      fit = one_step_hooi(t, groups, make_init());
      break;
    case Algorithm::StHosvd:
      fit = st_hosvd(t, groups);
      break;
    case Algorithm::THosvd:
      fit = t_hosvd(t, groups);
      break;
  }

  write_tns(out + "_core.tns", fit.core);
  write_tns(out + "_reconstruction.tns", fit.reconstruction);
  for (std::size_t i = 0; i < fit.factors.size(); ++i) {
    const Matrix& u = fit.factors[i].matrix();
    std::vector<double> v(u.data(), u.data() + u.size());
    write_tns(out + "_factor_" + std::to_string(i + 1) + ".tns", DenseTensor({u.rows(), u.cols()}, std::move(v)));
  }
  std::ostringstream trace;
  trace << "# tucker-csv v1 kind=DECOMPOSE table=trace\niteration,captured_norm\n";
  for (const auto& e : fit.trace) trace << e.iteration << ',' << format_cell(e.captured_norm) << '\n';
  write_text(out + "_trace.csv", trace.str());

  nlohmann::ordered_json j;
  j["algo"] = to_string(algo);
  j["dims"] = t.dims();
  j["ranks"] = groups.ranks();
  j["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : groups.groups()) {
    auto one = nlohmann::ordered_json::array();
    for (Index m : g) one.push_back(m + 1);
    j["groups"].push_back(one);
  }
  j["iterations"] = fit.iterations_run;
  j["captured_norm"] = fit.captured_norm();
  j["residual_norm"] = hs_norm(t - fit.reconstruction);
  j["tensor_norm"] = hs_norm(t);
  std::cout << j.dump(2) << '\n';
  return kOk;
}

void apply_overrides(ExperimentConfig& c, const std::string& csv, const std::string& summary, const std::string& timing) {
  if (!csv.empty()) c.output.csv = csv;
  if (!summary.empty()) c.output.summary = summary;
  if (!timing.empty()) c.output.timing = timing;
}

void print_summary(const Table& summary) { write_csv(std::cout, summary); }

int cmd_denoise(ExperimentConfig c) {
  if (c.kind != ExperimentKind::DenoiseRecon && c.kind != ExperimentKind::DenoiseSubspace &&
      c.kind != ExperimentKind::AlgoCompare)
    throw InvalidArgument("denoise-sim needs kind DENOISE_RECON, DENOISE_SUBSPACE or ALGO_COMPARE");
  const auto r = run_denoise_experiment(c);
  write_outputs(c, r);
  print_summary(r.summary);
  return kOk;
}

int cmd_cocluster(const ExperimentConfig& c) {
  if (c.kind != ExperimentKind::Cocluster) throw InvalidArgument("cocluster-sim needs kind COCLUSTER");
  const auto r = run_cocluster_experiment(c);
  write_outputs(c, r);
  print_summary(r.summary);
  return kOk;
}

int cmd_audit(const ExperimentConfig& c) {
  if (c.kind == ExperimentKind::LowerBoundCheck) {
    const auto r = run_lower_bound_check(c);
    write_outputs(c, r);
    write_csv(std::cout, r.trials);
    for (const auto& row : r.trials.rows)
      if (std::get<std::int64_t>(row.back()) == 0) return kAuditFail;
    return kOk;
  }
  if (c.kind != ExperimentKind::BoundsAudit) throw InvalidArgument("bounds-audit needs kind BOUNDS_AUDIT or LOWER_BOUND_CHECK");
  const AuditResult r = run_bounds_audit(c);
  write_audit_outputs(c, r);
  for (const auto& s : r.report.at("summary")) {
    std::cout << s.at("status").get<std::string>() << ' ' << s.at("name").get<std::string>() << " fails="
              << s.at("fails").get<Index>() << '/' << s.at("trials").get<Index>() << " min_margin=";
    if (s.at("min_margin").is_null()) std::cout << "inf";
    else std::cout << format_cell(s.at("min_margin").get<double>());
    std::cout << '\n';
  }
  std::cout << (r.pass() ? "PASS" : "FAIL") << " violations=" << r.violations << '\n';
  return r.pass() ? kOk : kAuditFail;
}

int cmd_lower_bound(const std::string& dims_s, Index r, double xi, const std::string& out) {
  const Dims dims = parse_index_list(dims_s, "dims");
  const auto inst = lower_bound_instance(dims, r, xi);
  const bool shared = (inst.t1 + inst.z1) == (inst.t2 + inst.z2);
  const double gap = hs_norm(inst.t1 - inst.t2);
  const double tol = 1e-12 * std::max(1.0, xi);
  const bool ok = shared && std::abs(hs_norm(inst.z1) - xi) <= tol && std::abs(hs_norm(inst.z2) - xi) <= tol &&
                  std::abs(gap - std::sqrt(2.0) * xi) <= tol;
  if (!out.empty()) {
    write_tns(out + "_t1.tns", inst.t1);
    write_tns(out + "_z1.tns", inst.z1);
    write_tns(out + "_t2.tns", inst.t2);
    write_tns(out + "_z2.tns", inst.z2);
  }
  nlohmann::ordered_json j;
  j["dims"] = dims;
  j["rank"] = r;
  j["xi"] = xi;
  j["shared_observation"] = shared;
  j["z1_norm"] = hs_norm(inst.z1);
  j["z2_norm"] = hs_norm(inst.z2);
  j["signal_gap"] = gap;
  j["sqrt2_xi"] = std::sqrt(2.0) * xi;
  j["minimax_floor"] = gap / 2.0;
  j["status"] = ok ? "PASS" : "FAIL";
  std::cout << j.dump(2) << '\n';
  return ok ? kOk : kAuditFail;
}

int cmd_plot(const std::string& csv, const std::string& kind, std::string out) {
  if (out.empty()) {
    std::filesystem::path p(csv);
    p.replace_extension();
    out = p.string() + "_" + kind + ".svg";
  }
  emit_plot(csv, kind, out);
  std::cout << out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tucker decomposition by higher-order orthogonal iteration, with perturbation audits and simulations"};
  app.require_subcommand(1);

  auto* dec = app.add_subcommand("decompose", "Fit a Tucker decomposition to a TNS1 tensor");
  std::string input, ranks, algo = "hooi", groups, init_s = "sthosvd", out = "tucker";
  Index tmax = 50;
  std::uint64_t seed = 0;
  dec->add_option("--input", input, "Input tensor (.tns)")->required();
  dec->add_option("--ranks", ranks, "Comma-separated rank per group")->required();
  dec->add_option("--algo", algo, "hooi | ohooi | thosvd | sthosvd")->capture_default_str();
  dec->add_option("--groups", groups, "Symmetric groups, 1-based, e.g. \"1;2;3\" or \"1,2;3\"");
  dec->add_option("--tmax", tmax, "HOOI sweeps")->capture_default_str();
  dec->add_option("--init", init_s, "sthosvd | thosvd | random")->capture_default_str();
  dec->add_option("--seed", seed, "Seed for random init")->capture_default_str();
  dec->add_option("--out", out, "Output prefix")->capture_default_str();

  std::string config, csv, summary, timing;
  bool full_scale = false;
  auto* den = app.add_subcommand("denoise-sim", "Tensor denoising simulations");
  den->add_option("--config", config, "Experiment config (JSON)")->required();
  den->add_flag("--paper-scale", full_scale, "Use the full-size dims for DENOISE_SUBSPACE");
  auto* coc = app.add_subcommand("cocluster-sim", "Tensor co-clustering simulations");
  coc->add_option("--config", config, "Experiment config (JSON)")->required();
  auto* aud = app.add_subcommand("bounds-audit", "Audit the perturbation bounds on seeded trials");
  aud->add_option("--config", config, "Experiment config (JSON)")->required();
  std::string report;
  for (auto* sub : {den, coc, aud}) sub->add_option("--csv", csv, "Override output.csv");
  for (auto* sub : {den, coc}) {
    sub->add_option("--summary", summary, "Override output.summary");
    sub->add_option("--timing", timing, "Override output.timing");
  }
  aud->add_option("--report", report, "Override output.report");

  auto* low = app.add_subcommand("lower-bound", "Build and verify the two-point lower-bound instance");
  std::string dims_s, low_out;
  Index rank = 1;
  double xi = 1.0;
  low->add_option("--dims", dims_s, "Comma-separated dims")->required();
  low->add_option("--rank", rank, "Rank r (2r <= every dim)")->required();
  low->add_option("--xi", xi, "Noise level xi")->required();
  low->add_option("--out", low_out, "Optional prefix for the four tensors");

  auto* plot = app.add_subcommand("plot", "Render an SVG from a summary CSV");
  std::string plot_csv, kind, svg;
  plot->add_option("--csv", plot_csv, "Summary CSV")->required();
  plot->add_option("--kind", kind, "fig2a | fig2b | fig2b-rescaled | fig3 | fig3-subspace | fig4")->required();
  plot->add_option("--out", svg, "Output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*dec) return cmd_decompose(input, ranks, algo, groups, tmax, init_s, seed, out);
    if (*low) return cmd_lower_bound(dims_s, rank, xi, low_out);
    if (*plot) return cmd_plot(plot_csv, kind, svg);
    ExperimentConfig c = load_config(config);
    apply_overrides(c, csv, summary, timing);
    if (!report.empty()) c.output.report = report;
    if (*den) {
      if (full_scale && c.kind == ExperimentKind::DenoiseSubspace) c.dims = {Dims{10, 100, 500}};
      return cmd_denoise(c);
    }
    if (*coc) return cmd_cocluster(c);
    if (*aud) return cmd_audit(c);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ConditionViolation& e) {
    std::cerr << "condition violated: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
