#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tucker/cocluster.hpp"
#include "tucker/csv.hpp"
#include "tucker/linalg.hpp"
#include "tucker/tensor.hpp"

namespace tucker {

enum class ExperimentKind { DenoiseRecon, DenoiseSubspace, AlgoCompare, Cocluster, BoundsAudit, LowerBoundCheck };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

enum class Algorithm { Hooi, OHooi, StHosvd, THosvd };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

enum class InitScheme { Perturbed, StHosvd, THosvd, Random };

std::string to_string(InitScheme s);
InitScheme parse_init_scheme(const std::string& s);

/// How lambda follows from a grid point (p = first dim, p_last = last dim):
///   absolute          lambda = alpha
///   sqrt_pr           lambda = alpha * sqrt(p r) * sigma
///   unilateral        lambda = alpha * p_last * sqrt(r) / sqrt(p) * sigma
///   p_three_quarters  lambda = alpha * p^{3/4} * sigma
///   cocluster         lambda = alpha * r^{3/2} / p^{3/4} * sigma
///   xi_multiple       lambda = alpha * safety * xi_pilot
enum class LambdaRule { Absolute, SqrtPr, Unilateral, PThreeQuarters, Cocluster, XiMultiple };

std::string to_string(LambdaRule r);
LambdaRule parse_lambda_rule(const std::string& s);

double lambda_for(LambdaRule rule, const Dims& dims, Index r, double sigma, double alpha, double xi_hat);

struct OutputPaths {
  std::string csv;      // raw trial rows
  std::string summary;  // per grid point and algorithm means / standard errors
  std::string timing;   // runtimes; kept apart so the trial CSV stays reproducible
  std::string report;   // bounds-audit JSON
};

/// Variant audited by bounds-audit.
enum class AuditVariant { Asymmetric, Partial };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::DenoiseRecon;
  std::vector<Dims> dims;          // grid axis
  std::vector<Index> ranks;        // grid axis; the same rank on every mode
  std::vector<double> sigma{1.0};  // grid axis
  LambdaRule lambda_rule = LambdaRule::Absolute;
  std::vector<double> alpha{1.0};  // grid axis
  std::vector<double> xi_values;   // lower-bound check only
  Index repetitions = 100;
  std::uint64_t master_seed = 0;
  Index t_max = 50;
  double stop_tol = 1e-10;
  InitScheme init = InitScheme::Perturbed;
  std::vector<Algorithm> algorithms;
  Index xi_restarts = 10;
  Index tau_budget = 20;
  Index kmeans_restarts = 20;
  double pilot_safety = 1.5;
  bool compute_xi = false;
  bool enforce_conditions = true;
  bool full_scale = false;
  AuditVariant audit_variant = AuditVariant::Asymmetric;
  OutputPaths output;
};

/// Reads the JSON config; unknown keys are rejected. Defaults depend on kind.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct GridPoint {
  Index index = 0;
  Dims dims;
  Index r = 0;
  double sigma = 0.0;
  double alpha = 0.0;
  double lambda = 0.0;
  std::optional<double> xi_pilot;  // xi_multiple only
};

/// Cartesian product dims x ranks x sigma x alpha, alpha varying fastest.
/// The xi_multiple rule runs a pilot noise draw per point.
std::vector<GridPoint> expand_grid(const ExperimentConfig& config);

/// Noise-free signal with a Haar-random basis per mode and a superdiagonal
/// core with entries i * lambda0 for i = 1..r.
struct LowRankInstance {
  DenseTensor t;
  DenseTensor core;
  std::vector<OrthonormalBasis> factors;
};

LowRankInstance gen_low_rank_instance(const Dims& dims, Index r, double lambda0, Rng& rng);

/// (U + U_perp O) / sqrt(2) with O Haar on (p - r) x r; needs p >= 2r.
std::vector<OrthonormalBasis> perturbed_init(const std::vector<OrthonormalBasis>& factors, Rng& rng);

DenseTensor gaussian_noise(const Dims& dims, double sigma, Rng& rng);

struct BlockModel {
  DenseTensor core;
  std::vector<MembershipMatrix> memberships;
  DenseTensor t;
};

/// Balanced memberships and core B0 / min_i sigma_r(M_i(B0)) * lambda with
/// B0 i.i.d. standard normal.
BlockModel gen_block_model(const Dims& dims, Index r, double lambda, Rng& rng);

struct ExperimentResult {
  Table trials;
  Table summary;
  Table timing;
};

/// DENOISE_RECON, DENOISE_SUBSPACE and ALGO_COMPARE.
ExperimentResult run_denoise_experiment(const ExperimentConfig& config);

ExperimentResult run_cocluster_experiment(const ExperimentConfig& config);

/// LOWER_BOUND_CHECK: one row per dims x rank x xi value.
ExperimentResult run_lower_bound_check(const ExperimentConfig& config);

/// Mean and standard error of each metric column, one row per distinct key.
Table summarize(const Table& trials, const std::vector<std::string>& keys, const std::vector<std::string>& metrics);

/// Writes the non-empty output paths of the config.
void write_outputs(const ExperimentConfig& config, const ExperimentResult& result);

}  // namespace tucker
