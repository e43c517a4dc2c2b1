#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tucker/hooi.hpp"
#include "tucker/linalg.hpp"
#include "tucker/tensor.hpp"

namespace tucker {

enum class EstimateKind { Exact, LowerBound };

std::string to_string(EstimateKind k);

/// min_i sigma_{r_i}(M_{rep_i}(t)).
double signal_strength(const DenseTensor& t, const SymmetricGroups& groups);

struct Tau1Result {
  double tau1 = 0.0;
  std::vector<double> per_group;
};

/// tau_{1k} = ||(M_k(z x_{i != k} U_i^T))_max(r_k)||_q, with k the group
/// representative and every other mode contracted with its group's true factor.
/// Groups listed in `dense_groups` (identity factor, rank == dim) are left
/// out of the maximum over k; this gives the partial low-rank quantities.
Tau1Result tau1(const DenseTensor& z, const std::vector<OrthonormalBasis>& factors,
                const SymmetricGroups& groups, SchattenQ q, const std::vector<Index>& dense_groups = {});

struct TauEstimate {
  Index j = 0;
  double value = 0.0;
  EstimateKind kind = EstimateKind::LowerBound;
  Index budget = 0;
  // Location of the best value: group whose representative is unfolded, the
  // modes carrying complement directions, and one V per group in `v_groups`.
  Index group = -1;
  std::vector<Index> modes;
  std::vector<Index> v_groups;
  std::vector<Matrix> v;
  Index evaluations = 0;
};

/// Objective of tau_j at a feasible point: `directions[g]` is V_g for every
/// group g touched by `modes` (other entries ignored).
double tau_objective(const DenseTensor& z, const std::vector<OrthonormalBasis>& factors,
                     const SymmetricGroups& groups, SchattenQ q, Index group, const std::vector<Index>& modes,
                     const std::map<Index, Matrix>& directions);

/// Lower bound for tau_j (2 <= j <= d): all (group, mode-set) pairs are
/// enumerated; each supremum over V is attacked by `budget` random starts on
/// the unit q-sphere followed by alternating dual-norm gradient ascent.
TauEstimate tau_j_estimate(const DenseTensor& z, const std::vector<OrthonormalBasis>& factors,
                           const SymmetricGroups& groups, SchattenQ q, Index j, Index budget,
                           std::uint64_t seed, const std::vector<Index>& dense_groups = {});

/// r^{max(0, 1/q - 1/2)} * ||z||_HS, an upper bound for every tau_j.
double tau_trivial_upper(const DenseTensor& z, Index r, SchattenQ q);

struct XiEstimate {
  double value = 0.0;
  EstimateKind kind = EstimateKind::LowerBound;
  Index restarts = 0;
  Index best_restart = 0;
  double z_norm = 0.0;
  std::vector<double> restart_values;     // captured norm per restart
  std::vector<double> restart_residuals;  // ||z - z x P||_HS per restart
  std::vector<std::vector<OrthonormalBasis>> restart_factors;  // one basis per mode
  std::vector<OrthonormalBasis> best_factors() const { return restart_factors.at(static_cast<std::size_t>(best_restart)); }
};

/// Best captured norm of z over `restarts` HOOI runs from random starts.
/// Modes with rank == dim are left dense (an identity factor).
XiEstimate xi_estimate(const DenseTensor& z, const std::vector<Index>& ranks, Index restarts, Index t_max,
                       std::uint64_t seed);

struct NoiseProjection {
  double lhs = 0.0;
  double rhs = 0.0;
  std::vector<double> theta;      // indexed by bitmask of the subset (bit k: mode k in the subset)
  std::vector<double> sin_theta;  // spectral sin-Theta per mode
  bool holds = true;
};

/// lhs = ||z x_1 Uhat_1^T ... x_d Uhat_d^T||_HS and
/// rhs = sum over subsets W of theta_W * prod_{k not in W} ||sin Theta(Uhat_k, U_k)||,
/// theta_W = ||z x_{k in W} U_k^T x_{k not in W} U_{k,perp}^T||_HS.
NoiseProjection noise_projection_bound(const DenseTensor& z, const std::vector<OrthonormalBasis>& true_factors,
                                       const std::vector<OrthonormalBasis>& fitted);

struct BoundInputs {
  double tau1 = 0.0;
  std::vector<double> tau1k;
  std::vector<double> tau;  // tau[0] = tau_1, tau[j-1] = tau_j
  double xi = 0.0;
  double lambda = 0.0;
  double e0 = 0.0;
  Index t = 0;
};

struct BoundReport {
  std::map<std::string, double> values;
  std::map<std::string, bool> conditions;
  bool conditions_hold() const;
};

/// Order-3 asymmetric bounds. Keys: max_sin_theta_t_step, reconstruction_t_step,
/// max_sin_theta_final, sin_theta_mode_<k> (1-based), reconstruction_final.
BoundReport evaluate_bounds_d3(const BoundInputs& in);

/// Order-d bounds with m groups; adds c_star and c_star_factor.
BoundReport evaluate_bounds_general(Index d, Index m, const BoundInputs& in);

/// Order-3 with one dense mode; tau1k lists the two low-rank modes.
BoundReport evaluate_bounds_partial(const BoundInputs& in);

/// Constant in the signal condition lambda >= c * xi.
double signal_condition_constant_d3();
double signal_condition_constant_general(Index d);
double signal_condition_constant_partial();

struct LowerBoundInstance {
  DenseTensor t1, z1, t2, z2;
};

/// Two signal/noise pairs with the same observation t1 + z1 == t2 + z2.
LowerBoundInstance lower_bound_instance(const Dims& dims, Index r, double xi);

/// One row of an audited inequality.
struct AuditLine {
  std::string name;
  double empirical = 0.0;
  double bound = 0.0;
  bool pass = true;
  double margin() const { return bound - empirical; }
};

struct PerturbationReport {
  std::vector<double> tau1_per_group;
  double tau1 = 0.0;
  std::vector<TauEstimate> tau_j;
  std::optional<XiEstimate> xi;
  double tau_upper = 0.0;
  double lambda = 0.0;
  double e0 = 0.0;
  SchattenQ q = SchattenQ::inf();
  BoundReport bounds;
  std::map<std::string, double> empirical;
  std::vector<AuditLine> audit;
};

nlohmann::ordered_json to_json(const PerturbationReport& r);

}  // namespace tucker
