#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "tucker/linalg.hpp"
#include "tucker/tensor.hpp"

namespace tucker {

struct TraceEntry {
  Index iteration = 0;
  std::vector<double> sin_theta;  // per factor vs reference (q = inf); empty without reference
  double captured_norm = 0.0;     // ||core||_HS after this sweep
};

struct TuckerFit {
  std::vector<OrthonormalBasis> factors;         // one per group / low-rank mode
  std::vector<std::vector<Index>> factor_modes;  // modes each factor acts on
  DenseTensor reconstruction;
  DenseTensor core;
  std::vector<TraceEntry> trace;  // entry 0 is the initialization
  Index iterations_run = 0;

  double captured_norm() const { return hs_norm(core); }
};

namespace init {
struct Explicit {
  std::vector<OrthonormalBasis> bases;
};
struct THosvd {};
/// Empty order means ascending group order.
struct StHosvd {
  std::vector<Index> order;
};
struct Random {
  std::uint64_t seed = 0;
};
}  // namespace init

using InitSpec = std::variant<init::Explicit, init::THosvd, init::StHosvd, init::Random>;

struct HooiOptions {
  Index t_max = 50;
  /// Stop once |c_t - c_{t-1}| <= stop_tol * c_{t-1} for the captured norm c.
  /// Zero disables early stopping.
  double stop_tol = 1e-10;
  /// Diagnostics only: traces record sin-Theta against these.
  std::optional<std::vector<OrthonormalBasis>> reference;
};

/// Alternating update over symmetric groups, ascending group order within a
/// sweep. Each group's factor comes from the SVD of the representative-mode
/// unfolding of the tensor contracted with the latest factors on all other
/// modes.
TuckerFit hooi(const DenseTensor& t, const SymmetricGroups& groups, const InitSpec& init,
               const HooiOptions& options = {});

TuckerFit hooi_d3(const DenseTensor& t, const std::array<Index, 3>& ranks, const InitSpec& init,
                  const HooiOptions& options = {});

/// Iterates only over `low_rank_modes`; the remaining modes are never
/// contracted and get no factor.
TuckerFit hooi_partial(const DenseTensor& t, std::vector<Index> low_rank_modes, std::vector<Index> ranks,
                       const InitSpec& init, const HooiOptions& options = {});

TuckerFit t_hosvd(const DenseTensor& t, const SymmetricGroups& groups);

/// `order` is a permutation of group indices; empty means ascending.
TuckerFit st_hosvd(const DenseTensor& t, const SymmetricGroups& groups, std::vector<Index> order = {});

/// hooi with t_max = 1.
TuckerFit one_step_hooi(const DenseTensor& t, const SymmetricGroups& groups, const InitSpec& init,
                        std::optional<std::vector<OrthonormalBasis>> reference = std::nullopt);

/// Initial bases per group for the given scheme.
std::vector<OrthonormalBasis> initial_factors(const DenseTensor& t, const SymmetricGroups& groups,
                                              const InitSpec& init);

/// t contracted with factors[i]^T along every mode of factor_modes[i].
DenseTensor project_core(const DenseTensor& t, const std::vector<OrthonormalBasis>& factors,
                         const std::vector<std::vector<Index>>& factor_modes);

/// core expanded by factors[i] along every mode of factor_modes[i].
DenseTensor expand_core(const DenseTensor& core, const std::vector<OrthonormalBasis>& factors,
                        const std::vector<std::vector<Index>>& factor_modes);

}  // namespace tucker
