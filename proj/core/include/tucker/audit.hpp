#pragma once

#include <nlohmann/json.hpp>

#include "tucker/csv.hpp"
#include "tucker/error.hpp"
#include "tucker/experiments.hpp"

namespace tucker {

struct AuditResult {
  nlohmann::ordered_json report;
  Table lines;  // one row per (trial, audited inequality)
  Index violations = 0;
  bool pass() const { return violations == 0; }
};

/// Thrown before any trial runs when the signal condition cannot hold at a
/// grid point and the config enforces conditions.
class ConditionViolation : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// BOUNDS_AUDIT: per trial, exact tau_1 / tau_1k, estimated tau_j and xi,
/// and every audited inequality as (empirical, bound, margin, PASS/FAIL).
/// Order 3 uses the order-3 displays, other orders the order-d displays;
/// the partial variant leaves the last mode dense.
AuditResult run_bounds_audit(const ExperimentConfig& config);

void write_audit_outputs(const ExperimentConfig& config, const AuditResult& result);

}  // namespace tucker
