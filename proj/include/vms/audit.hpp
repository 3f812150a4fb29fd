#pragma once

#include <string>
#include <vector>

#include "vms/blocks.hpp"

namespace vms {

/// One audited block with its counts relative to the Mamba block of the same
/// (D, E, N, conv_width). Percentages are exact: a row passes only when
/// 100 * count == expected_pct * baseline_count in integers.
struct AuditRow {
  BlockConfig config;
  ParamCount counts;
  ParamCount baseline;
  unsigned expected_static_pct = 100;
  unsigned expected_dynamic_pct = 100;
  double static_pct = 0.0;
  double dynamic_pct = 0.0;
  bool ok = false;
};

struct BudgetRow {
  TemporalBudget budget;
  std::size_t limit = 0;  // 3.25 C^2 + 8 C, rounded down
  bool ok = false;
};

struct AuditReport {
  std::vector<AuditRow> rows;
  std::vector<BudgetRow> budgets;

  bool ok() const;
  std::string to_text() const;
};

struct AuditConfig {
  std::vector<BlockConfig> blocks;
  std::vector<std::size_t> temporal_widths;
};

// Every block kind at D in {32, 64, 128}, E in {1, 2}; temporal widths 64, 256.
AuditConfig default_audit_config();

// Accepts a JSON list of block configs, or {"blocks": [...], "temporal_widths": [...]}.
AuditConfig parse_audit_config(const std::string& text);

// Expected (static, dynamic) percentages of each block kind against Mamba.
std::pair<unsigned, unsigned> expected_ratio_pct(BlockKind kind);

AuditReport param_audit(const AuditConfig& cfg);

// Throws RatioMismatch naming the first failing block with expected/actual.
void require_audit_pass(const AuditReport& report);

}  // namespace vms
