#include "vms/audit.hpp"

#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "vms/error.hpp"

namespace vms {

std::pair<unsigned, unsigned> expected_ratio_pct(BlockKind kind) {
  switch (kind) {
    case BlockKind::mamba: return {100, 100};
    case BlockKind::vim: return {100, 200};
    case BlockKind::dbm: return {100, 100};
  }
  return {0, 0};
}

bool AuditReport::ok() const {
  for (const auto& r : rows)
    if (!r.ok) return false;
  for (const auto& b : budgets)
    if (!b.ok) return false;
  return true;
}

std::string AuditReport::to_text() const {
  std::ostringstream os;
  os << "# parameter audit (weights only; biases listed separately)\n";
  os << std::left << std::setw(7) << "block" << std::right << std::setw(5) << "D" << std::setw(3)
     << "E" << std::setw(11) << "static" << std::setw(11) << "dynamic" << std::setw(11)
     << "dyn_uniq" << std::setw(8) << "bias" << std::setw(10) << "static%" << std::setw(10)
     << "dyn%" << std::setw(12) << "expected" << "  status\n";
  for (const auto& r : rows) {
    std::ostringstream expected;
    expected << r.expected_static_pct << '/' << r.expected_dynamic_pct;
    os << std::left << std::setw(7) << to_string(r.config.kind) << std::right << std::setw(5)
       << r.config.d_model << std::setw(3) << r.config.expand << std::setw(11)
       << r.counts.static_weights << std::setw(11) << r.counts.dynamic << std::setw(11)
       << r.counts.dynamic_unique << std::setw(8) << r.counts.bias << std::fixed
       << std::setprecision(1) << std::setw(10) << r.static_pct << std::setw(10) << r.dynamic_pct
       << std::setw(12) << expected.str() << "  " << (r.ok ? "OK" : "MISMATCH") << '\n';
  }
  if (!budgets.empty()) {
    os << "# temporal slot at width C (ViM, E=1) vs attention (4 C^2)\n";
    os << std::setw(6) << "C" << std::setw(12) << "attention" << std::setw(12) << "vim_C^2"
       << std::setw(12) << "limit" << std::setw(12) << "vim_O(CN)" << std::setw(12) << "vim_all"
       << "  status\n";
    for (const auto& b : budgets) {
      os << std::setw(6) << b.budget.width << std::setw(12) << b.budget.attention_slot
         << std::setw(12) << b.budget.vim_width_squared << std::setw(12) << b.limit
         << std::setw(12) << b.budget.vim_state_linear << std::setw(12) << b.budget.vim_all_weights
         << "  " << (b.ok ? "OK" : "OVER") << '\n';
    }
  }
  return os.str();
}

AuditConfig default_audit_config() {
  AuditConfig cfg;
  for (BlockKind kind : {BlockKind::mamba, BlockKind::vim, BlockKind::dbm}) {
    for (std::size_t d : {32, 64, 128}) {
      for (std::size_t e : {1, 2}) {
        BlockConfig bc;
        bc.kind = kind;
        bc.d_model = d;
        bc.expand = e;
        cfg.blocks.push_back(bc);
      }
    }
  }
  cfg.temporal_widths = {64, 256};
  return cfg;
}

AuditConfig parse_audit_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("audit config: ") + e.what());
  }
  AuditConfig cfg;
  const nlohmann::json* blocks = &j;
  if (j.is_object()) {
    if (!j.contains("blocks")) throw InvalidArgument("audit config: missing \"blocks\"");
    blocks = &j.at("blocks");
    if (j.contains("temporal_widths")) {
      try {
        cfg.temporal_widths = j.at("temporal_widths").get<std::vector<std::size_t>>();
      } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("audit config: temporal_widths: ") + e.what());
      }
    }
  }
  if (!blocks->is_array()) throw InvalidArgument("audit config: blocks must be a list");
  for (const auto& b : *blocks) cfg.blocks.push_back(block_config_from_json(b.dump()));
  return cfg;
}

AuditReport param_audit(const AuditConfig& cfg) {
  AuditReport report;
  for (const auto& bc : cfg.blocks) {
    AuditRow row;
    row.config = bc;
    row.counts = count_params(zero_block(bc));
    BlockConfig base = bc;
    base.kind = BlockKind::mamba;
    row.baseline = count_params(zero_block(base));
    std::tie(row.expected_static_pct, row.expected_dynamic_pct) = expected_ratio_pct(bc.kind);
    row.static_pct = 100.0 * row.counts.static_weights / row.baseline.static_weights;
    row.dynamic_pct = 100.0 * row.counts.dynamic / row.baseline.dynamic;
    row.ok = 100 * row.counts.static_weights == row.expected_static_pct * row.baseline.static_weights &&
             100 * row.counts.dynamic == row.expected_dynamic_pct * row.baseline.dynamic;
    report.rows.push_back(row);
  }
  for (std::size_t c : cfg.temporal_widths) {
    BudgetRow b;
    b.budget = vim_temporal_budget(c);
    b.limit = (13 * c * c) / 4 + 8 * c;
    b.ok = b.budget.vim_width_squared <= b.limit && b.budget.attention_slot == 4 * c * c;
    report.budgets.push_back(b);
  }
  return report;
}

void require_audit_pass(const AuditReport& report) {
  for (const auto& r : report.rows) {
    if (r.ok) continue;
    std::ostringstream os;
    os << to_string(r.config.kind) << "(D=" << r.config.d_model << ",E=" << r.config.expand
       << "): expected (" << r.expected_static_pct << "%, " << r.expected_dynamic_pct
       << "%), got (" << r.static_pct << "%, " << r.dynamic_pct << "%)";
    throw RatioMismatch(os.str());
  }
  for (const auto& b : report.budgets) {
    if (b.ok) continue;
    throw RatioMismatch("vim temporal slot at C=" + std::to_string(b.budget.width) + ": " +
                        std::to_string(b.budget.vim_width_squared) + " weights exceed limit " +
                        std::to_string(b.limit));
  }
}

}  // namespace vms
