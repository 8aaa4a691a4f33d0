#include "contractcheck/static_checks.hpp"

#include <algorithm>

namespace contractcheck {

namespace {

std::vector<std::string> blocks_or_contract(const std::set<std::string>& blocks) {
  if (blocks.empty()) return {"contract"};
  return {blocks.begin(), blocks.end()};
}

}  // namespace

std::vector<Finding> check_essentialia(const ContractModel& model) {
  std::vector<Finding> out;
  auto where = blocks_or_contract(model.spa_blocks);
  auto require = [&](const std::optional<std::string>& v, const char* code, const char* what) {
    if (!v) out.push_back({Severity::Error, code, std::string("the contract names no ") + what, where});
  };
  require(model.seller, "ESSENTIALIA_SELLER", "seller");
  require(model.purchaser, "ESSENTIALIA_PURCHASER", "purchaser");
  require(model.shares, "ESSENTIALIA_OBJECT", "purchase object (shares)");
  require(model.price, "ESSENTIALIA_PRICE", "purchase price");
  return out;
}

std::vector<Finding> check_claim_completeness(const ContractModel& model) {
  std::vector<Finding> out;
  for (const auto& [id, c] : model.claims) {
    std::vector<std::string> where{c.block};
    if (c.kind == ClaimKind::Primary && consequences_of(model, id).empty()) {
      out.push_back({Severity::Warning, "NO_CONSEQUENCE",
                     "primary claim " + id + " has no consequence claim", where});
    }
    if (!c.trigger && !c.due && !c.arise) {
      out.push_back({Severity::Error, "NO_DUEDATE", "claim " + id + " has no due date", where});
    }
    if (!c.trigger && c.kind != ClaimKind::Primary && c.kind != ClaimKind::Warranty) {
      out.push_back({Severity::Error, "NO_TRIGGER",
                     std::string(to_string(c.kind)) + " claim " + id + " has no Trigger", where});
    }
    if (c.debtor.empty() || c.creditor.empty()) {
      out.push_back({Severity::Error, "MISSING_PARTY",
                     "claim " + id + " needs both Debtor and Creditor", where});
    }
    if (c.min && c.max && *c.min > *c.max) {
      out.push_back({Severity::Warning, "MIN_EXCEEDS_MAX",
                     "compensation claim " + id + " has Min " + std::to_string(*c.min) +
                         " above Max " + std::to_string(*c.max),
                     blocks_or_contract(c.origin_blocks)});
    }
  }
  return out;
}

std::vector<Finding> run_static_checks(const ContractModel& model) {
  std::vector<Finding> out = model.issues;
  for (auto& f : check_essentialia(model)) out.push_back(std::move(f));
  for (auto& f : check_claim_completeness(model)) out.push_back(std::move(f));
  return out;
}

bool has_errors(const std::vector<Finding>& findings) {
  return std::any_of(findings.begin(), findings.end(),
                     [](const Finding& f) { return f.severity == Severity::Error; });
}

}  // namespace contractcheck
