#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contractcheck/model.hpp"
#include "contractcheck/term.hpp"

namespace contractcheck {

/// Origin recorded for assertions that come from the analysis itself rather
/// than from a block.
inline constexpr const char* kHarnessOrigin = "analysis-harness";

struct NamedAssertion {
  std::string name;
  Term term;
  std::vector<std::string> origin_blocks;
  bool soft = false;
  int weight = 1;
};

enum class AnalysisKind {
  ClaimConsistency,
  ContractExecutability,
  ClaimUnsatisfiable,
  ClaimDefense,
  LimitationCheck,
};

enum class Expectation { SatIsGood, UnsatIsGood };

const char* to_string(AnalysisKind kind);
/// Short tag used in assertion names and the CLI: I, II, unsat, defense, limitation.
const char* short_name(AnalysisKind kind);
std::optional<AnalysisKind> analysis_kind_from_string(const std::string& s);
Expectation expectation_of(AnalysisKind kind);

struct AnalysisInstance {
  AnalysisKind kind = AnalysisKind::ContractExecutability;
  std::vector<std::string> targets;
  std::vector<NamedAssertion> assertions;

  Expectation expectation() const { return expectation_of(kind); }
  /// e.g. "consistency__TransferClaim"; also the prefix of every assertion name.
  std::string id() const;
  const NamedAssertion* find(const std::string& name) const;
  bool has_soft() const;
};

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// d_c >= 0, or d_w = -1 for warranties.
Term performed(const Claim& claim);
/// d_c = -1, or d_w >= 0 for warranties.
Term breached(const Claim& claim);

/// The performance condition l_c (ownership precondition or formula).
Term performance_term(const Claim& claim);
/// Translate a resolved block expression.
Term expr_to_term(const Expr& e);

std::vector<NamedAssertion> encode_owner(const ContractModel& model);
/// φ for a claim without a trigger.
Term encode_claim(const ContractModel& model, const Claim& claim);
/// φ for a triggered claim; `with_limitation=false` drops its Limitation bound.
Term encode_secondary(const ContractModel& model, const Claim& claim, bool with_limitation = true);
/// Raw compensation amount clamped to {0} ∪ [Min, Max].
Term compensation_clamp(const Term& raw, std::optional<std::int64_t> min,
                        std::optional<std::int64_t> max);
/// Owner facts, integer facts, claim formulas, d' definitions and trigger-set
/// constraints, unprefixed.
std::vector<NamedAssertion> encode_spa(const ContractModel& model);
std::vector<NamedAssertion> encode_soft(const ContractModel& model);

std::vector<AnalysisInstance> build_analyses(const ContractModel& model);

/// Model replay: names of hard assertions that evaluate to false.
std::vector<std::string> failed_hard(const AnalysisInstance& instance, const Valuation& v);
std::vector<std::string> violated_soft(const AnalysisInstance& instance, const Valuation& v);

}  // namespace contractcheck
