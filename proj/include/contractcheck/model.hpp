#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "contractcheck/blocks.hpp"
#include "contractcheck/finding.hpp"
#include "contractcheck/symbols.hpp"
#include "contractcheck/term.hpp"

namespace contractcheck {

enum class ClaimKind { Primary, Warranty, Performance, Restitution, Compensation };

const char* to_string(ClaimKind kind);

/// A day number: absolute, or an offset whose anchor depends on the claim.
struct DateExpr {
  enum class Kind { Absolute, Relative };
  Kind kind = Kind::Absolute;
  std::int64_t day = 0;

  static DateExpr absolute(std::int64_t d) { return {Kind::Absolute, d}; }
  static DateExpr relative(std::int64_t offset) { return {Kind::Relative, offset}; }
  bool operator==(const DateExpr&) const = default;
};

struct PerformanceSpec {
  enum class Kind { None, Transfer, Formula };
  Kind kind = Kind::None;
  // Transfer
  std::string object;
  std::string from;
  std::string to;
  // Formula
  Expr formula;

  bool operator==(const PerformanceSpec&) const = default;
};

struct Claim {
  std::string id;
  ClaimKind kind = ClaimKind::Primary;
  std::string block;  // declaring block
  std::string debtor;
  std::string creditor;
  PerformanceSpec performance;
  std::optional<DateExpr> arise;
  std::optional<DateExpr> due;
  std::optional<DateExpr> limitation;
  std::optional<std::string> trigger;
  std::optional<std::string> precede;
  std::optional<std::int64_t> min;
  std::optional<std::int64_t> max;
  std::optional<Expr> compensation;
  /// Declaring block plus every block that assigned one of its attributes.
  std::set<std::string> origin_blocks;

  bool is_secondary() const { return trigger.has_value(); }
  bool operator==(const Claim&) const = default;
};

struct Person {
  std::string id;
  std::set<std::string> blocks;
  bool operator==(const Person&) const = default;
};

struct LegalObject {
  std::string id;
  std::string type;  // Shares, PurchasePrice, Object
  std::optional<std::int64_t> amount;
  std::set<std::string> blocks;
  bool operator==(const LegalObject&) const = default;
};

struct PropertyRight {
  std::string person;
  std::string object;
  std::string block;
  bool operator==(const PropertyRight&) const = default;
};

/// An Integer-typed block parameter; becomes an SMT integer variable.
struct IntegerParameter {
  std::string name;  // e.g. Block6_count
  std::optional<std::int64_t> value;
  std::string block;         // declaring block
  std::string value_origin;  // block that assigned the value
  bool operator==(const IntegerParameter&) const = default;
};

/// The instantiated object diagram of one contract.
struct ContractModel {
  std::string contract_id;
  std::map<std::string, Person> persons;
  std::map<std::string, LegalObject> objects;
  std::vector<PropertyRight> property_rights;
  std::map<std::string, Claim> claims;
  std::map<std::string, IntegerParameter> integers;
  std::optional<std::string> seller;
  std::optional<std::string> purchaser;
  std::optional<std::string> shares;
  std::optional<std::string> price;
  std::int64_t signing_day = 0;
  std::optional<std::int64_t> closing_day;
  std::set<std::string> spa_blocks;
  /// Non-fatal problems noticed while building (missing attributes etc.).
  std::vector<Finding> issues;

  bool operator==(const ContractModel&) const = default;
  const Claim& claim(const std::string& id) const;
};

class ModelError : public std::runtime_error {
 public:
  ModelError(std::string block_id, const std::string& what)
      : std::runtime_error(block_id + ": " + what), block_id_(std::move(block_id)) {}
  const std::string& block_id() const { return block_id_; }

 private:
  std::string block_id_;
};

ContractModel build_model(const std::vector<Block>& blocks, const SymbolTable& symbols,
                          std::string contract_id = "contract");

/// Parse + resolve + build in one step.
ContractModel load_model(std::string_view document, std::string contract_id = "contract");

/// Connected components of the Trigger relation, each sorted, ordered by
/// smallest member.
std::vector<std::set<std::string>> trigger_sets(const ContractModel& model);

/// Number of ways to pick exactly one claim per trigger set.
std::int64_t count_executions(const ContractModel& model);

/// Claims in 𝒞_I: primary claims and independent warranties (no trigger).
std::vector<std::string> independent_claims(const ContractModel& model);
/// Claims whose Trigger is `id`.
std::vector<std::string> consequences_of(const ContractModel& model, const std::string& id);

// SMT variable naming.
std::string date_var(const std::string& claim_id);
std::string dprime_var(const std::string& claim_id);
std::string amount_var(const std::string& claim_id);

struct Bound {
  enum class Source { Due, Limitation };
  Term term;
  bool strict = false;
  Source source = Source::Due;
};

/// Admissible performance days of a claim: every lower bound and every upper
/// bound must hold.
struct Window {
  std::vector<Bound> lower;
  std::vector<Bound> upper;

  /// Conjunction of the bounds over `d`, optionally without Limitation bounds.
  Term contains(const Term& d, bool with_limitation = true) const;
};

Window resolve_window(const ContractModel& model, const Claim& claim);

/// The claim's due date as a term (trigger-relative dates use d').
Term due_term(const ContractModel& model, const Claim& claim);

/// Object diagram as JSON, for inspection.
std::string model_to_json(const ContractModel& model);

}  // namespace contractcheck
