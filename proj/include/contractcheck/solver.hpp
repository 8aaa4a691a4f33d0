#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "contractcheck/encoder.hpp"
#include "contractcheck/term.hpp"

namespace contractcheck {

/// One parsed s-expression from solver output.
struct SExpr {
  std::string atom;  // empty for lists
  std::vector<SExpr> list;
  bool is_list = false;

  bool operator==(const SExpr&) const = default;
  bool is_atom(std::string_view s) const { return !is_list && atom == s; }
};

std::vector<SExpr> parse_sexprs(std::string_view text);
std::string to_string(const SExpr& e);

enum class MaxSmtMode { NativeSoft, IterativeFallback };

struct SolverConfig {
  std::string executable = "z3";
  std::vector<std::string> args;
  double timeout_seconds = 10.0;
  MaxSmtMode maxsmt_mode = MaxSmtMode::NativeSoft;

  /// Defaults, with the executable taken from CONTRACTCHECK_SOLVER when set.
  static SolverConfig from_env();
};

struct SmtModel {
  std::map<std::string, std::int64_t> ints;
  std::map<std::string, std::string> owner;  // object -> person
  std::vector<std::string> violated_soft;

  bool operator==(const SmtModel&) const = default;
  Valuation valuation() const { return {ints, owner}; }
};

struct Verdict {
  enum class Status { Sat, Unsat, Unknown };
  Status status = Status::Unknown;
  SmtModel model;
  std::vector<std::string> core;
  std::string reason;  // Unknown only
  double seconds = 0;
};

const char* to_string(Verdict::Status s);

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::string output = {})
      : std::runtime_error(what), output_(std::move(output)) {}
  const std::string& output() const { return output_; }

 private:
  std::string output_;
};

enum class SoftEmission { Omit, Native };

/// Declarations and named assertions, without query commands. Deterministic.
std::string emit_smtlib(const AnalysisInstance& instance, SoftEmission soft = SoftEmission::Omit);

/// Symbols the runner asks the solver to report.
struct ModelQuery {
  std::vector<std::string> ints;
  std::vector<std::string> objects;
  std::vector<std::string> persons;
};
ModelQuery query_for(const AnalysisInstance& instance);

/// Runs a script. When `text` has no (check-sat) the runner appends
/// check-sat, get-value for `query` and get-unsat-core.
Verdict run_solver(const std::string& text, const SolverConfig& config,
                   const ModelQuery& query = {});

/// Parses solver responses (status, get-value lists, unsat core).
Verdict parse_solver_output(std::string_view output);

/// get-value response text for the integer bindings, as a solver prints it.
std::string format_get_value(const std::map<std::string, std::int64_t>& ints);

/// Hard assertions only; soft assertions are ignored.
Verdict solve(const AnalysisInstance& instance, const SolverConfig& config);

/// Maximizes the number of satisfied soft assertions.
Verdict solve_maxsmt(const AnalysisInstance& instance, const SolverConfig& config);

/// Copy of the instance keeping only the named hard assertions.
AnalysisInstance restrict_to(const AnalysisInstance& instance, const std::vector<std::string>& names);

}  // namespace contractcheck
