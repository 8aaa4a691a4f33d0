#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "contractcheck/encoder.hpp"
#include "contractcheck/finding.hpp"
#include "contractcheck/solver.hpp"

namespace contractcheck {

inline constexpr int kReportVersion = 1;

struct TraceEvent {
  enum class Action { Performed, Asserted, Withdrawn, Compensated };
  std::int64_t day = 0;
  std::string actor;
  std::string counterparty;
  std::string claim;
  Action action = Action::Performed;
  std::optional<std::int64_t> amount;  // Compensated only

  bool operator==(const TraceEvent&) const = default;
};

const char* to_string(TraceEvent::Action a);

/// A claim that produced no event: an unperformed claim or a met warranty.
struct TraceNote {
  std::string claim;
  std::string debtor;
  std::string creditor;
  bool operator==(const TraceNote&) const = default;
};

struct ExecutionTrace {
  std::vector<std::string> participants;
  std::vector<TraceEvent> events;  // by day, then claim id
  std::vector<TraceNote> unperformed;
  std::vector<TraceNote> satisfied;  // warranties that held
  bool operator==(const ExecutionTrace&) const = default;
};

struct RedFlag {
  AnalysisKind kind = AnalysisKind::ClaimConsistency;
  std::string target;
  std::vector<std::string> block_ids;
  std::string explanation;
  std::vector<std::string> analyses;  // instance ids sharing this root cause
  bool operator==(const RedFlag&) const = default;
};

struct AnalysisOutcome {
  std::string id;
  AnalysisKind kind = AnalysisKind::ClaimConsistency;
  std::vector<std::string> targets;
  Expectation expectation = Expectation::SatIsGood;
  std::string status;  // sat | unsat | unknown | error
  bool flagged = false;
  std::string detail;  // unknown reason or error message
  std::vector<std::string> core;
  std::vector<std::string> violated_soft;
  std::optional<ExecutionTrace> trace;
  int vars = 0;
  int constraints = 0;
  double seconds = 0;
  bool operator==(const AnalysisOutcome&) const = default;
};

struct ReportStats {
  int vars = 0;
  int constraints = 0;
  double solve_seconds = 0;
  long max_solver_rss_kb = 0;
  bool operator==(const ReportStats&) const = default;
};

struct Report {
  int version = kReportVersion;
  std::string contract_id;
  std::vector<Finding> findings;
  std::vector<AnalysisOutcome> analyses;
  std::vector<RedFlag> flags;
  /// Block id -> text with placeholders filled, for side-by-side display.
  std::map<std::string, std::string> block_texts;
  ReportStats stats;
  bool operator==(const Report&) const = default;

  bool has_tool_errors() const;
  /// Flags or error-severity findings present.
  bool has_inconsistencies() const;
};

struct JsonOptions {
  /// Timings and memory vary between runs; off by default so equal inputs
  /// give equal bytes.
  bool include_timing = false;
  int indent = 2;
};

std::string to_json(const Report& report, const JsonOptions& options = {});
/// Inverse of to_json; throws std::runtime_error on schema mismatch.
Report report_from_json(const std::string& text);

/// Terminal summary with flagged blocks side by side.
std::string to_text(const Report& report);

/// Mermaid sequence diagram.
std::string to_sequence_diagram(const ExecutionTrace& trace);

}  // namespace contractcheck
