#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "contractcheck/encoder.hpp"
#include "contractcheck/model.hpp"
#include "contractcheck/report.hpp"
#include "contractcheck/solver.hpp"

namespace contractcheck {

struct RunOptions {
  /// Empty means every kind.
  std::set<AnalysisKind> kinds;
  unsigned workers = 0;  // 0: hardware concurrency, at most 8
};

/// Emitted symbol and assertion counts of one instance.
struct InstanceSize {
  int vars = 0;
  int constraints = 0;
};
InstanceSize instance_size(const AnalysisInstance& instance);

ExecutionTrace trace_from_model(const ContractModel& model, const SmtModel& smt);

RedFlag flags_from_core(const AnalysisInstance& instance, const std::vector<std::string>& core);

/// Merges flags with equal kind and block set.
std::vector<RedFlag> dedupe_flags(std::vector<RedFlag> flags);

Report run_all(const ContractModel& model, const SolverConfig& config, const RunOptions& options = {});

/// Parse, resolve, build, check and solve one block document. Parse and
/// resolution errors propagate as exceptions.
Report analyze_document(std::string_view document, const std::string& contract_id,
                        const SolverConfig& config, const RunOptions& options = {});

}  // namespace contractcheck
