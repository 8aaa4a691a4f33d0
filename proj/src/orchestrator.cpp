#include "contractcheck/orchestrator.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <atomic>
#include <map>
#include <thread>

#include "contractcheck/static_checks.hpp"

namespace contractcheck {

InstanceSize instance_size(const AnalysisInstance& instance) {
  SymbolSet sym;
  for (const auto& a : instance.assertions) collect_symbols(a.term, sym);
  InstanceSize s;
  s.vars = static_cast<int>(sym.int_vars.size() + sym.persons.size() + sym.objects.size());
  s.constraints = static_cast<int>(instance.assertions.size());
  if (sym.persons.size() >= 2) ++s.constraints;
  if (sym.objects.size() >= 2) ++s.constraints;
  return s;
}

ExecutionTrace trace_from_model(const ContractModel& model, const SmtModel& smt) {
  ExecutionTrace t;
  std::set<std::string> people;
  for (const auto& [id, c] : model.claims) {
    if (!c.debtor.empty()) people.insert(c.debtor);
    if (!c.creditor.empty()) people.insert(c.creditor);
    auto it = smt.ints.find(date_var(id));
    if (it == smt.ints.end()) continue;
    std::int64_t d = it->second;
    TraceNote note{id, c.debtor, c.creditor};
    if (c.kind == ClaimKind::Warranty) {
      if (d == -1) {
        t.satisfied.push_back(note);
      } else {
        t.events.push_back({d, c.creditor, c.debtor, id, TraceEvent::Action::Asserted, std::nullopt});
      }
      continue;
    }
    if (d < 0) {
      if (!c.trigger) t.unperformed.push_back(note);
      continue;
    }
    TraceEvent e{d, c.debtor, c.creditor, id, TraceEvent::Action::Performed, std::nullopt};
    if (c.kind == ClaimKind::Restitution) {
      e.action = TraceEvent::Action::Withdrawn;
      std::swap(e.actor, e.counterparty);
    } else if (c.kind == ClaimKind::Compensation) {
      e.action = TraceEvent::Action::Compensated;
      auto amount = smt.ints.find(amount_var(id));
      if (amount != smt.ints.end()) e.amount = amount->second;
    }
    t.events.push_back(e);
  }
  std::sort(t.events.begin(), t.events.end(), [](const TraceEvent& a, const TraceEvent& b) {
    return std::tie(a.day, a.claim) < std::tie(b.day, b.claim);
  });
  t.participants.assign(people.begin(), people.end());
  return t;
}

namespace {

std::string local_name(const AnalysisInstance& instance, const std::string& name) {
  std::string prefix = instance.id() + "__";
  return name.rfind(prefix, 0) == 0 ? name.substr(prefix.size()) : name;
}

const NamedAssertion* goal_of(const AnalysisInstance& instance) {
  return instance.find(instance.id() + "__goal");
}

std::string target_of(const AnalysisInstance& instance) {
  return instance.targets.empty() ? "contract" : instance.targets.front();
}

RedFlag flag_from_witness(const AnalysisInstance& instance, const SmtModel& smt) {
  RedFlag f;
  f.kind = instance.kind;
  f.target = target_of(instance);
  f.analyses = {instance.id()};
  const NamedAssertion* goal = goal_of(instance);
  if (goal) f.block_ids = goal->origin_blocks;
  if (f.block_ids.empty()) f.block_ids = {kHarnessOrigin};
  Valuation v = smt.valuation();
  auto day = [&](const Term& t) { return std::to_string(evaluate_int(t, v)); };
  if (goal && goal->term.kind() == Term::Kind::Lt) {
    const Term& lhs = goal->term.args()[0];
    const Term& rhs = goal->term.args()[1];
    if (instance.kind == AnalysisKind::LimitationCheck) {
      f.explanation = f.target + " can still be performed on day " + day(rhs) +
                      ", after its limitation on day " + day(lhs);
    } else if (instance.kind == AnalysisKind::ClaimDefense && instance.targets.size() == 2) {
      const std::string& x = instance.targets[0];
      const std::string& y = instance.targets[1];
      f.explanation = y + " falls due on day " + day(lhs) + ", before " + x +
                      " (due day " + day(rhs) + ") which must precede it";
    }
  }
  if (f.explanation.empty()) f.explanation = "a contract execution reaches the inconsistent state";
  return f;
}

}  // namespace

RedFlag flags_from_core(const AnalysisInstance& instance, const std::vector<std::string>& core) {
  RedFlag f;
  f.kind = instance.kind;
  f.target = target_of(instance);
  f.analyses = {instance.id()};
  std::set<std::string> blocks;
  bool harness = false;
  std::string explanation;
  for (const auto& name : core) {
    const NamedAssertion* a = instance.find(name);
    std::string local = local_name(instance, name);
    if (!a) {
      harness = true;
      explanation += (explanation.empty() ? "" : "; ") + local;
      continue;
    }
    for (const auto& b : a->origin_blocks) {
      if (b == kHarnessOrigin) harness = true;
      else blocks.insert(b);
    }
    explanation += (explanation.empty() ? "" : "; ") + local + ": " + to_infix(a->term);
  }
  if (blocks.empty() && (harness || core.empty())) blocks.insert(kHarnessOrigin);
  f.block_ids.assign(blocks.begin(), blocks.end());
  if (core.empty()) {
    f.explanation = "the solver returned an empty core; the instance is unsatisfiable as a whole";
  } else {
    f.explanation = "conflicting assertions: " + explanation;
  }
  return f;
}

std::vector<RedFlag> dedupe_flags(std::vector<RedFlag> flags) {
  std::vector<RedFlag> out;
  for (auto& f : flags) {
    auto same = std::find_if(out.begin(), out.end(), [&](const RedFlag& g) {
      return g.kind == f.kind && g.block_ids == f.block_ids;
    });
    if (same == out.end()) {
      out.push_back(std::move(f));
      continue;
    }
    for (auto& a : f.analyses) {
      if (std::find(same->analyses.begin(), same->analyses.end(), a) == same->analyses.end()) {
        same->analyses.push_back(a);
      }
    }
  }
  return out;
}

Report run_all(const ContractModel& model, const SolverConfig& config, const RunOptions& options) {
  Report report;
  report.contract_id = model.contract_id;
  report.findings = run_static_checks(model);

  std::vector<AnalysisInstance> instances;
  try {
    for (auto& inst : build_analyses(model)) {
      if (options.kinds.empty() || options.kinds.count(inst.kind)) instances.push_back(std::move(inst));
    }
  } catch (const ModelError& e) {
    report.findings.push_back({Severity::Error, "ENCODE_ERROR", e.what(), {e.block_id()}});
    return report;
  } catch (const std::exception& e) {
    report.findings.push_back({Severity::Error, "ENCODE_ERROR", e.what(), {"contract"}});
    return report;
  }

  struct Result {
    std::optional<Verdict> verdict;
    std::string error;
  };
  std::vector<Result> results(instances.size());
  unsigned workers = options.workers ? options.workers
                                     : std::min(8u, std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<unsigned>(workers, std::max<std::size_t>(1, instances.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < instances.size(); i = next++) {
      try {
        const auto& inst = instances[i];
        results[i].verdict = inst.has_soft() ? solve_maxsmt(inst, config) : solve(inst, config);
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  std::vector<RedFlag> flags;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const AnalysisInstance& inst = instances[i];
    AnalysisOutcome o;
    o.id = inst.id();
    o.kind = inst.kind;
    o.targets = inst.targets;
    o.expectation = inst.expectation();
    InstanceSize size = instance_size(inst);
    o.vars = size.vars;
    o.constraints = size.constraints;
    report.stats.vars += size.vars;
    report.stats.constraints += size.constraints;
    if (!results[i].verdict) {
      o.status = "error";
      o.detail = results[i].error;
      report.analyses.push_back(std::move(o));
      continue;
    }
    const Verdict& v = *results[i].verdict;
    o.status = to_string(v.status);
    o.seconds = v.seconds;
    report.stats.solve_seconds += v.seconds;
    if (v.status == Verdict::Status::Unknown) o.detail = v.reason;
    if (v.status == Verdict::Status::Sat) {
      auto failed = failed_hard(inst, v.model.valuation());
      if (!failed.empty()) {
        o.status = "error";
        o.detail = "model replay failed for " + failed.front();
        report.analyses.push_back(std::move(o));
        continue;
      }
      o.violated_soft = v.model.violated_soft;
      for (auto& s : o.violated_soft) s = local_name(inst, s);
      bool bad = inst.expectation() == Expectation::UnsatIsGood;
      if (bad || inst.kind == AnalysisKind::ContractExecutability) {
        o.trace = trace_from_model(model, v.model);
      }
      if (bad) {
        o.flagged = true;
        flags.push_back(flag_from_witness(inst, v.model));
      }
    } else if (v.status == Verdict::Status::Unsat) {
      o.core.reserve(v.core.size());
      for (const auto& c : v.core) o.core.push_back(local_name(inst, c));
      if (inst.expectation() == Expectation::SatIsGood) {
        o.flagged = true;
        flags.push_back(flags_from_core(inst, v.core));
      }
    }
    report.analyses.push_back(std::move(o));
  }
  report.flags = dedupe_flags(std::move(flags));

  rusage usage{};
  if (getrusage(RUSAGE_CHILDREN, &usage) == 0) report.stats.max_solver_rss_kb = usage.ru_maxrss;
  return report;
}

Report analyze_document(std::string_view document, const std::string& contract_id,
                        const SolverConfig& config, const RunOptions& options) {
  auto blocks = parse_contract(document);
  auto symbols = resolve_references(blocks);
  auto model = build_model(blocks, symbols, contract_id);
  Report report = run_all(model, config, options);
  for (const auto& b : blocks) report.block_texts[b.id] = render_text(b, symbols);
  return report;
}

}  // namespace contractcheck
