// Acceptance checks for the consistency engine. Prints one PASS/FAIL line
// per criterion and exits nonzero if any criterion fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "contractcheck/orchestrator.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace contractcheck;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

/// Collects failed expectations of one criterion.
struct Check {
  std::vector<std::string> failures;
  std::string note;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

const AnalysisInstance* instance_by_id(const std::vector<AnalysisInstance>& all, const std::string& id) {
  for (const auto& i : all) {
    if (i.id() == id) return &i;
  }
  return nullptr;
}

const AnalysisOutcome* outcome_by_id(const Report& r, const std::string& id) {
  for (const auto& o : r.analyses) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

std::vector<const RedFlag*> flags_for(const Report& r, AnalysisKind kind, const std::string& target) {
  std::vector<const RedFlag*> out;
  for (const auto& f : r.flags) {
    if (f.kind == kind && f.target == target) out.push_back(&f);
  }
  return out;
}

std::int64_t int_or(const SmtModel& m, const std::string& name, std::int64_t fallback) {
  auto it = m.ints.find(name);
  return it == m.ints.end() ? fallback : it->second;
}

/// Whether a claim is the executed member of its trigger set.
Term executed(const Claim& c) { return c.trigger ? int_var(date_var(c.id)) >= 0 : performed(c); }

Report analyze_fixture(const std::string& name, RunOptions options = {}) {
  return analyze_document(testing::fixture(name), name, testing::solver_config(), options);
}

// ---- criteria --------------------------------------------------------------

Check criterion1() {
  Check c;
  auto start = Clock::now();
  Report r = analyze_fixture("bakery", {{AnalysisKind::ClaimConsistency}, 0});
  double seconds = since(start);
  const AnalysisOutcome* o = outcome_by_id(r, "consistency__TransferClaim");
  c.expect(o && o->status == "unsat", "consistency__TransferClaim is not unsat");
  auto flags = flags_for(r, AnalysisKind::ClaimConsistency, "TransferClaim");
  c.expect(flags.size() == 1, "expected one TransferClaim flag");
  if (flags.size() == 1) {
    c.expect(flags[0]->block_ids == std::vector<std::string>{"Block1", "Block11"},
             "flag blocks differ from {Block1, Block11}");
  }
  c.expect(seconds < 1.0, "runtime " + std::to_string(seconds) + " s");
  std::ostringstream os;
  os << "runtime " << seconds << " s";
  c.note = os.str();
  return c;
}

Check criterion2() {
  Check c;
  auto model = testing::fixture_model("bakery");
  auto all = build_analyses(model);
  auto cfg = testing::solver_config();

  const AnalysisInstance* pay = instance_by_id(all, "consistency__PayClaim");
  c.expect(pay, "no consistency__PayClaim instance");
  if (pay) {
    Verdict v = solve(*pay, cfg);
    c.expect(v.status == Verdict::Status::Sat, "PayClaim not sat");
    c.expect(int_or(v.model, date_var("PayClaim"), -1) >= 28, "d_PayClaim < 28");
    auto owner = v.model.owner.find("Price");
    c.expect(owner != v.model.owner.end() && owner->second == "Chris", "owner(Price) != Chris");
  }
  const AnalysisInstance* w = instance_by_id(all, "consistency__PretzelWarranty");
  c.expect(w, "no consistency__PretzelWarranty instance");
  if (w) {
    Verdict v = solve(*w, cfg);
    c.expect(v.status == Verdict::Status::Sat, "PretzelWarranty not sat");
    c.expect(int_or(v.model, date_var("PretzelWarranty"), 0) == -1, "d_PretzelWarranty != -1");
    c.expect(int_or(v.model, "Block6_count", 0) == 10000, "Pretzels != 10000");
  }
  return c;
}

Check criterion3() {
  Check c;
  auto model = testing::fixture_model("bakery");
  auto all = build_analyses(model);
  auto cfg = testing::solver_config();
  const AnalysisInstance* spa = instance_by_id(all, "execution__spa");
  if (!spa) {
    c.expect(false, "no execution__spa instance");
    return c;
  }
  Verdict v = solve_maxsmt(*spa, cfg);
  c.expect(v.status == Verdict::Status::Sat, "execution not sat");
  if (v.status != Verdict::Status::Sat) return c;
  Valuation val = v.model.valuation();
  c.expect(failed_hard(*spa, val).empty(), "replay failed");

  auto sets = trigger_sets(model);
  for (const auto& set : sets) {
    int n = 0;
    for (const auto& id : set) n += evaluate_bool(executed(model.claim(id)), val);
    c.expect(n == 1, "trigger set of " + *set.begin() + " has " + std::to_string(n) + " executed claims");
  }

  // Brute force: fix the executed member of every set and keep the best.
  std::vector<std::vector<std::string>> members;
  for (const auto& s : sets) members.emplace_back(s.begin(), s.end());
  std::vector<std::size_t> pick(members.size(), 0);
  std::size_t best = SIZE_MAX;
  int combinations = 0;
  int feasible = 0;
  for (;;) {
    ++combinations;
    AnalysisInstance fixed = *spa;
    for (std::size_t s = 0; s < members.size(); ++s) {
      for (std::size_t k = 0; k < members[s].size(); ++k) {
        Term t = executed(model.claim(members[s][k]));
        fixed.assertions.push_back({spa->id() + "__pick_" + members[s][k], k == pick[s] ? t : !t, {kHarnessOrigin}});
      }
    }
    Verdict fv = solve(fixed, cfg);
    if (fv.status == Verdict::Status::Sat) {
      ++feasible;
      best = std::min(best, violated_soft(*spa, fv.model.valuation()).size());
    }
    std::size_t s = 0;
    while (s < pick.size() && ++pick[s] == members[s].size()) pick[s++] = 0;
    if (s == pick.size()) break;
  }
  c.expect(combinations == 12, "enumerated " + std::to_string(combinations) + " combinations");
  c.expect(v.model.violated_soft.size() == best, "MaxSMT violates " + std::to_string(v.model.violated_soft.size()) +
                                                     ", brute force minimum " + std::to_string(best));
  c.note = std::to_string(combinations) + " combinations, " + std::to_string(feasible) + " feasible, optimum violates " +
           std::to_string(best);
  return c;
}

Check criterion4() {
  Check c;
  Report r = analyze_fixture("bakery", {{AnalysisKind::LimitationCheck}, 0});
  const AnalysisOutcome* c1 = outcome_by_id(r, "limitation__Claim1");
  const AnalysisOutcome* c2 = outcome_by_id(r, "limitation__Claim2");
  c.expect(c1 && c1->status == "unsat", "limitation__Claim1 not unsat");
  c.expect(c2 && c2->status == "sat", "limitation__Claim2 not sat");

  auto model = testing::fixture_model("bakery");
  auto all = build_analyses(model);
  const AnalysisInstance* inst = instance_by_id(all, "limitation__Claim2");
  if (inst) {
    Verdict v = solve_maxsmt(*inst, testing::solver_config());
    std::int64_t d = int_or(v.model, date_var("Claim2"), 0);
    c.expect(v.status == Verdict::Status::Sat && d > 70, "witness d_Claim2 = " + std::to_string(d));
    c.note = "witness d_Claim2 = " + std::to_string(d);
  }
  return c;
}

Check criterion5() {
  Check c;
  Report r = analyze_fixture("bakery_clean");
  c.expect(r.flags.empty(), std::to_string(r.flags.size()) + " flags");
  c.expect(!r.has_tool_errors(), "tool errors");
  const AnalysisOutcome* spa = outcome_by_id(r, "execution__spa");
  c.expect(spa && spa->trace, "no execution trace");
  if (spa && spa->trace) {
    c.expect(spa->violated_soft.empty(), "violated soft assertions in the clean execution");
    c.expect(spa->trace->unperformed.empty(), "unperformed claims in the clean execution");
    bool all_performed = std::all_of(spa->trace->events.begin(), spa->trace->events.end(),
                                     [](const TraceEvent& e) { return e.action == TraceEvent::Action::Performed; });
    c.expect(all_performed, "secondary claims in the clean execution");
  }
  return c;
}

Check criterion6() {
  Check c;
  RunOptions defense{{AnalysisKind::ClaimDefense}, 0};
  Report late = analyze_fixture("bakery_precede29", defense);
  const AnalysisOutcome* o = outcome_by_id(late, "defense__PayClaim_TransferClaim");
  c.expect(o && o->status == "sat" && o->flagged, "payment due 29: defense not flagged");
  c.expect(late.flags.size() == 1, "payment due 29: expected one flag");

  Report same = analyze_fixture("bakery_precede", defense);
  o = outcome_by_id(same, "defense__PayClaim_TransferClaim");
  c.expect(o && o->status == "unsat" && !o->flagged, "both due 28: defense not unsat");
  c.expect(same.flags.empty(), "both due 28: unexpected flag");
  return c;
}

Check criterion7() {
  Check c;
  auto start = Clock::now();
  Report r = analyze_fixture("seeded");
  Report repaired = analyze_fixture("seeded_repaired");
  double batch = since(start);

  struct Expected {
    char label;
    AnalysisKind kind;
    std::string target;
  };
  const Expected expected[] = {
      {'a', AnalysisKind::ClaimConsistency, "ShareWarranty"},
      {'b', AnalysisKind::ClaimConsistency, "InventoryCompensation"},
      {'c', AnalysisKind::ClaimUnsatisfiable, "RealEstateWarranty"},
      {'d', AnalysisKind::ClaimDefense, "StatementsTransmission"},
      {'e', AnalysisKind::LimitationCheck, "LateInterest"},
  };
  for (const auto& e : expected) {
    c.expect(flags_for(r, e.kind, e.target).size() == 1,
             std::string("seeded error ") + e.label + " not detected by " + to_string(e.kind));
  }
  c.expect(r.flags.size() == 5, "seeded fixture has " + std::to_string(r.flags.size()) + " flags");
  c.expect(repaired.flags.empty(), "repaired fixture has " + std::to_string(repaired.flags.size()) + " flags");
  c.expect(!r.has_tool_errors() && !repaired.has_tool_errors(), "tool errors");

  double slowest = 0;
  for (const Report* rep : {&r, &repaired}) {
    for (const auto& o : rep->analyses) slowest = std::max(slowest, o.seconds);
  }
  c.expect(batch < 30.0, "batch took " + std::to_string(batch) + " s");
  c.expect(slowest < 1.0, "slowest instance took " + std::to_string(slowest) + " s");
  std::ostringstream os;
  os << r.analyses.size() + repaired.analyses.size() << " instances in " << batch << " s, slowest " << slowest << " s";
  c.note = os.str();
  return c;
}

// ---- randomized models -----------------------------------------------------

struct ClaimRef {
  std::string ref;  // e.g. Block1_transfer
  bool warranty = false;
  std::string count, amount;  // warranty integers
  bool has_performance = true;
};

/// A random SPA with the two primary claims and up to two further claims.
std::string random_contract(std::mt19937& rng) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  auto s = [](int v) { return std::to_string(v); };

  int closing = uni(10, 40);
  json doc = json::array();
  doc.push_back({{"ID", "Block1"},
                 {"Text", "SPA"},
                 {"Object", {"spa:SPA", "seller:Person", "purchaser:Person", "shares:Shares", "transfer:PrimaryClaim"}},
                 {"Assignment",
                  {"seller.Name=Anna", "purchaser.Name=Ben", "shares.Name=Firm", "spa.Seller=$seller",
                   "spa.Purchaser=$purchaser", "spa.Object=$shares", "spa.Closing=" + s(closing),
                   "spa.Claim=$transfer", "transfer.Name=Transfer", "transfer.Debtor=$seller",
                   "transfer.Creditor=$purchaser", "transfer.DueDate=" + s(closing + uni(-2, 2)),
                   "transfer.Performance=$shares.transfer($purchaser)"}}});
  json price = {"spa=$Block1_spa", "spa.Price=$price", "price.Name=Price", "price.Amount=" + s(uni(1, 9) * 1000),
                "spa.Claim=$payment", "payment.Name=Payment", "payment.Debtor=$Block1_purchaser",
                "payment.Creditor=$Block1_seller", "payment.DueDate=" + s(closing + uni(-3, 3)),
                "payment.Performance=$price.transfer($Block1_seller)"};
  if (chance(0.2)) price.push_back("payment.Precede=$Block1_transfer");
  doc.push_back({{"ID", "Block2"},
                 {"Text", "Price"},
                 {"Object", {"spa:$SPA", "price:PurchasePrice", "payment:PrimaryClaim"}},
                 {"Assignment", price}});

  std::vector<ClaimRef> claims{{"Block1_transfer"}, {"Block2_payment"}};
  int next = 3;
  if (chance(0.4)) {
    const char* owners[] = {"Anna", "Ben", "Bank"};
    std::string id = "Block" + s(next++);
    doc.push_back({{"ID", id},
                   {"Text", "Security"},
                   {"Object", {"owner:Person", "object:$Object", "prop:PropertyRight"}},
                   {"Assignment",
                    {std::string("owner.Name=") + owners[uni(0, 2)],
                     chance(0.7) ? "object=$Block1_shares" : "object=$Block2_price", "prop.Owner=$owner",
                     "prop.Property=$object"}}});
  }

  int extra = uni(0, 2);
  for (int k = 0; k < extra; ++k) {
    std::string id = "Block" + s(next++);
    if (chance(0.4)) {
      const char* ops[] = {"=", ">=", "<="};
      json assign = {"warranty.Name=W" + id, "warranty.Debtor=$Block1_seller", "warranty.Creditor=$Block1_purchaser",
                     "warranty.DueDate=$Block1_spa.Closing",
                     chance(0.7) ? "warranty.Limitation=+" + s(uni(1, 30))
                                 : "warranty.Limitation=" + s(closing + uni(-5, 40)),
                     "amount=" + s(uni(1, 100)),
                     "warranty.Performance=(" + id + "_count" + ops[uni(0, 2)] + id + "_amount)",
                     "Block1_spa.Claim=$warranty"};
      if (chance(0.5)) assign.push_back("count=" + s(uni(0, 100)));
      doc.push_back({{"ID", id},
                     {"Text", "Warranty"},
                     {"Object", {"warranty:WarrantyClaim", "count:Integer", "amount:Integer"}},
                     {"Assignment", assign}});
      claims.push_back({id + "_warranty", true, id + "_count", id + "_amount"});
      continue;
    }
    const ClaimRef trigger = claims[uni(0, static_cast<int>(claims.size()) - 1)];
    json assign = {"claim=$" + trigger.ref, "sec.Name=S" + id, "sec.Trigger=$claim"};
    std::string type;
    int kind = uni(0, trigger.warranty ? 2 : 1);
    if (kind == 0) {
      type = "RestitutionClaim";
      assign.push_back("sec.Debtor=$claim.Creditor");
      assign.push_back("sec.Creditor=$claim.Debtor");
    } else {
      type = kind == 1 ? "PerformanceClaim" : "CompensationClaim";
      assign.push_back("sec.Debtor=$claim.Debtor");
      assign.push_back("sec.Creditor=$claim.Creditor");
      assign.push_back("sec.DueDate=+" + s(uni(1, 40)));
      if (kind == 1 && trigger.has_performance && chance(0.5)) assign.push_back("sec.Performance=$claim.Performance");
      if (kind == 2) {
        int min = uni(0, 50);
        assign.push_back("sec.Min=" + s(min));
        if (chance(0.7)) assign.push_back("sec.Max=" + s(min + uni(-10, 200)));
        assign.push_back("sec.Compensation=((" + trigger.amount + "-" + trigger.count + ")*" + s(uni(1, 10)) + ")");
      }
    }
    if (chance(0.5)) {
      assign.push_back(chance(0.5) ? "sec.Limitation=" + s(closing + uni(0, 80)) : "sec.Limitation=+" + s(uni(1, 60)));
    }
    doc.push_back({{"ID", id}, {"Text", "Secondary"}, {"Object", {"claim:$Claim", "sec:" + type}}, {"Assignment", assign}});
    claims.push_back({id + "_sec", false, "", "", false});
  }
  return doc.dump();
}

struct SoundnessStats {
  int models = 0;
  int instances = 0;
  int sat = 0;
  int unsat = 0;
  std::vector<std::string> failures;
};

void check_random_model(const std::string& doc, int index, const SolverConfig& cfg, SoundnessStats& out,
                        std::mutex& mutex) {
  std::vector<std::string> failures;
  int instances = 0, sat = 0, unsat = 0;
  auto tag = "model " + std::to_string(index) + ": ";
  try {
    auto model = load_model(doc, "random" + std::to_string(index));
    if (model.claims.size() > 4) failures.push_back(tag + "more than 4 claims");
    for (const auto& inst : build_analyses(model)) {
      ++instances;
      Verdict v = inst.has_soft() ? solve_maxsmt(inst, cfg) : solve(inst, cfg);
      if (v.status == Verdict::Status::Sat) {
        ++sat;
        auto failed = failed_hard(inst, v.model.valuation());
        if (!failed.empty()) failures.push_back(tag + inst.id() + " replay failed at " + failed.front());
      } else if (v.status == Verdict::Status::Unsat) {
        ++unsat;
        Verdict again = solve(restrict_to(inst, v.core), cfg);
        if (again.status != Verdict::Status::Unsat) failures.push_back(tag + inst.id() + " core is satisfiable");
      } else {
        failures.push_back(tag + inst.id() + " unknown: " + v.reason);
      }
    }
  } catch (const std::exception& e) {
    failures.push_back(tag + e.what());
  }
  std::lock_guard lock(mutex);
  ++out.models;
  out.instances += instances;
  out.sat += sat;
  out.unsat += unsat;
  out.failures.insert(out.failures.end(), failures.begin(), failures.end());
}

std::vector<std::string> random_documents(int n) {
  std::mt19937 rng(20240917);
  std::vector<std::string> docs;
  for (int i = 0; i < n; ++i) docs.push_back(random_contract(rng));
  return docs;
}

Check criterion8() {
  Check c;
  auto docs = random_documents(100);
  auto cfg = testing::solver_config();
  SoundnessStats stats;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  unsigned workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < docs.size(); i = next++) {
        check_random_model(docs[i], static_cast<int>(i), cfg, stats, mutex);
      }
    });
  }
  for (auto& t : pool) t.join();
  c.expect(stats.models == 100, "checked " + std::to_string(stats.models) + " models");
  c.expect(stats.sat > 0 && stats.unsat > 0, "random models did not produce both verdicts");
  for (const auto& f : stats.failures) c.expect(false, f);
  c.note = std::to_string(stats.models) + " models, " + std::to_string(stats.instances) + " instances (" +
           std::to_string(stats.sat) + " sat, " + std::to_string(stats.unsat) + " unsat)";
  return c;
}

/// Subsets of claims with exactly one member per connected component of the
/// Trigger relation, counted by enumeration.
std::int64_t enumerate_executions(const ContractModel& model) {
  std::vector<std::string> ids;
  for (const auto& [id, claim] : model.claims) ids.push_back(id);
  std::size_t n = ids.size();
  std::vector<std::size_t> component(n);
  for (std::size_t i = 0; i < n; ++i) component[i] = i;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    return component[i] == i ? i : component[i] = find(component[i]);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto& trigger = model.claim(ids[i]).trigger;
    if (!trigger) continue;
    auto j = std::find(ids.begin(), ids.end(), *trigger) - ids.begin();
    component[find(i)] = find(static_cast<std::size_t>(j));
  }
  std::int64_t count = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::map<std::size_t, int> chosen;
    for (std::size_t i = 0; i < n; ++i) chosen[find(i)] += (mask >> i) & 1;
    count += std::all_of(chosen.begin(), chosen.end(), [](const auto& kv) { return kv.second == 1; });
  }
  return count;
}

Check criterion9() {
  Check c;
  int checked = 0;
  for (const char* name :
       {"bakery", "bakery_clean", "bakery_precede", "bakery_precede29", "seeded", "seeded_repaired"}) {
    auto model = testing::fixture_model(name);
    if (trigger_sets(model).size() > 4) continue;
    ++checked;
    std::int64_t expected = enumerate_executions(model);
    c.expect(count_executions(model) == expected, std::string(name) + ": count_executions " +
                                                      std::to_string(count_executions(model)) + " vs " +
                                                      std::to_string(expected));
  }
  for (const auto& doc : random_documents(100)) {
    auto model = load_model(doc);
    ++checked;
    c.expect(count_executions(model) == enumerate_executions(model), "random model mismatch");
  }
  c.note = std::to_string(checked) + " models";
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* title;
    Check (*run)();
  };
  const Criterion criteria[] = {
      {1, "bakery TransferClaim inconsistent, flag cites Block1 and Block11", criterion1},
      {2, "bakery PayClaim and PretzelWarranty consistent", criterion2},
      {3, "bakery execution optimal against brute force", criterion3},
      {4, "limitation check on Claim1 and Claim2", criterion4},
      {5, "repaired bakery is clean", criterion5},
      {6, "precede variant flagged, base not", criterion6},
      {7, "seeded errors detected, repaired variant clean", criterion7},
      {8, "soundness on random models", criterion8},
      {9, "execution counts match enumeration", criterion9},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check result;
    try {
      result = cr.run();
    } catch (const std::exception& e) {
      result.failures.push_back(std::string("exception: ") + e.what());
    }
    bool ok = result.failures.empty();
    failed += !ok;
    std::cout << "criterion " << cr.number << ": " << (ok ? "PASS" : "FAIL") << "  " << cr.title;
    if (!result.note.empty()) std::cout << " (" << result.note << ")";
    std::cout << '\n';
    for (const auto& f : result.failures) std::cout << "    " << f << '\n';
    std::cout.flush();
  }
  return failed == 0 ? 0 : 1;
}
