#include "contractcheck/orchestrator.hpp"
#include "contractcheck/report.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace contractcheck;

namespace {

Report analyze(const std::string& name, RunOptions options = {}) {
  return analyze_document(testing::fixture(name), name, testing::solver_config(), options);
}

const AnalysisOutcome& outcome(const Report& r, const std::string& id) {
  auto it = std::find_if(r.analyses.begin(), r.analyses.end(), [&](const auto& o) { return o.id == id; });
  REQUIRE(it != r.analyses.end());
  return *it;
}

ExecutionTrace sample_trace() {
  ExecutionTrace t;
  t.participants = {"Chris", "Eva"};
  t.events = {{28, "Chris", "Eva", "PayClaim", TraceEvent::Action::Performed, std::nullopt},
              {40, "Eva", "Chris", "Claim2", TraceEvent::Action::Compensated, 5000}};
  t.unperformed = {{"TransferClaim", "Eva", "Chris"}};
  t.satisfied = {{"PretzelWarranty", "Eva", "Chris"}};
  return t;
}

}  // namespace

TEST_SUITE("orchestrator") {
  TEST_CASE("bakery report") {
    Report r = analyze("bakery");
    CHECK(r.contract_id == "bakery");
    CHECK(r.analyses.size() == 13);
    CHECK(r.block_texts.size() == 11);
    CHECK_FALSE(r.has_tool_errors());
    CHECK(r.has_inconsistencies());

    const auto& transfer = outcome(r, "consistency__TransferClaim");
    CHECK(transfer.status == "unsat");
    CHECK(transfer.flagged);
    CHECK(std::find(transfer.core.begin(), transfer.core.end(), "owner_Bakery") != transfer.core.end());

    auto flag = std::find_if(r.flags.begin(), r.flags.end(),
                             [](const RedFlag& f) { return f.target == "TransferClaim"; });
    REQUIRE(flag != r.flags.end());
    CHECK(flag->kind == AnalysisKind::ClaimConsistency);
    CHECK(flag->block_ids == std::vector<std::string>{"Block1", "Block11"});

    const auto& spa = outcome(r, "execution__spa");
    CHECK(spa.status == "sat");
    CHECK_FALSE(spa.flagged);
    REQUIRE(spa.trace);
    CHECK(spa.violated_soft.size() == 2);
  }

  TEST_CASE("trace of the bakery execution") {
    Report r = analyze("bakery");
    const auto& trace = *outcome(r, "execution__spa").trace;
    CHECK(trace.participants == std::vector<std::string>{"Chris", "Eva"});
    // Events are ordered by day and every performed claim appears once.
    for (std::size_t i = 1; i < trace.events.size(); ++i) CHECK(trace.events[i - 1].day <= trace.events[i].day);
    std::set<std::string> seen;
    for (const auto& e : trace.events) CHECK(seen.insert(e.claim).second);
    REQUIRE(trace.unperformed.size() == 1);
    CHECK(trace.unperformed[0].claim == "TransferClaim");
    auto withdrawn = std::find_if(trace.events.begin(), trace.events.end(),
                                  [](const TraceEvent& e) { return e.claim == "RestitutionPurchaser"; });
    REQUIRE(withdrawn != trace.events.end());
    CHECK(withdrawn->action == TraceEvent::Action::Withdrawn);
    CHECK(withdrawn->actor == "Eva");
  }

  TEST_CASE("stats are the sum over analyses") {
    Report r = analyze("seeded");
    int vars = 0, constraints = 0;
    for (const auto& o : r.analyses) {
      vars += o.vars;
      constraints += o.constraints;
      CHECK(o.vars > 0);
      CHECK(o.constraints > 0);
    }
    CHECK(r.stats.vars == vars);
    CHECK(r.stats.constraints == constraints);
  }

  TEST_CASE("kind filter") {
    RunOptions options;
    options.kinds = {AnalysisKind::LimitationCheck};
    Report r = analyze("bakery", options);
    REQUIRE(r.analyses.size() == 2);
    CHECK(outcome(r, "limitation__Claim1").status == "unsat");
    CHECK(outcome(r, "limitation__Claim2").status == "sat");
    REQUIRE(r.flags.size() == 1);
    CHECK(r.flags[0].explanation.find("after its limitation on day 70") != std::string::npos);
  }

  TEST_CASE("flags with the same blocks are merged") {
    RedFlag a{AnalysisKind::ClaimConsistency, "X", {"Block1"}, "e", {"consistency__X"}};
    RedFlag b{AnalysisKind::ClaimConsistency, "Y", {"Block1"}, "e", {"consistency__Y"}};
    RedFlag c{AnalysisKind::ClaimUnsatisfiable, "X", {"Block1"}, "e", {"unsat__X"}};
    auto out = dedupe_flags({a, b, c});
    REQUIRE(out.size() == 2);
    CHECK(out[0].analyses == std::vector<std::string>{"consistency__X", "consistency__Y"});
  }

  TEST_CASE("an empty core is attributed to the harness") {
    AnalysisInstance inst;
    inst.kind = AnalysisKind::ClaimConsistency;
    inst.targets = {"X"};
    RedFlag f = flags_from_core(inst, {});
    CHECK(f.block_ids == std::vector<std::string>{kHarnessOrigin});
  }

  TEST_CASE("a broken solver yields error outcomes") {
    auto cfg = testing::solver_config();
    cfg.executable = "/nonexistent/solver";
    Report r = analyze_document(testing::fixture("bakery"), "bakery", cfg);
    CHECK(r.has_tool_errors());
    for (const auto& o : r.analyses) CHECK(o.status == "error");
  }
}

TEST_SUITE("report") {
  TEST_CASE("json round trip") {
    Report r = analyze("bakery");
    CHECK(report_from_json(to_json(r, {true, 2})) == r);
    Report plain = report_from_json(to_json(r));
    CHECK(plain.flags == r.flags);
    CHECK(plain.stats.vars == r.stats.vars);
    // Without timing two runs give the same bytes.
    CHECK(to_json(analyze("bakery")) == to_json(r));
  }

  TEST_CASE("json schema") {
    Report r = analyze("bakery_clean");
    std::string j = to_json(r);
    for (const char* key : {"\"version\"", "\"contract\"", "\"findings\"", "\"analyses\"", "\"flags\"",
                            "\"blocks\"", "\"stats\""}) {
      CHECK(j.find(key) != std::string::npos);
    }
    CHECK(j.find("seconds") == std::string::npos);
    CHECK(to_json(r, {true, 2}).find("solve_seconds") != std::string::npos);
    CHECK_THROWS(report_from_json("{}"));
    CHECK_THROWS(report_from_json("[1,"));
  }

  TEST_CASE("text output shows flagged blocks side by side") {
    Report r = analyze("bakery");
    std::string text = to_text(r);
    CHECK(text.find("Block1") != std::string::npos);
    CHECK(text.find("Block11") != std::string::npos);
    CHECK(text.find("TransferClaim") != std::string::npos);

    std::string clean = to_text(analyze("bakery_clean"));
    CHECK(clean.find("no inconsistencies found") != std::string::npos);
  }

  TEST_CASE("sequence diagram") {
    std::string d = to_sequence_diagram(sample_trace());
    CHECK(d.rfind("sequenceDiagram", 0) == 0);
    CHECK(d.find("participant Chris") != std::string::npos);
    CHECK(d.find("Chris->>Eva: day 28 PayClaim") != std::string::npos);
    CHECK(d.find("5000") != std::string::npos);
    CHECK(d.find("Note over") != std::string::npos);
    CHECK(d.find("TransferClaim") != std::string::npos);
  }
}
