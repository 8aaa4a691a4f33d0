#include <sys/stat.h>
#include <unistd.h>

#include <chrono>

#include "contractcheck/solver.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace contractcheck;

namespace {

// A stand-in solver executable with a fixed shell body.
struct FakeSolver {
  std::string path;
  explicit FakeSolver(const std::string& body) {
    char tmpl[] = "/tmp/cc_fake_solver_XXXXXX";
    int fd = mkstemp(tmpl);
    REQUIRE(fd >= 0);
    std::string text = "#!/bin/sh\n" + body + "\n";
    REQUIRE(write(fd, text.data(), text.size()) == static_cast<ssize_t>(text.size()));
    close(fd);
    chmod(tmpl, 0755);
    path = tmpl;
  }
  ~FakeSolver() { unlink(path.c_str()); }
};

AnalysisInstance tiny(std::vector<NamedAssertion> assertions) {
  AnalysisInstance inst;
  inst.kind = AnalysisKind::ClaimConsistency;
  inst.targets = {"T"};
  for (auto& a : assertions) a.name = inst.id() + "__" + a.name;
  inst.assertions = std::move(assertions);
  return inst;
}

const AnalysisInstance& by_id(const std::vector<AnalysisInstance>& instances, const std::string& id) {
  auto it = std::find_if(instances.begin(), instances.end(), [&](const auto& i) { return i.id() == id; });
  REQUIRE(it != instances.end());
  return *it;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("s-expression parsing") {
    auto xs = parse_sexprs("sat\n((x 3)\n (y (- 4)))\n(|a b| \"s\\\"q\")");
    REQUIRE(xs.size() == 3);
    CHECK(xs[0].is_atom("sat"));
    REQUIRE(xs[1].is_list);
    CHECK(to_string(xs[1]) == "((x 3) (y (- 4)))");
    CHECK(xs[2].list[0].atom == "a b");
    CHECK_THROWS_AS(parse_sexprs("(a (b)"), SolverError);
    CHECK_THROWS_AS(parse_sexprs("a)"), SolverError);
  }

  TEST_CASE("get-value output round trip") {
    std::map<std::string, std::int64_t> ints{{"d_PayClaim", 28}, {"d_TransferClaim", -1}, {"x", 0}};
    Verdict v = parse_solver_output("sat\n" + format_get_value(ints));
    CHECK(v.status == Verdict::Status::Sat);
    CHECK(v.model.ints == ints);
  }

  TEST_CASE("output parsing tolerates errors and maps persons") {
    Verdict v = parse_solver_output(
        "sat\n(error \"line 9: model is not available\")\n"
        "((Eva Person!val!0) (Chris Person!val!1))\n(((owner Bakery) Person!val!1))\n");
    CHECK(v.status == Verdict::Status::Sat);
    CHECK(v.model.owner.at("Bakery") == "Chris");

    v = parse_solver_output("unsat\n(error \"no model\")\n(c__a c__b)\n");
    CHECK(v.status == Verdict::Status::Unsat);
    CHECK(v.core == std::vector<std::string>{"c__a", "c__b"});

    CHECK_THROWS_AS(parse_solver_output("hello"), SolverError);
  }

  TEST_CASE("emission is deterministic and complete") {
    auto m = testing::fixture_model("bakery");
    auto instances = build_analyses(m);
    auto again = build_analyses(m);
    REQUIRE(instances.size() == again.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
      std::string text = emit_smtlib(instances[i], SoftEmission::Native);
      CHECK(text == emit_smtlib(again[i], SoftEmission::Native));
      CHECK(text.rfind("(set-option :produce-unsat-cores true)", 0) == 0);
      for (const auto& a : instances[i].assertions) {
        if (!a.soft) CHECK(text.find(":named " + a.name + ")") != std::string::npos);
      }
    }
    const auto& spa = by_id(instances, "execution__spa");
    std::string omit = emit_smtlib(spa);
    CHECK(omit.find("assert-soft") == std::string::npos);
    std::string native = emit_smtlib(spa, SoftEmission::Native);
    std::size_t count = 0;
    for (auto p = native.find("(assert-soft"); p != std::string::npos; p = native.find("(assert-soft", p + 1)) ++count;
    CHECK(count == 6);
  }

  TEST_CASE("empty and trivial instances") {
    auto cfg = testing::solver_config();
    CHECK(solve(tiny({}), cfg).status == Verdict::Status::Sat);
    Verdict v = solve(tiny({{"no", bool_const(false), {"B1"}}}), cfg);
    CHECK(v.status == Verdict::Status::Unsat);
    CHECK(v.core == std::vector<std::string>{"consistency__T__no"});

    v = solve(tiny({{"a", int_var("x") >= 5, {"B1"}}, {"b", int_var("x") < 3, {"B2"}},
                    {"c", int_var("y") >= 0, {"B3"}}}),
              cfg);
    CHECK(v.status == Verdict::Status::Unsat);
    std::sort(v.core.begin(), v.core.end());
    CHECK(v.core == std::vector<std::string>{"consistency__T__a", "consistency__T__b"});
  }

  TEST_CASE("timeout and spawn failure") {
    FakeSolver sleeper("sleep 5");
    auto cfg = testing::solver_config();
    cfg.executable = sleeper.path;
    cfg.timeout_seconds = 0.3;
    auto start = std::chrono::steady_clock::now();
    Verdict v = solve(tiny({}), cfg);
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(v.status == Verdict::Status::Unknown);
    CHECK(v.reason == "timeout");
    CHECK(elapsed < 3.0);

    cfg.executable = "/nonexistent/solver";
    CHECK_THROWS_AS(solve(tiny({}), cfg), SolverError);

    FakeSolver liar("echo banana");
    cfg.executable = liar.path;
    CHECK_THROWS_AS(solve(tiny({}), cfg), SolverError);

    FakeSolver unknown("echo unknown");
    cfg.executable = unknown.path;
    v = solve(tiny({}), cfg);
    CHECK(v.status == Verdict::Status::Unknown);
  }

  TEST_CASE("bakery execution optimum") {
    auto m = testing::fixture_model("bakery");
    auto instances = build_analyses(m);
    const auto& spa = by_id(instances, "execution__spa");
    auto cfg = testing::solver_config();
    Verdict native = solve_maxsmt(spa, cfg);
    cfg.maxsmt_mode = MaxSmtMode::IterativeFallback;
    Verdict iterative = solve_maxsmt(spa, cfg);
    REQUIRE(native.status == Verdict::Status::Sat);
    REQUIRE(iterative.status == Verdict::Status::Sat);
    CHECK(native.model.violated_soft.size() == 2);
    CHECK(iterative.model.violated_soft.size() == 2);
    CHECK(failed_hard(spa, native.model.valuation()).empty());
    CHECK(failed_hard(spa, iterative.model.valuation()).empty());
  }

  TEST_CASE("unsat cores re-solve unsat") {
    auto cfg = testing::solver_config();
    for (const char* name : {"bakery", "seeded"}) {
      auto m = testing::fixture_model(name);
      for (const auto& inst : build_analyses(m)) {
        Verdict v = solve(inst, cfg);
        if (v.status != Verdict::Status::Unsat) continue;
        CAPTURE(inst.id());
        CHECK_FALSE(v.core.empty());
        CHECK(solve(restrict_to(inst, v.core), cfg).status == Verdict::Status::Unsat);
      }
    }
  }
}
