#include "contractcheck/encoder.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace contractcheck {

const char* to_string(AnalysisKind kind) {
  switch (kind) {
    case AnalysisKind::ClaimConsistency: return "ClaimConsistency";
    case AnalysisKind::ContractExecutability: return "ContractExecutability";
    case AnalysisKind::ClaimUnsatisfiable: return "ClaimUnsatisfiable";
    case AnalysisKind::ClaimDefense: return "ClaimDefense";
    case AnalysisKind::LimitationCheck: return "LimitationCheck";
  }
  return "?";
}

const char* short_name(AnalysisKind kind) {
  switch (kind) {
    case AnalysisKind::ClaimConsistency: return "I";
    case AnalysisKind::ContractExecutability: return "II";
    case AnalysisKind::ClaimUnsatisfiable: return "unsat";
    case AnalysisKind::ClaimDefense: return "defense";
    case AnalysisKind::LimitationCheck: return "limitation";
  }
  return "?";
}

std::optional<AnalysisKind> analysis_kind_from_string(const std::string& s) {
  for (auto k : {AnalysisKind::ClaimConsistency, AnalysisKind::ContractExecutability,
                 AnalysisKind::ClaimUnsatisfiable, AnalysisKind::ClaimDefense,
                 AnalysisKind::LimitationCheck}) {
    if (s == to_string(k) || s == short_name(k)) return k;
  }
  return std::nullopt;
}

Expectation expectation_of(AnalysisKind kind) {
  switch (kind) {
    case AnalysisKind::ClaimDefense:
    case AnalysisKind::LimitationCheck:
      return Expectation::UnsatIsGood;
    default:
      return Expectation::SatIsGood;
  }
}

namespace {

const char* id_tag(AnalysisKind kind) {
  switch (kind) {
    case AnalysisKind::ClaimConsistency: return "consistency";
    case AnalysisKind::ContractExecutability: return "execution";
    case AnalysisKind::ClaimUnsatisfiable: return "unsat";
    case AnalysisKind::ClaimDefense: return "defense";
    case AnalysisKind::LimitationCheck: return "limitation";
  }
  return "?";
}

}  // namespace

std::string AnalysisInstance::id() const {
  std::string out = id_tag(kind);
  out += "__";
  if (targets.empty()) return out + "spa";
  for (std::size_t i = 0; i < targets.size(); ++i) out += (i ? "_" : "") + targets[i];
  return out;
}

const NamedAssertion* AnalysisInstance::find(const std::string& name) const {
  for (const auto& a : assertions) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

bool AnalysisInstance::has_soft() const {
  return std::any_of(assertions.begin(), assertions.end(),
                     [](const NamedAssertion& a) { return a.soft; });
}

Term performed(const Claim& c) {
  Term d = int_var(date_var(c.id));
  return c.kind == ClaimKind::Warranty ? eq(d, -1) : d >= 0;
}

Term breached(const Claim& c) {
  Term d = int_var(date_var(c.id));
  return c.kind == ClaimKind::Warranty ? d >= 0 : eq(d, -1);
}

Term expr_to_term(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Int:
      return int_const(e.value);
    case Expr::Kind::Var:
      return int_var(e.var.str());
    case Expr::Kind::Arith: {
      Term a = expr_to_term(e.operands.at(0));
      Term b = expr_to_term(e.operands.at(1));
      if (e.op == "+") return a + b;
      if (e.op == "-") return a - b;
      if (e.op == "*") return a * b;
      if (e.op == "/") {
        if (!collect_symbols(b).int_vars.empty()) {
          throw EncodeError("division by a non-constant is not linear");
        }
        return div_const(a, evaluate_int(b, {}));
      }
      throw EncodeError("unknown operator " + e.op);
    }
    case Expr::Kind::Cmp: {
      Term a = expr_to_term(e.operands.at(0));
      Term b = expr_to_term(e.operands.at(1));
      if (e.op == "=") return eq(a, b);
      if (e.op == "<") return a < b;
      if (e.op == "<=") return a <= b;
      if (e.op == ">") return a > b;
      if (e.op == ">=") return a >= b;
      throw EncodeError("unknown comparison " + e.op);
    }
  }
  throw EncodeError("bad expression");
}

Term performance_term(const Claim& c) {
  switch (c.performance.kind) {
    case PerformanceSpec::Kind::None:
      return bool_const(true);
    case PerformanceSpec::Kind::Transfer:
      if (c.performance.from.empty()) {
        throw EncodeError("claim " + c.id + " transfers " + c.performance.object +
                          " but has no Debtor");
      }
      return owner_eq(c.performance.object, c.performance.from);
    case PerformanceSpec::Kind::Formula:
      return expr_to_term(c.performance.formula);
  }
  return bool_const(true);
}

std::vector<NamedAssertion> encode_owner(const ContractModel& model) {
  std::map<std::string, int> per_object;
  for (const auto& pr : model.property_rights) ++per_object[pr.object];
  std::vector<NamedAssertion> out;
  for (const auto& pr : model.property_rights) {
    std::string name = "owner_" + pr.object;
    if (per_object[pr.object] > 1) name += "_" + pr.person;
    out.push_back({name, owner_eq(pr.object, pr.person), {pr.block}});
  }
  return out;
}

Term encode_claim(const ContractModel& model, const Claim& c) {
  Term d = int_var(date_var(c.id));
  Window w = resolve_window(model, c);
  Term l = performance_term(c);
  if (c.kind == ClaimKind::Warranty) return (eq(d, -1) && l) || w.contains(d);
  return eq(d, -1) || (w.contains(d) && l);
}

Term compensation_clamp(const Term& raw, std::optional<std::int64_t> min,
                        std::optional<std::int64_t> max) {
  Term upper = max ? ite(raw > int_const(*max), int_const(*max), raw) : raw;
  return ite(raw < int_const(min.value_or(0)), int_const(0), upper);
}

Term encode_secondary(const ContractModel& model, const Claim& c, bool with_limitation) {
  if (!c.trigger) throw EncodeError("claim " + c.id + " has no Trigger");
  Term d = int_var(date_var(c.id));
  Term anchor = int_var(dprime_var(*c.trigger));
  Term window = resolve_window(model, c).contains(d, with_limitation);
  Term active = anchor >= 0 && window;
  switch (c.kind) {
    case ClaimKind::Compensation: {
      Term l = int_var(amount_var(c.id));
      Term clamp = c.compensation
                       ? eq(l, compensation_clamp(expr_to_term(*c.compensation), c.min, c.max))
                       : bool_const(true);
      Term perform = active && l > int_const(0);
      if (c.min) perform = perform && l >= int_const(*c.min);
      return clamp && ((eq(d, -1) && eq(l, 0)) || perform);
    }
    case ClaimKind::Restitution:
      return eq(d, -1) || active;
    default:
      return eq(d, -1) || (active && performance_term(c));
  }
}

namespace {

std::vector<std::string> to_vec(const std::set<std::string>& s) { return {s.begin(), s.end()}; }

Term claim_formula(const ContractModel& model, const Claim& c, bool with_limitation = true) {
  return c.trigger ? encode_secondary(model, c, with_limitation) : encode_claim(model, c);
}

NamedAssertion claim_assertion(const ContractModel& model, const Claim& c,
                               bool with_limitation = true) {
  return {"claim_" + c.id, claim_formula(model, c, with_limitation), to_vec(c.origin_blocks)};
}

/// d'_t = -1 if t performed, else its breach date (warranty) or due date.
NamedAssertion dprime_assertion(const ContractModel& model, const Claim& t) {
  Term breach_day = t.kind == ClaimKind::Warranty ? int_var(date_var(t.id)) : due_term(model, t);
  return {"dprime_" + t.id, eq(int_var(dprime_var(t.id)), ite(performed(t), int_const(-1), breach_day)),
          to_vec(t.origin_blocks)};
}

/// Exactly one member of each trigger set is performed (warranty roots: met).
std::vector<NamedAssertion> trigger_set_assertions(const ContractModel& model) {
  std::vector<NamedAssertion> out;
  for (const auto& set : trigger_sets(model)) {
    std::vector<Term> active;
    std::set<std::string> blocks;
    for (const auto& id : set) {
      const Claim& c = model.claim(id);
      active.push_back(c.trigger ? int_var(date_var(id)) >= 0 : performed(c));
      blocks.insert(c.block);
    }
    std::vector<Term> parts{disj(active)};
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) parts.push_back(!(active[i] && active[j]));
    }
    out.push_back({"tset_" + *set.begin(), conj(parts), to_vec(blocks)});
  }
  return out;
}

std::vector<NamedAssertion> integer_facts(const ContractModel& model) {
  std::vector<NamedAssertion> out;
  for (const auto& [name, p] : model.integers) {
    if (p.value) out.push_back({"fact_" + name, eq(int_var(name), *p.value), {p.value_origin}});
  }
  return out;
}

std::vector<std::string> ancestors(const ContractModel& model, const Claim& c) {
  std::vector<std::string> out;
  std::set<std::string> seen{c.id};
  const Claim* cur = &c;
  while (cur->trigger && seen.insert(*cur->trigger).second) {
    out.push_back(*cur->trigger);
    cur = &model.claim(*cur->trigger);
  }
  return out;
}

class InstanceBuilder {
 public:
  InstanceBuilder(const ContractModel& model, AnalysisKind kind, std::vector<std::string> targets)
      : model_(model) {
    inst_.kind = kind;
    inst_.targets = std::move(targets);
  }

  void add(NamedAssertion a) {
    if (!names_.insert(a.name).second) throw EncodeError("duplicate assertion name " + a.name);
    local_.push_back(std::move(a));
  }
  void add_all(std::vector<NamedAssertion> as) {
    for (auto& a : as) add(std::move(a));
  }

  /// φ_a, d'_a and the breach hypothesis for every trigger ancestor of c.
  void add_trigger_chain(const Claim& c) {
    for (const auto& aid : ancestors(model_, c)) {
      const Claim& a = model_.claim(aid);
      if (names_.count("claim_" + aid)) continue;
      add(claim_assertion(model_, a));
      add(dprime_assertion(model_, a));
      add({"breach_" + aid, breached(a), {kHarnessOrigin}});
    }
  }

  /// Prefixes names, and keeps integer facts only when their variable is used.
  AnalysisInstance finish() {
    SymbolSet used;
    for (const auto& a : local_) {
      if (a.name.rfind("fact_", 0) != 0) collect_symbols(a.term, used);
    }
    std::string prefix = inst_.id() + "__";
    for (auto& a : local_) {
      if (a.name.rfind("fact_", 0) == 0 && !used.int_vars.count(a.name.substr(5))) continue;
      a.name = prefix + a.name;
      inst_.assertions.push_back(std::move(a));
    }
    return std::move(inst_);
  }

 private:
  const ContractModel& model_;
  AnalysisInstance inst_;
  std::set<std::string> names_;
  std::vector<NamedAssertion> local_;
};

std::vector<std::string> merged(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> u = a;
  u.insert(b.begin(), b.end());
  return to_vec(u);
}

}  // namespace

std::vector<NamedAssertion> encode_spa(const ContractModel& model) {
  std::vector<NamedAssertion> out = encode_owner(model);
  for (auto& f : integer_facts(model)) out.push_back(std::move(f));
  std::set<std::string> triggers;
  for (const auto& [id, c] : model.claims) {
    if (c.trigger) triggers.insert(*c.trigger);
  }
  for (const auto& [id, c] : model.claims) {
    out.push_back(claim_assertion(model, c));
    if (triggers.count(id)) out.push_back(dprime_assertion(model, c));
  }
  for (auto& t : trigger_set_assertions(model)) out.push_back(std::move(t));
  return out;
}

std::vector<NamedAssertion> encode_soft(const ContractModel& model) {
  std::vector<NamedAssertion> out;
  for (const auto& [id, c] : model.claims) {
    if (!c.trigger) {
      out.push_back({"soft_" + id, performed(c), {c.block}, true, 1});
    } else if (c.kind != ClaimKind::Compensation) {
      out.push_back({"soft_" + id, eq(int_var(date_var(id)), -1), {c.block}, true, 1});
    }
  }
  return out;
}

std::vector<AnalysisInstance> build_analyses(const ContractModel& model) {
  std::vector<AnalysisInstance> out;

  for (const auto& [id, c] : model.claims) {
    InstanceBuilder b(model, AnalysisKind::ClaimConsistency, {id});
    b.add_all(encode_owner(model));
    b.add_all(integer_facts(model));
    b.add_trigger_chain(c);
    b.add(claim_assertion(model, c));
    b.add({"goal", c.trigger ? int_var(date_var(id)) >= 0 : performed(c), {c.block}});
    out.push_back(b.finish());
  }

  {
    InstanceBuilder b(model, AnalysisKind::ContractExecutability, {});
    b.add_all(encode_spa(model));
    b.add_all(encode_soft(model));
    out.push_back(b.finish());
  }

  for (const auto& id : independent_claims(model)) {
    const Claim& c = model.claim(id);
    InstanceBuilder b(model, AnalysisKind::ClaimUnsatisfiable, {id});
    b.add_all(encode_spa(model));
    b.add({"goal", breached(c), {c.block}});
    out.push_back(b.finish());
  }

  // X.Precede = Y: X must be due before Y can fall due.
  for (const auto& [xid, x] : model.claims) {
    if (!x.precede) continue;
    const Claim& y = model.claim(*x.precede);
    InstanceBuilder b(model, AnalysisKind::ClaimDefense, {xid, y.id});
    b.add_all(encode_owner(model));
    b.add_all(integer_facts(model));
    b.add_trigger_chain(x);
    b.add_trigger_chain(y);
    b.add(claim_assertion(model, x));
    if (y.id != xid) b.add(claim_assertion(model, y));
    b.add({"goal", due_term(model, y) < due_term(model, x), merged(x.origin_blocks, y.origin_blocks)});
    out.push_back(b.finish());
  }

  for (const auto& [id, c] : model.claims) {
    if (!c.trigger || !c.limitation || !c.due || c.due->kind != DateExpr::Kind::Relative) continue;
    InstanceBuilder b(model, AnalysisKind::LimitationCheck, {id});
    for (auto& a : encode_spa(model)) {
      if (a.name == "claim_" + id) a = claim_assertion(model, c, false);
      b.add(std::move(a));
    }
    Term limit = c.limitation->kind == DateExpr::Kind::Absolute
                     ? int_const(c.limitation->day)
                     : int_var(dprime_var(*c.trigger)) + c.limitation->day;
    b.add({"goal", limit < int_var(date_var(id)), to_vec(c.origin_blocks)});
    // Witness preference: leave other claims unperformed where possible.
    for (const auto& [oid, o] : model.claims) {
      if (oid != id) b.add({"pref_" + oid, eq(int_var(date_var(oid)), -1), {o.block}, true, 1});
    }
    out.push_back(b.finish());
  }
  return out;
}

std::vector<std::string> failed_hard(const AnalysisInstance& instance, const Valuation& v) {
  std::vector<std::string> out;
  for (const auto& a : instance.assertions) {
    if (!a.soft && !evaluate_bool(a.term, v)) out.push_back(a.name);
  }
  return out;
}

std::vector<std::string> violated_soft(const AnalysisInstance& instance, const Valuation& v) {
  std::vector<std::string> out;
  for (const auto& a : instance.assertions) {
    if (a.soft && !evaluate_bool(a.term, v)) out.push_back(a.name);
  }
  return out;
}

}  // namespace contractcheck
