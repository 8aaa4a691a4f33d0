#include "contractcheck/term.hpp"

#include <sstream>

namespace contractcheck {

namespace {

using K = Term::Kind;

Term flatten(K kind, std::vector<Term> terms) {
  const K neutral = kind == K::And ? K::True : K::False;
  const K absorbing = kind == K::And ? K::False : K::True;
  std::vector<Term> out;
  for (auto& t : terms) {
    if (!t.is_bool()) throw TermError("boolean connective over integer term");
    if (t.kind() == neutral) continue;
    if (t.kind() == absorbing) return t;
    if (t.kind() == kind) {
      out.insert(out.end(), t.args().begin(), t.args().end());
    } else {
      out.push_back(std::move(t));
    }
  }
  if (out.empty()) return bool_const(kind == K::And);
  if (out.size() == 1) return out.front();
  return Term::make(kind, std::move(out));
}

void require_int(const Term& t, const char* what) {
  if (!t.is_int()) throw TermError(std::string(what) + " expects integer operands");
}

}  // namespace

Term::Term() : node_(std::make_shared<const Node>(Node{K::True, 0, {}, {}, {}})) {}

Term Term::make(Kind kind, std::vector<Term> args, std::int64_t value, std::string name,
                std::string person) {
  return Term(std::make_shared<const Node>(
      Node{kind, value, std::move(name), std::move(person), std::move(args)}));
}

Term::Sort Term::sort() const {
  switch (kind()) {
    case K::IntConst:
    case K::IntVar:
    case K::Add:
    case K::Sub:
    case K::Mul:
    case K::DivConst:
      return Sort::Int;
    case K::Ite:
      return args()[1].sort();
    default:
      return Sort::Bool;
  }
}

bool Term::operator==(const Term& other) const {
  if (node_ == other.node_) return true;
  if (kind() != other.kind() || value() != other.value() || name() != other.name() ||
      person() != other.person() || args().size() != other.args().size()) {
    return false;
  }
  for (std::size_t i = 0; i < args().size(); ++i) {
    if (args()[i] != other.args()[i]) return false;
  }
  return true;
}

Term int_const(std::int64_t v) { return Term::make(K::IntConst, {}, v); }

Term int_var(std::string name) { return Term::make(K::IntVar, {}, 0, std::move(name)); }

Term bool_const(bool v) { return Term::make(v ? K::True : K::False, {}); }

Term owner_eq(std::string object, std::string person) {
  return Term::make(K::OwnerEq, {}, 0, std::move(object), std::move(person));
}

Term ite(Term cond, Term then_term, Term else_term) {
  if (!cond.is_bool()) throw TermError("ite condition must be boolean");
  if (then_term.sort() != else_term.sort()) throw TermError("ite branches differ in sort");
  return Term::make(K::Ite, {std::move(cond), std::move(then_term), std::move(else_term)});
}

Term div_const(Term dividend, std::int64_t divisor) {
  require_int(dividend, "div");
  if (divisor == 0) throw TermError("division by zero literal");
  return Term::make(K::DivConst, {std::move(dividend)}, divisor);
}

Term conj(std::vector<Term> terms) { return flatten(K::And, std::move(terms)); }
Term disj(std::vector<Term> terms) { return flatten(K::Or, std::move(terms)); }

Term implies(Term lhs, Term rhs) {
  if (!lhs.is_bool() || !rhs.is_bool()) throw TermError("=> expects boolean operands");
  return Term::make(K::Implies, {std::move(lhs), std::move(rhs)});
}

Term operator+(Term a, Term b) {
  require_int(a, "+");
  require_int(b, "+");
  return Term::make(K::Add, {std::move(a), std::move(b)});
}

Term operator-(Term a, Term b) {
  require_int(a, "-");
  require_int(b, "-");
  return Term::make(K::Sub, {std::move(a), std::move(b)});
}

Term operator*(Term a, Term b) {
  require_int(a, "*");
  require_int(b, "*");
  // Stay linear: at least one side must be ground.
  SymbolSet sa = collect_symbols(a), sb = collect_symbols(b);
  if (!sa.int_vars.empty() && !sb.int_vars.empty()) {
    throw TermError("non-linear multiplication of two variable terms");
  }
  return Term::make(K::Mul, {std::move(a), std::move(b)});
}

Term operator!(Term a) {
  if (!a.is_bool()) throw TermError("not expects a boolean operand");
  if (a.kind() == K::True) return bool_const(false);
  if (a.kind() == K::False) return bool_const(true);
  return Term::make(K::Not, {std::move(a)});
}

Term operator&&(Term a, Term b) { return conj({std::move(a), std::move(b)}); }
Term operator||(Term a, Term b) { return disj({std::move(a), std::move(b)}); }

Term operator<=(Term a, Term b) {
  require_int(a, "<=");
  require_int(b, "<=");
  return Term::make(K::Le, {std::move(a), std::move(b)});
}

Term operator<(Term a, Term b) {
  require_int(a, "<");
  require_int(b, "<");
  return Term::make(K::Lt, {std::move(a), std::move(b)});
}

Term operator>=(Term a, Term b) { return std::move(b) <= std::move(a); }
Term operator>(Term a, Term b) { return std::move(b) < std::move(a); }

Term eq(Term a, Term b) {
  if (a.sort() != b.sort()) throw TermError("= over different sorts");
  return Term::make(K::Eq, {std::move(a), std::move(b)});
}

void SymbolSet::merge(const SymbolSet& other) {
  int_vars.insert(other.int_vars.begin(), other.int_vars.end());
  objects.insert(other.objects.begin(), other.objects.end());
  persons.insert(other.persons.begin(), other.persons.end());
}

void collect_symbols(const Term& t, SymbolSet& out) {
  switch (t.kind()) {
    case K::IntVar:
      out.int_vars.insert(t.name());
      return;
    case K::OwnerEq:
      out.objects.insert(t.name());
      out.persons.insert(t.person());
      return;
    default:
      for (const auto& a : t.args()) collect_symbols(a, out);
  }
}

SymbolSet collect_symbols(const Term& t) {
  SymbolSet s;
  collect_symbols(t, s);
  return s;
}

std::int64_t euclid_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  std::int64_t r = a % b;
  if (r < 0) q += b > 0 ? -1 : 1;
  return q;
}

Value evaluate(const Term& t, const Valuation& v) {
  const auto& a = t.args();
  switch (t.kind()) {
    case K::IntConst:
      return t.value();
    case K::IntVar: {
      auto it = v.ints.find(t.name());
      if (it == v.ints.end()) throw TermError("unbound variable " + t.name());
      return it->second;
    }
    case K::Add:
      return evaluate_int(a[0], v) + evaluate_int(a[1], v);
    case K::Sub:
      return evaluate_int(a[0], v) - evaluate_int(a[1], v);
    case K::Mul:
      return evaluate_int(a[0], v) * evaluate_int(a[1], v);
    case K::DivConst:
      return euclid_div(evaluate_int(a[0], v), t.value());
    case K::Ite:
      return evaluate_bool(a[0], v) ? evaluate(a[1], v) : evaluate(a[2], v);
    case K::True:
      return true;
    case K::False:
      return false;
    case K::Le:
      return evaluate_int(a[0], v) <= evaluate_int(a[1], v);
    case K::Lt:
      return evaluate_int(a[0], v) < evaluate_int(a[1], v);
    case K::Eq:
      return evaluate(a[0], v) == evaluate(a[1], v);
    case K::And:
      for (const auto& x : a) {
        if (!evaluate_bool(x, v)) return false;
      }
      return true;
    case K::Or:
      for (const auto& x : a) {
        if (evaluate_bool(x, v)) return true;
      }
      return false;
    case K::Not:
      return !evaluate_bool(a[0], v);
    case K::Implies:
      return !evaluate_bool(a[0], v) || evaluate_bool(a[1], v);
    case K::OwnerEq: {
      auto it = v.owner.find(t.name());
      if (it == v.owner.end()) throw TermError("unbound owner(" + t.name() + ")");
      return it->second == t.person();
    }
  }
  throw TermError("unknown term kind");
}

bool evaluate_bool(const Term& t, const Valuation& v) {
  Value r = evaluate(t, v);
  if (auto* b = std::get_if<bool>(&r)) return *b;
  throw TermError("expected boolean value");
}

std::int64_t evaluate_int(const Term& t, const Valuation& v) {
  Value r = evaluate(t, v);
  if (auto* i = std::get_if<std::int64_t>(&r)) return *i;
  throw TermError("expected integer value");
}

namespace {

void smt_int(std::ostream& os, std::int64_t v) {
  if (v < 0) {
    os << "(- " << -v << ')';
  } else {
    os << v;
  }
}

void write_smt(std::ostream& os, const Term& t) {
  auto nary = [&](const char* op) {
    os << '(' << op;
    for (const auto& a : t.args()) {
      os << ' ';
      write_smt(os, a);
    }
    os << ')';
  };
  switch (t.kind()) {
    case K::IntConst:
      smt_int(os, t.value());
      return;
    case K::IntVar:
      os << t.name();
      return;
    case K::Add:
      return nary("+");
    case K::Sub:
      return nary("-");
    case K::Mul:
      return nary("*");
    case K::DivConst:
      os << "(div ";
      write_smt(os, t.args()[0]);
      os << ' ';
      smt_int(os, t.value());
      os << ')';
      return;
    case K::Ite:
      return nary("ite");
    case K::True:
      os << "true";
      return;
    case K::False:
      os << "false";
      return;
    case K::Le:
      return nary("<=");
    case K::Lt:
      return nary("<");
    case K::Eq:
      return nary("=");
    case K::And:
      return nary("and");
    case K::Or:
      return nary("or");
    case K::Not:
      return nary("not");
    case K::Implies:
      return nary("=>");
    case K::OwnerEq:
      os << "(= (owner " << t.name() << ") " << t.person() << ')';
      return;
  }
}

void write_infix(std::ostream& os, const Term& t) {
  auto bin = [&](const char* op) {
    os << '(';
    write_infix(os, t.args()[0]);
    os << ' ' << op << ' ';
    write_infix(os, t.args()[1]);
    os << ')';
  };
  auto nary = [&](const char* op) {
    os << '(';
    for (std::size_t i = 0; i < t.args().size(); ++i) {
      if (i) os << ' ' << op << ' ';
      write_infix(os, t.args()[i]);
    }
    os << ')';
  };
  switch (t.kind()) {
    case K::IntConst:
      os << t.value();
      return;
    case K::IntVar:
      os << t.name();
      return;
    case K::Add:
      return bin("+");
    case K::Sub:
      return bin("-");
    case K::Mul:
      return bin("*");
    case K::DivConst:
      os << '(';
      write_infix(os, t.args()[0]);
      os << " / " << t.value() << ')';
      return;
    case K::Ite:
      os << "(if ";
      write_infix(os, t.args()[0]);
      os << " then ";
      write_infix(os, t.args()[1]);
      os << " else ";
      write_infix(os, t.args()[2]);
      os << ')';
      return;
    case K::True:
      os << "true";
      return;
    case K::False:
      os << "false";
      return;
    case K::Le:
      return bin("<=");
    case K::Lt:
      return bin("<");
    case K::Eq:
      return bin("=");
    case K::And:
      return nary("and");
    case K::Or:
      return nary("or");
    case K::Not:
      os << "not ";
      write_infix(os, t.args()[0]);
      return;
    case K::Implies:
      return bin("=>");
    case K::OwnerEq:
      os << "owner(" << t.name() << ") = " << t.person();
      return;
  }
}

}  // namespace

std::string to_smtlib(const Term& t) {
  std::ostringstream os;
  write_smt(os, t);
  return os.str();
}

std::string to_infix(const Term& t) {
  std::ostringstream os;
  write_infix(os, t);
  return os.str();
}

}  // namespace contractcheck
