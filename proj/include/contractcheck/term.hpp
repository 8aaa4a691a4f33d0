#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace contractcheck {

/// Constraint terms over linear integer arithmetic, booleans and the
/// uninterpreted `owner : Object -> Person` function.
///
/// Terms are immutable and share structure; copying a Term copies a pointer.
class Term {
 public:
  enum class Kind {
    IntConst,
    IntVar,
    Add,
    Sub,
    Mul,
    DivConst,
    Ite,
    True,
    False,
    Le,
    Lt,
    Eq,
    And,
    Or,
    Not,
    Implies,
    OwnerEq,
  };
  enum class Sort { Int, Bool };

  Term();  // `true`

  Kind kind() const { return node_->kind; }
  Sort sort() const;
  bool is_bool() const { return sort() == Sort::Bool; }
  bool is_int() const { return sort() == Sort::Int; }

  std::int64_t value() const { return node_->value; }
  /// Variable name for IntVar; object name for OwnerEq.
  const std::string& name() const { return node_->name; }
  /// Person name for OwnerEq.
  const std::string& person() const { return node_->person; }
  const std::vector<Term>& args() const { return node_->args; }

  bool operator==(const Term& other) const;
  bool operator!=(const Term& other) const { return !(*this == other); }

  static Term make(Kind kind, std::vector<Term> args, std::int64_t value = 0,
                   std::string name = {}, std::string person = {});

 private:
  struct Node {
    Kind kind;
    std::int64_t value = 0;
    std::string name;
    std::string person;
    std::vector<Term> args;
  };
  explicit Term(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

class TermError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Builders. Boolean connectives flatten nested nodes of the same kind and
// drop neutral elements, so `conj({})` is `true`.
Term int_const(std::int64_t v);
Term int_var(std::string name);
Term bool_const(bool v);
Term owner_eq(std::string object, std::string person);
Term ite(Term cond, Term then_term, Term else_term);
/// Integer division by a nonzero literal (Euclidean, as in SMT-LIB `div`).
Term div_const(Term dividend, std::int64_t divisor);
Term conj(std::vector<Term> terms);
Term disj(std::vector<Term> terms);
Term implies(Term lhs, Term rhs);

Term operator+(Term a, Term b);
Term operator-(Term a, Term b);
Term operator*(Term a, Term b);
Term operator!(Term a);
Term operator&&(Term a, Term b);
Term operator||(Term a, Term b);
Term operator<=(Term a, Term b);
Term operator<(Term a, Term b);
Term operator>=(Term a, Term b);
Term operator>(Term a, Term b);
/// Equality term. Named to avoid clashing with structural `Term::operator==`.
Term eq(Term a, Term b);

inline Term operator+(Term a, std::int64_t b) { return std::move(a) + int_const(b); }
inline Term operator-(Term a, std::int64_t b) { return std::move(a) - int_const(b); }
inline Term operator*(Term a, std::int64_t b) { return std::move(a) * int_const(b); }
inline Term operator<=(std::int64_t a, Term b) { return int_const(a) <= std::move(b); }
inline Term operator<=(Term a, std::int64_t b) { return std::move(a) <= int_const(b); }
inline Term operator<(Term a, std::int64_t b) { return std::move(a) < int_const(b); }
inline Term operator<(std::int64_t a, Term b) { return int_const(a) < std::move(b); }
inline Term operator>=(Term a, std::int64_t b) { return std::move(a) >= int_const(b); }
inline Term eq(Term a, std::int64_t b) { return eq(std::move(a), int_const(b)); }

/// Symbols referenced by a term, grouped by sort.
struct SymbolSet {
  std::set<std::string> int_vars;
  std::set<std::string> objects;
  std::set<std::string> persons;

  void merge(const SymbolSet& other);
};
void collect_symbols(const Term& t, SymbolSet& out);
SymbolSet collect_symbols(const Term& t);

/// Ground values used to replay a solver model against terms.
struct Valuation {
  std::map<std::string, std::int64_t> ints;
  /// object -> person
  std::map<std::string, std::string> owner;
};

using Value = std::variant<std::int64_t, bool>;

/// Evaluates `t` under `v`. Throws TermError on unbound symbols.
Value evaluate(const Term& t, const Valuation& v);
bool evaluate_bool(const Term& t, const Valuation& v);
std::int64_t evaluate_int(const Term& t, const Valuation& v);

/// Euclidean quotient, matching SMT-LIB `div`.
std::int64_t euclid_div(std::int64_t a, std::int64_t b);

/// SMT-LIB 2 rendering of a term.
std::string to_smtlib(const Term& t);
/// Infix rendering for explanations.
std::string to_infix(const Term& t);

}  // namespace contractcheck
