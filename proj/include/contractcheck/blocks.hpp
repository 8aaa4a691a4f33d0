#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace contractcheck {

/// A `$`-reference or bare identifier with an optional attribute chain:
/// `$seller`, `$Block1_spa.Closing`, `Block6_count`.
struct Ref {
  std::string token;
  std::vector<std::string> attributes;
  bool dollar = true;

  bool operator==(const Ref&) const = default;
};

/// Right-hand side of an assignment, or an operand inside one.
struct ValueExpr {
  enum class Kind {
    Int,       // 28
    String,    // Eva, Bakery AG
    Arith,     // op in text: + - * /
    Relative,  // +14; operands[0] is the offset
    Ref,       // $x, $x.Attr
    OpCall,    // $shares.transfer($purchaser); text is the method name
    Formula,   // (Block6_count=Block6_amount); op in text: = < <= > >=
  };

  Kind kind = Kind::Int;
  std::int64_t int_value = 0;
  std::string text;
  contractcheck::Ref ref;
  std::vector<ValueExpr> operands;

  bool operator==(const ValueExpr&) const = default;

  static ValueExpr integer(std::int64_t v);
  static ValueExpr string(std::string s);
  static ValueExpr reference(contractcheck::Ref r);
  static ValueExpr binary(Kind kind, std::string op, ValueExpr lhs, ValueExpr rhs);
};

/// `${//$block//Type}`: every object of class Type declared in a block.
struct PathSelector {
  std::string block_token;
  bool block_dollar = true;
  std::string type_name;

  bool operator==(const PathSelector&) const = default;
};

/// Assignment target: `obj`, `obj.Attr`, `Block1_obj.Attr` or `${...}.Attr`.
struct AttributePath {
  std::optional<PathSelector> selector;
  std::string base;  // unused when selector is set
  bool base_dollar = false;
  std::optional<std::string> attribute;

  bool operator==(const AttributePath&) const = default;
};

struct Assignment {
  AttributePath lhs;
  ValueExpr rhs;

  bool operator==(const Assignment&) const = default;
};

struct ObjectDecl {
  std::string name;
  std::string type_name;
  bool is_reference = false;

  bool operator==(const ObjectDecl&) const = default;
};

struct Block {
  std::string id;
  std::string text;
  std::vector<ObjectDecl> objects;
  std::vector<Assignment> assignments;

  bool operator==(const Block&) const = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string block_id, std::string field, std::size_t position, std::string what);

  const std::string& block_id() const { return block_id_; }
  const std::string& field() const { return field_; }
  std::size_t position() const { return position_; }

 private:
  std::string block_id_;
  std::string field_;
  std::size_t position_;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool is_identifier(std::string_view s);

/// Parses a JSON block document (array of {ID, Text, Object, Assignment}).
std::vector<Block> parse_contract(std::string_view document);

ObjectDecl parse_object_decl(std::string_view entry);
Assignment parse_assignment(std::string_view entry);
ValueExpr parse_value(std::string_view text);

/// Folds literal arithmetic. Throws EvalError for references, inexact
/// division and overflow.
std::int64_t eval_const(const ValueExpr& expr);

std::string to_string(const ValueExpr& expr);
std::string to_string(const AttributePath& path);
std::string to_string(const Assignment& a);
std::string to_string(const ObjectDecl& d);

/// Canonical JSON rendering of a block list; parses back to an equal list.
std::string serialize_contract(const std::vector<Block>& blocks);

}  // namespace contractcheck
