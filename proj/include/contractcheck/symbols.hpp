#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "contractcheck/blocks.hpp"

namespace contractcheck {

/// An object created by a non-reference declaration: `var` in block `block`.
struct ObjectId {
  std::string block;
  std::string var;

  auto operator<=>(const ObjectId&) const = default;
  std::string str() const { return block + "_" + var; }
};

/// Integer/boolean expression with references bound to scalar objects.
struct Expr {
  enum class Kind { Int, Var, Arith, Cmp };
  Kind kind = Kind::Int;
  std::int64_t value = 0;
  ObjectId var;
  std::string op;
  std::vector<Expr> operands;

  bool operator==(const Expr&) const = default;
  bool is_bool() const { return kind == Kind::Cmp; }
};

struct RelativeDate {
  std::int64_t offset = 0;
  bool operator==(const RelativeDate&) const = default;
};

/// `$object.transfer($recipient)`.
struct TransferCall {
  ObjectId object;
  ObjectId recipient;
  bool operator==(const TransferCall&) const = default;
};

struct BlockName {
  std::string id;
  bool operator==(const BlockName&) const = default;
};

using SlotValue =
    std::variant<std::int64_t, std::string, ObjectId, RelativeDate, Expr, TransferCall, BlockName>;

struct Slot {
  SlotValue value;
  /// Block whose assignment produced the value.
  std::string origin;

  bool operator==(const Slot&) const = default;
};

struct ObjectInfo {
  ObjectId id;
  std::string type;
  /// Single-valued attributes; the empty name holds a scalar's own value.
  std::map<std::string, Slot> slots;
  /// Multi-valued attributes such as SPA.Claim, in resolution order.
  std::map<std::string, std::vector<Slot>> lists;

  bool operator==(const ObjectInfo&) const = default;
  const Slot* slot(const std::string& attribute) const;
};

/// A `$`-placeholder in a block's Text together with what it denotes.
struct TextBinding {
  std::string block;
  std::string placeholder;
  ObjectId object;
  std::optional<std::string> attribute;

  bool operator==(const TextBinding&) const = default;
};

struct SymbolTable {
  std::map<ObjectId, ObjectInfo> objects;
  /// (block, local name) -> object, for plain and reference declarations.
  std::map<std::pair<std::string, std::string>, ObjectId> scope;
  /// Sorted by (block, placeholder).
  std::vector<TextBinding> text_bindings;

  bool operator==(const SymbolTable&) const = default;

  const ObjectInfo& at(const ObjectId& id) const;
  std::vector<const ObjectInfo*> of_type(const std::string& base_type) const;
};

class ResolveError : public std::runtime_error {
 public:
  ResolveError(std::string block_id, std::string what)
      : std::runtime_error(block_id + ": " + what), block_id_(std::move(block_id)) {}
  const std::string& block_id() const { return block_id_; }

 private:
  std::string block_id_;
};

/// Binds every reference in `blocks` and evaluates assignments into
/// attribute slots. Order-independent: permuting the blocks yields an equal
/// table.
SymbolTable resolve_references(const std::vector<Block>& blocks);

std::string to_string(const SlotValue& v);

/// Block text with `$`-placeholders replaced by their bound values.
std::string render_text(const Block& block, const SymbolTable& symbols);

}  // namespace contractcheck
