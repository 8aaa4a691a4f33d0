#include "contractcheck/symbols.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>

#include "contractcheck/ontology.hpp"

namespace contractcheck {

const Slot* ObjectInfo::slot(const std::string& attribute) const {
  auto it = slots.find(attribute);
  return it == slots.end() ? nullptr : &it->second;
}

const ObjectInfo& SymbolTable::at(const ObjectId& id) const {
  auto it = objects.find(id);
  if (it == objects.end()) throw std::out_of_range("unknown object " + id.str());
  return it->second;
}

std::vector<const ObjectInfo*> SymbolTable::of_type(const std::string& base_type) const {
  std::vector<const ObjectInfo*> out;
  for (const auto& [id, info] : objects) {
    if (ontology::is_a(info.type, base_type)) out.push_back(&info);
  }
  return out;
}

namespace {

std::string expr_string(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Int:
      return std::to_string(e.value);
    case Expr::Kind::Var:
      return e.var.str();
    case Expr::Kind::Arith:
    case Expr::Kind::Cmp:
      return "(" + expr_string(e.operands[0]) + e.op + expr_string(e.operands[1]) + ")";
  }
  return {};
}

bool has_var(const Expr& e) {
  if (e.kind == Expr::Kind::Var) return true;
  return std::any_of(e.operands.begin(), e.operands.end(), has_var);
}

/// Marker for "cannot be resolved yet": another assignment must run first.
struct Pending {
  std::string reason;
};

using Lookup = std::variant<ObjectId, BlockName, Pending>;

class Resolver {
 public:
  explicit Resolver(const std::vector<Block>& blocks) : blocks_(blocks) {
    for (const auto& b : blocks_) by_id_[b.id] = &b;
  }

  SymbolTable run() {
    declare();
    struct Item {
      const Block* block;
      const Assignment* assignment;
    };
    std::vector<Item> pending;
    for (const auto& b : blocks_) {
      for (const auto& a : b.assignments) pending.push_back({&b, &a});
    }
    // Blocks are visited in id order so the outcome does not depend on the
    // order of the document.
    std::sort(pending.begin(), pending.end(), [](const Item& x, const Item& y) {
      return x.block->id < y.block->id;
    });

    std::string last_reason;
    while (!pending.empty()) {
      bool progress = false;
      for (bool relaxed : {false, true}) {
        relaxed_ = relaxed;
        std::vector<Item> still;
        for (const auto& item : pending) {
          std::optional<Pending> p = apply(*item.block, *item.assignment);
          if (p) {
            still.push_back(item);
            last_reason = item.block->id + ": " + p->reason + " in '" +
                          to_string(*item.assignment) + "'";
          }
        }
        progress = still.size() != pending.size();
        pending = std::move(still);
        if (progress) break;
      }
      relaxed_ = false;
      if (!progress) {
        const Block& b = *pending.front().block;
        throw ResolveError(b.id, "unresolvable assignment (cyclic alias or missing value): " +
                                     last_reason);
      }
    }

    bind_text();
    for (auto& [id, info] : table_.objects) {
      for (auto& [attr, list] : info.lists) {
        std::sort(list.begin(), list.end(), [](const Slot& x, const Slot& y) {
          return std::make_tuple(x.origin, to_string(x.value)) < std::make_tuple(y.origin, to_string(y.value));
        });
      }
    }
    return std::move(table_);
  }

 private:
  void declare() {
    for (const auto& b : blocks_) {
      for (const auto& d : b.objects) {
        bool scalar = ontology::is_scalar(d.type_name);
        if (d.is_reference && !scalar) {
          ref_types_[{b.id, d.name}] = d.type_name;
          continue;
        }
        ObjectId id{b.id, d.name};
        table_.objects[id] = ObjectInfo{id, d.type_name, {}, {}};
        table_.scope[{b.id, d.name}] = id;
      }
    }
  }

  const ObjectDecl* local_decl(const std::string& block, const std::string& name) const {
    auto it = by_id_.find(block);
    if (it == by_id_.end()) return nullptr;
    for (const auto& d : it->second->objects) {
      if (d.name == name) return &d;
    }
    return nullptr;
  }

  Lookup lookup_in(const std::string& block, const std::string& name) const {
    auto it = table_.scope.find({block, name});
    if (it != table_.scope.end()) return it->second;
    return Pending{"reference $" + name + " of " + block + " is not bound yet"};
  }

  Lookup lookup(const Block& ctx, const std::string& token) const {
    if (local_decl(ctx.id, token)) return lookup_in(ctx.id, token);
    if (by_id_.count(token)) return BlockName{token};
    for (auto pos = token.rfind('_'); pos != std::string::npos && pos > 0;
         pos = token.rfind('_', pos - 1)) {
      std::string prefix = token.substr(0, pos);
      if (!by_id_.count(prefix)) continue;
      std::string var = token.substr(pos + 1);
      if (!local_decl(prefix, var)) {
        throw ResolveError(ctx.id, "unresolved reference $" + token + ": block " + prefix +
                                       " declares no object '" + var + "'");
      }
      return lookup_in(prefix, var);
    }
    throw ResolveError(ctx.id, "unresolved reference $" + token);
  }

  ObjectId require_object(const Block& ctx, const Lookup& l, const std::string& token) const {
    if (const auto* id = std::get_if<ObjectId>(&l)) return *id;
    throw ResolveError(ctx.id, "$" + token + " names a block, not an object");
  }

  const std::string& type_of(const ObjectId& id) const { return table_.objects.at(id).type; }

  /// Value of `ref` as stored in a slot: objects, scalar values or attribute values.
  std::variant<SlotValue, Pending> ref_value(const Block& ctx, const Ref& ref) const {
    Lookup l = lookup(ctx, ref.token);
    if (auto* p = std::get_if<Pending>(&l)) return *p;
    if (auto* b = std::get_if<BlockName>(&l)) {
      if (!ref.attributes.empty()) {
        throw ResolveError(ctx.id, "block " + b->id + " has no attributes");
      }
      return SlotValue{*b};
    }
    ObjectId cur = std::get<ObjectId>(l);
    if (ref.attributes.empty()) {
      const ObjectInfo& info = table_.objects.at(cur);
      if (!ontology::is_scalar(info.type)) return SlotValue{cur};
      if (const Slot* s = info.slot("")) return s->value;
      if (relaxed_ && (info.type == "Integer" || info.type == "Date")) {
        Expr v;
        v.kind = Expr::Kind::Var;
        v.var = cur;
        return SlotValue{v};
      }
      return Pending{"$" + ref.token + " has no value yet"};
    }
    for (std::size_t i = 0; i < ref.attributes.size(); ++i) {
      const std::string& attr = ref.attributes[i];
      const ObjectInfo& info = table_.objects.at(cur);
      if (!ontology::has_attribute(info.type, attr)) {
        throw ResolveError(ctx.id, "class " + info.type + " has no attribute " + attr);
      }
      const Slot* s = info.slot(attr);
      if (!s) return Pending{cur.str() + "." + attr + " has no value yet"};
      if (i + 1 == ref.attributes.size()) return s->value;
      if (const auto* next = std::get_if<ObjectId>(&s->value)) {
        cur = *next;
      } else {
        throw ResolveError(ctx.id, "attribute chain passes through non-object " + cur.str() +
                                       "." + attr);
      }
    }
    return Pending{"unreachable"};
  }

  std::variant<Expr, Pending> to_expr(const Block& ctx, const ValueExpr& v) const {
    Expr e;
    switch (v.kind) {
      case ValueExpr::Kind::Int:
        e.kind = Expr::Kind::Int;
        e.value = v.int_value;
        return e;
      case ValueExpr::Kind::Arith:
      case ValueExpr::Kind::Formula: {
        e.kind = v.kind == ValueExpr::Kind::Arith ? Expr::Kind::Arith : Expr::Kind::Cmp;
        e.op = v.text;
        for (const auto& o : v.operands) {
          auto sub = to_expr(ctx, o);
          if (auto* p = std::get_if<Pending>(&sub)) return *p;
          e.operands.push_back(std::get<Expr>(std::move(sub)));
        }
        return e;
      }
      case ValueExpr::Kind::Ref: {
        if (v.ref.attributes.empty()) {
          Lookup l = lookup(ctx, v.ref.token);
          if (auto* p = std::get_if<Pending>(&l)) return *p;
          ObjectId id = require_object(ctx, l, v.ref.token);
          const ObjectInfo& info = table_.objects.at(id);
          if (info.type == "Integer") {
            e.kind = Expr::Kind::Var;
            e.var = id;
            return e;
          }
          if (info.type != "Date") {
            throw ResolveError(ctx.id, "$" + v.ref.token + " is a " + info.type +
                                           ", not a number");
          }
        }
        auto val = ref_value(ctx, v.ref);
        if (auto* p = std::get_if<Pending>(&val)) return *p;
        const SlotValue& sv = std::get<SlotValue>(val);
        if (const auto* i = std::get_if<std::int64_t>(&sv)) {
          e.kind = Expr::Kind::Int;
          e.value = *i;
          return e;
        }
        if (const auto* x = std::get_if<Expr>(&sv); x && !x->is_bool()) return *x;
        throw ResolveError(ctx.id, to_string(v) + " does not denote a number");
      }
      default:
        throw ResolveError(ctx.id, "'" + to_string(v) + "' cannot appear in a formula");
    }
  }

  static std::int64_t fold(const Expr& e) {
    if (e.kind == Expr::Kind::Int) return e.value;
    ValueExpr v = ValueExpr::binary(ValueExpr::Kind::Arith, e.op,
                                    ValueExpr::integer(fold(e.operands[0])),
                                    ValueExpr::integer(fold(e.operands[1])));
    return eval_const(v);
  }

  std::variant<SlotValue, Pending> rhs_value(const Block& ctx, const ValueExpr& v,
                                             const std::string& target_type) const {
    switch (v.kind) {
      case ValueExpr::Kind::Int:
        return SlotValue{v.int_value};
      case ValueExpr::Kind::String:
        if (target_type == "Block") {
          if (!by_id_.count(v.text)) throw ResolveError(ctx.id, "unknown block " + v.text);
          return SlotValue{BlockName{v.text}};
        }
        return SlotValue{v.text};
      case ValueExpr::Kind::Relative: {
        std::int64_t off;
        try {
          off = eval_const(v.operands[0]);
        } catch (const EvalError& e) {
          throw ResolveError(ctx.id, e.what());
        }
        if (off < 0) throw ResolveError(ctx.id, "relative date offset must be non-negative");
        return SlotValue{RelativeDate{off}};
      }
      case ValueExpr::Kind::Arith:
      case ValueExpr::Kind::Formula: {
        auto e = to_expr(ctx, v);
        if (auto* p = std::get_if<Pending>(&e)) return *p;
        Expr ex = std::get<Expr>(std::move(e));
        if (!ex.is_bool() && !has_var(ex)) {
          try {
            return SlotValue{fold(ex)};
          } catch (const EvalError& err) {
            throw ResolveError(ctx.id, err.what());
          }
        }
        return SlotValue{std::move(ex)};
      }
      case ValueExpr::Kind::Ref:
        return ref_value(ctx, v.ref);
      case ValueExpr::Kind::OpCall: {
        if (v.text != "transfer") {
          throw ResolveError(ctx.id, "unknown operation '" + v.text + "'");
        }
        if (v.operands.size() != 1 || v.operands[0].kind != ValueExpr::Kind::Ref) {
          throw ResolveError(ctx.id, "transfer expects one recipient reference");
        }
        auto recv = ref_value(ctx, v.ref);
        if (auto* p = std::get_if<Pending>(&recv)) return *p;
        auto arg = ref_value(ctx, v.operands[0].ref);
        if (auto* p = std::get_if<Pending>(&arg)) return *p;
        const auto* object = std::get_if<ObjectId>(&std::get<SlotValue>(recv));
        const auto* person = std::get_if<ObjectId>(&std::get<SlotValue>(arg));
        if (!object || !ontology::is_a(type_of(*object), "Object")) {
          throw ResolveError(ctx.id, "transfer receiver must be a Shares or PurchasePrice object");
        }
        if (!person || type_of(*person) != "Person") {
          throw ResolveError(ctx.id, "transfer recipient must be a Person");
        }
        return SlotValue{TransferCall{*object, *person}};
      }
    }
    return Pending{"unreachable"};
  }

  void store(const Block& ctx, const ObjectId& target, const std::string& attr, SlotValue value) {
    ObjectInfo& info = table_.objects.at(target);
    if (!ontology::has_attribute(info.type, attr)) {
      throw ResolveError(ctx.id, "class " + info.type + " has no attribute '" + attr + "'");
    }
    Slot slot{std::move(value), ctx.id};
    if (ontology::is_multi_valued(info.type, attr)) {
      auto& list = info.lists[attr];
      bool dup = std::any_of(list.begin(), list.end(),
                             [&](const Slot& s) { return s.value == slot.value; });
      if (!dup) list.push_back(std::move(slot));
      return;
    }
    auto it = info.slots.find(attr);
    if (it == info.slots.end()) {
      info.slots.emplace(attr, std::move(slot));
      return;
    }
    if (it->second.value != slot.value) {
      std::string where = attr.empty() ? target.str() : target.str() + "." + attr;
      throw ResolveError(ctx.id, "conflicting assignment to " + where + ": '" +
                                     to_string(it->second.value) + "' (from " + it->second.origin +
                                     ") vs '" + to_string(slot.value) + "'");
    }
  }

  /// Returns nullopt when applied, or why it has to wait.
  std::optional<Pending> apply(const Block& ctx, const Assignment& a) {
    const AttributePath& lhs = a.lhs;
    if (lhs.selector) return apply_selector(ctx, a);

    if (!lhs.attribute) {
      const ObjectDecl* decl = local_decl(ctx.id, lhs.base);
      if (!decl) {
        throw ResolveError(ctx.id, "whole-object assignment to undeclared '" + lhs.base + "'");
      }
      auto ref_it = ref_types_.find({ctx.id, lhs.base});
      if (ref_it != ref_types_.end()) return bind_alias(ctx, a, ref_it->second);
      ObjectId id{ctx.id, lhs.base};
      if (!ontology::is_scalar(type_of(id))) {
        throw ResolveError(ctx.id, "cannot assign a value to object '" + lhs.base + "' of class " +
                                       type_of(id));
      }
      auto val = rhs_value(ctx, a.rhs, type_of(id));
      if (auto* p = std::get_if<Pending>(&val)) return *p;
      store(ctx, id, "", std::get<SlotValue>(std::move(val)));
      return std::nullopt;
    }

    Lookup l = lookup(ctx, lhs.base);
    if (auto* p = std::get_if<Pending>(&l)) return *p;
    ObjectId target = require_object(ctx, l, lhs.base);
    auto val = rhs_value(ctx, a.rhs, type_of(target));
    if (auto* p = std::get_if<Pending>(&val)) return *p;
    store(ctx, target, *lhs.attribute, std::get<SlotValue>(std::move(val)));
    return std::nullopt;
  }

  std::optional<Pending> bind_alias(const Block& ctx, const Assignment& a,
                                    const std::string& decl_type) {
    if (a.rhs.kind != ValueExpr::Kind::Ref) {
      throw ResolveError(ctx.id, "reference '" + a.lhs.base + "' must be bound to a $-reference");
    }
    auto val = ref_value(ctx, a.rhs.ref);
    if (auto* p = std::get_if<Pending>(&val)) return *p;
    const auto* target = std::get_if<ObjectId>(&std::get<SlotValue>(val));
    if (!target) {
      throw ResolveError(ctx.id, "reference '" + a.lhs.base + "' must denote an object");
    }
    if (!ontology::is_a(type_of(*target), decl_type)) {
      throw ResolveError(ctx.id, "reference '" + a.lhs.base + "' expects " + decl_type + " but " +
                                     target->str() + " is a " + type_of(*target));
    }
    auto key = std::make_pair(ctx.id, a.lhs.base);
    auto it = table_.scope.find(key);
    if (it != table_.scope.end() && it->second != *target) {
      throw ResolveError(ctx.id, "reference '" + a.lhs.base + "' bound twice");
    }
    table_.scope[key] = *target;
    return std::nullopt;
  }

  std::optional<Pending> apply_selector(const Block& ctx, const Assignment& a) {
    const PathSelector& sel = *a.lhs.selector;
    if (!a.lhs.attribute) throw ResolveError(ctx.id, "path selector needs an attribute");
    if (!ontology::is_class(sel.type_name)) {
      throw ResolveError(ctx.id, "unknown class " + sel.type_name + " in path selector");
    }
    std::string block;
    if (sel.block_dollar) {
      Ref r{sel.block_token, {}, true};
      auto v = ref_value(ctx, r);
      if (auto* p = std::get_if<Pending>(&v)) return *p;
      const auto* bn = std::get_if<BlockName>(&std::get<SlotValue>(v));
      if (!bn) throw ResolveError(ctx.id, "$" + sel.block_token + " does not name a block");
      block = bn->id;
    } else {
      if (!by_id_.count(sel.block_token)) {
        throw ResolveError(ctx.id, "unknown block " + sel.block_token);
      }
      block = sel.block_token;
    }
    std::vector<ObjectId> targets;
    for (const auto& d : by_id_.at(block)->objects) {
      if (d.is_reference) continue;
      if (ontology::is_a(d.type_name, sel.type_name)) targets.push_back({block, d.name});
    }
    if (targets.empty()) {
      throw ResolveError(ctx.id, "path selector matches no " + sel.type_name + " in " + block);
    }
    std::vector<SlotValue> values;
    for (const auto& t : targets) {
      auto val = rhs_value(ctx, a.rhs, type_of(t));
      if (auto* p = std::get_if<Pending>(&val)) return *p;
      values.push_back(std::get<SlotValue>(std::move(val)));
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
      store(ctx, targets[i], *a.lhs.attribute, std::move(values[i]));
    }
    return std::nullopt;
  }

  void bind_text() {
    static const std::regex kPlaceholder(R"(\$([A-Za-z][A-Za-z0-9_]*)((?:\.[A-Za-z][A-Za-z0-9_]*)*))");
    for (const auto& b : blocks_) {
      for (std::size_t i = 0; i < b.text.size(); ++i) {
        if (b.text[i] != '$') continue;
        std::smatch m;
        std::string rest = b.text.substr(i);
        if (!std::regex_search(rest, m, kPlaceholder, std::regex_constants::match_continuous)) {
          throw ResolveError(b.id, "stray '$' in Text at position " + std::to_string(i));
        }
        std::string token = m[1].str();
        std::vector<std::string> attrs;
        std::string chain = m[2].str();
        for (std::size_t p = 0; p < chain.size();) {
          std::size_t q = chain.find('.', p + 1);
          attrs.push_back(chain.substr(p + 1, q == std::string::npos ? q : q - p - 1));
          p = q == std::string::npos ? chain.size() : q;
        }
        Lookup l = lookup(b, token);
        if (std::get_if<Pending>(&l)) {
          throw ResolveError(b.id, "placeholder $" + token + " refers to an unbound reference");
        }
        TextBinding tb{b.id, m[0].str(), {}, std::nullopt};
        if (const auto* bn = std::get_if<BlockName>(&l)) {
          if (!attrs.empty()) throw ResolveError(b.id, "block " + bn->id + " has no attributes");
          tb.object = {bn->id, ""};
        } else {
          ObjectId cur = std::get<ObjectId>(l);
          for (std::size_t k = 0; k < attrs.size(); ++k) {
            const ObjectInfo& info = table_.objects.at(cur);
            if (!ontology::has_attribute(info.type, attrs[k])) {
              throw ResolveError(b.id, "placeholder " + tb.placeholder + ": class " + info.type +
                                           " has no attribute " + attrs[k]);
            }
            if (k + 1 == attrs.size()) break;
            const Slot* s = info.slot(attrs[k]);
            const auto* next = s ? std::get_if<ObjectId>(&s->value) : nullptr;
            if (!next) {
              throw ResolveError(b.id, "placeholder " + tb.placeholder + " cannot be followed");
            }
            cur = *next;
          }
          tb.object = cur;
          if (!attrs.empty()) tb.attribute = attrs.back();
        }
        table_.text_bindings.push_back(std::move(tb));
        i += m[0].length() - 1;
      }
    }
    std::sort(table_.text_bindings.begin(), table_.text_bindings.end(),
              [](const TextBinding& x, const TextBinding& y) {
                return std::tie(x.block, x.placeholder, x.object) <
                       std::tie(y.block, y.placeholder, y.object);
              });
    table_.text_bindings.erase(
        std::unique(table_.text_bindings.begin(), table_.text_bindings.end()),
        table_.text_bindings.end());
  }

  const std::vector<Block>& blocks_;
  std::map<std::string, const Block*> by_id_;
  std::map<std::pair<std::string, std::string>, std::string> ref_types_;
  SymbolTable table_;
  bool relaxed_ = false;
};

}  // namespace

SymbolTable resolve_references(const std::vector<Block>& blocks) { return Resolver(blocks).run(); }

std::string to_string(const SlotValue& v) {
  struct Visitor {
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(const ObjectId& id) const { return "$" + id.str(); }
    std::string operator()(const RelativeDate& r) const { return "+" + std::to_string(r.offset); }
    std::string operator()(const Expr& e) const { return expr_string(e); }
    std::string operator()(const TransferCall& t) const {
      return "$" + t.object.str() + ".transfer($" + t.recipient.str() + ")";
    }
    std::string operator()(const BlockName& b) const { return b.id; }
  };
  return std::visit(Visitor{}, v);
}

std::string render_text(const Block& block, const SymbolTable& symbols) {
  auto display = [&](const ObjectId& id) -> std::string {
    auto it = symbols.objects.find(id);
    if (it == symbols.objects.end()) return id.block;  // block placeholder
    if (const Slot* s = it->second.slot("")) return to_string(s->value);
    if (const Slot* s = it->second.slot("Name")) return to_string(s->value);
    return id.str();
  };
  std::string out;
  std::size_t pos = 0;
  std::vector<const TextBinding*> bindings;
  for (const auto& tb : symbols.text_bindings) {
    if (tb.block == block.id) bindings.push_back(&tb);
  }
  // Longest placeholder first so `$x.Name` wins over `$x`.
  std::sort(bindings.begin(), bindings.end(), [](const TextBinding* a, const TextBinding* b) {
    return a->placeholder.size() > b->placeholder.size();
  });
  while (pos < block.text.size()) {
    std::size_t next = block.text.find('$', pos);
    out += block.text.substr(pos, next == std::string::npos ? next : next - pos);
    if (next == std::string::npos) break;
    const TextBinding* hit = nullptr;
    for (const auto* tb : bindings) {
      if (block.text.compare(next, tb->placeholder.size(), tb->placeholder) == 0) {
        std::size_t end = next + tb->placeholder.size();
        bool boundary = end >= block.text.size() ||
                        !(std::isalnum(static_cast<unsigned char>(block.text[end])) ||
                          block.text[end] == '_');
        if (boundary) {
          hit = tb;
          break;
        }
      }
    }
    if (!hit) {
      out += '$';
      pos = next + 1;
      continue;
    }
    std::string value;
    if (hit->attribute) {
      auto it = symbols.objects.find(hit->object);
      const Slot* s = it == symbols.objects.end() ? nullptr : it->second.slot(*hit->attribute);
      if (s) {
        if (const auto* id = std::get_if<ObjectId>(&s->value)) {
          value = display(*id);
        } else {
          value = to_string(s->value);
        }
      } else {
        value = hit->placeholder;
      }
    } else {
      value = display(hit->object);
    }
    out += value;
    pos = next + hit->placeholder.size();
  }
  return out;
}

}  // namespace contractcheck
