#include "contractcheck/model.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "contractcheck/ontology.hpp"
#include "json.hpp"

namespace contractcheck {

const char* to_string(ClaimKind kind) {
  switch (kind) {
    case ClaimKind::Primary: return "Primary";
    case ClaimKind::Warranty: return "Warranty";
    case ClaimKind::Performance: return "Performance";
    case ClaimKind::Restitution: return "Restitution";
    case ClaimKind::Compensation: return "Compensation";
  }
  return "?";
}

const Claim& ContractModel::claim(const std::string& id) const {
  auto it = claims.find(id);
  if (it == claims.end()) throw std::out_of_range("unknown claim " + id);
  return it->second;
}

std::string date_var(const std::string& claim_id) { return "d_" + claim_id; }
std::string dprime_var(const std::string& claim_id) { return "dprime_" + claim_id; }
std::string amount_var(const std::string& claim_id) { return "l_" + claim_id; }

namespace {

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') out += c;
  }
  if (!out.empty() && !std::isalpha(static_cast<unsigned char>(out.front()))) out = "x" + out;
  return out;
}

std::optional<ClaimKind> claim_kind(const std::string& type) {
  if (type == "PrimaryClaim") return ClaimKind::Primary;
  if (type == "WarrantyClaim") return ClaimKind::Warranty;
  if (type == "PerformanceClaim") return ClaimKind::Performance;
  if (type == "RestitutionClaim") return ClaimKind::Restitution;
  if (type == "CompensationClaim") return ClaimKind::Compensation;
  return std::nullopt;
}

void check_formula_vars(const Expr& e, const SymbolTable& symbols, const std::string& block) {
  if (e.kind == Expr::Kind::Var && symbols.at(e.var).type != "Integer") {
    throw ModelError(block, e.var.str() + " is not an Integer parameter");
  }
  for (const auto& o : e.operands) check_formula_vars(o, symbols, block);
}

class Builder {
 public:
  Builder(const std::vector<Block>& blocks, const SymbolTable& symbols, std::string id)
      : blocks_(blocks), symbols_(symbols) {
    model_.contract_id = std::move(id);
  }

  ContractModel run() {
    name_entities();
    for (const auto& [id, p] : model_.persons) {
      if (model_.objects.count(id)) {
        throw ModelError(*p.blocks.begin(), "name " + id + " is used for a person and an object");
      }
    }
    build_spa();
    build_property_rights();
    build_integers();
    build_claims();
    return std::move(model_);
  }

 private:
  std::string display_id(const ObjectInfo& info) const {
    if (const Slot* s = info.slot("Name")) {
      if (const auto* str = std::get_if<std::string>(&s->value)) {
        std::string id = sanitize(*str);
        if (!id.empty()) return id;
      }
      if (const auto* i = std::get_if<std::int64_t>(&s->value)) {
        return sanitize(std::to_string(*i));
      }
    }
    return info.id.str();
  }

  void name_entities() {
    for (const auto& [oid, info] : symbols_.objects) {
      if (info.type == "Person") {
        std::string id = display_id(info);
        entity_[oid] = id;
        auto& p = model_.persons[id];
        p.id = id;
        p.blocks.insert(oid.block);
      } else if (ontology::is_a(info.type, "Object")) {
        std::string id = display_id(info);
        entity_[oid] = id;
        auto& o = model_.objects[id];
        o.id = id;
        o.type = info.type;
        o.blocks.insert(oid.block);
        if (const Slot* s = info.slot("Amount")) {
          const auto* v = std::get_if<std::int64_t>(&s->value);
          if (!v) throw ModelError(s->origin, "Amount of " + id + " must be an integer");
          o.amount = *v;
        }
      }
    }
  }

  std::string person_of(const Slot& s, const std::string& what) const {
    const auto* oid = std::get_if<ObjectId>(&s.value);
    if (!oid || symbols_.at(*oid).type != "Person") {
      throw ModelError(s.origin, "type mismatch: " + what + " must reference a Person, got '" +
                                     to_string(s.value) + "'");
    }
    return entity_.at(*oid);
  }

  std::string object_of(const Slot& s, const std::string& what, const std::string& base) const {
    const auto* oid = std::get_if<ObjectId>(&s.value);
    if (!oid || !ontology::is_a(symbols_.at(*oid).type, base)) {
      throw ModelError(s.origin, "type mismatch: " + what + " must reference a " + base +
                                     ", got '" + to_string(s.value) + "'");
    }
    return entity_.at(*oid);
  }

  std::int64_t int_of(const Slot& s, const std::string& what) const {
    const auto* v = std::get_if<std::int64_t>(&s.value);
    if (!v) {
      throw ModelError(s.origin, "type mismatch: " + what + " must be an integer, got '" +
                                     to_string(s.value) + "'");
    }
    return *v;
  }

  DateExpr date_of(const Slot& s, const std::string& what) const {
    if (const auto* r = std::get_if<RelativeDate>(&s.value)) return DateExpr::relative(r->offset);
    if (const auto* v = std::get_if<std::int64_t>(&s.value)) {
      if (*v < 0) throw ModelError(s.origin, what + " must not be negative");
      return DateExpr::absolute(*v);
    }
    throw ModelError(s.origin, "type mismatch: " + what + " must be a day number or +offset, got '" +
                                   to_string(s.value) + "'");
  }

  void build_spa() {
    auto spas = symbols_.of_type("SPA");
    if (spas.size() > 1) {
      throw ModelError(spas[1]->id.block, "a contract may declare only one SPA");
    }
    if (spas.empty()) return;
    const ObjectInfo& spa = *spas.front();
    model_.spa_blocks.insert(spa.id.block);
    for (const auto& [attr, slot] : spa.slots) model_.spa_blocks.insert(slot.origin);
    if (const Slot* s = spa.slot("Seller")) model_.seller = person_of(*s, "SPA.Seller");
    if (const Slot* s = spa.slot("Purchaser")) model_.purchaser = person_of(*s, "SPA.Purchaser");
    if (const Slot* s = spa.slot("Object")) model_.shares = object_of(*s, "SPA.Object", "Shares");
    if (const Slot* s = spa.slot("Price")) {
      model_.price = object_of(*s, "SPA.Price", "PurchasePrice");
    }
    if (const Slot* s = spa.slot("Signing")) {
      if (int_of(*s, "SPA.Signing") != 0) {
        throw ModelError(s->origin, "the signing day is day 0");
      }
    }
    if (const Slot* s = spa.slot("Closing")) {
      model_.closing_day = date_of(*s, "SPA.Closing").day;
      if (std::get_if<RelativeDate>(&s->value)) {
        model_.closing_day = model_.signing_day + *model_.closing_day;
      }
    }
    if (model_.seller && model_.purchaser && *model_.seller == *model_.purchaser) {
      throw ModelError(spa.id.block, "seller and purchaser must differ");
    }
  }

  void build_property_rights() {
    for (const ObjectInfo* pr : symbols_.of_type("PropertyRight")) {
      const Slot* owner = pr->slot("Owner");
      const Slot* property = pr->slot("Property");
      if (!owner || !property) {
        model_.issues.push_back({Severity::Error, "INCOMPLETE_PROPERTY_RIGHT",
                                 "property right " + pr->id.str() + " needs Owner and Property",
                                 {pr->id.block}});
        continue;
      }
      model_.property_rights.push_back({person_of(*owner, "PropertyRight.Owner"),
                                        object_of(*property, "PropertyRight.Property", "Object"),
                                        pr->id.block});
    }
    std::sort(model_.property_rights.begin(), model_.property_rights.end(),
              [](const PropertyRight& a, const PropertyRight& b) {
                return std::tie(a.object, a.person, a.block) < std::tie(b.object, b.person, b.block);
              });
  }

  void build_integers() {
    for (const ObjectInfo* info : symbols_.of_type("Integer")) {
      IntegerParameter p;
      p.name = info->id.str();
      p.block = info->id.block;
      if (const Slot* s = info->slot("")) {
        p.value = int_of(*s, p.name);
        p.value_origin = s->origin;
      }
      model_.integers[p.name] = p;
    }
  }

  void build_claims() {
    std::map<ObjectId, std::string> claim_ids;
    for (const ObjectInfo* info : symbols_.of_type("Claim")) {
      if (!claim_kind(info->type)) {
        throw ModelError(info->id.block, "claim '" + info->id.var + "' has abstract class " +
                                             info->type);
      }
      std::string id = display_id(*info);
      for (const auto& [other, existing] : claim_ids) {
        if (existing == id) {
          throw ModelError(info->id.block, "claim id " + id + " already declared in " + other.block);
        }
      }
      claim_ids[info->id] = id;
    }
    auto claim_ref = [&](const Slot& s, const std::string& what) {
      const auto* oid = std::get_if<ObjectId>(&s.value);
      if (!oid || !claim_ids.count(*oid)) {
        throw ModelError(s.origin, "type mismatch: " + what + " must reference a claim, got '" +
                                       to_string(s.value) + "'");
      }
      return claim_ids.at(*oid);
    };

    for (const auto& [oid, id] : claim_ids) {
      const ObjectInfo& info = symbols_.at(oid);
      Claim c;
      c.id = id;
      c.kind = *claim_kind(info.type);
      c.block = oid.block;
      c.origin_blocks.insert(oid.block);
      for (const auto& [attr, slot] : info.slots) c.origin_blocks.insert(slot.origin);

      if (const Slot* s = info.slot("Debtor")) c.debtor = person_of(*s, id + ".Debtor");
      if (const Slot* s = info.slot("Creditor")) c.creditor = person_of(*s, id + ".Creditor");
      if (const Slot* s = info.slot("Arise")) c.arise = date_of(*s, id + ".Arise");
      if (const Slot* s = info.slot("DueDate")) c.due = date_of(*s, id + ".DueDate");
      if (const Slot* s = info.slot("Limitation")) c.limitation = date_of(*s, id + ".Limitation");
      if (const Slot* s = info.slot("Trigger")) c.trigger = claim_ref(*s, id + ".Trigger");
      if (const Slot* s = info.slot("Precede")) c.precede = claim_ref(*s, id + ".Precede");
      if (const Slot* s = info.slot("Min")) c.min = int_of(*s, id + ".Min");
      if (const Slot* s = info.slot("Max")) c.max = int_of(*s, id + ".Max");
      if (const Slot* s = info.slot("Compensation")) {
        if (const auto* v = std::get_if<std::int64_t>(&s->value)) {
          c.compensation = Expr{Expr::Kind::Int, *v, {}, {}, {}};
        } else if (const auto* e = std::get_if<Expr>(&s->value); e && !e->is_bool()) {
          check_formula_vars(*e, symbols_, s->origin);
          c.compensation = *e;
        } else {
          throw ModelError(s->origin, "type mismatch: " + id + ".Compensation must be arithmetic");
        }
      }
      if (const Slot* s = info.slot("Performance")) {
        if (const auto* t = std::get_if<TransferCall>(&s->value)) {
          c.performance.kind = PerformanceSpec::Kind::Transfer;
          c.performance.object = entity_.at(t->object);
          c.performance.to = entity_.at(t->recipient);
          c.performance.from = c.debtor;
        } else if (const auto* e = std::get_if<Expr>(&s->value); e && e->is_bool()) {
          check_formula_vars(*e, symbols_, s->origin);
          c.performance.kind = PerformanceSpec::Kind::Formula;
          c.performance.formula = *e;
        } else {
          throw ModelError(s->origin, "type mismatch: " + id +
                                          ".Performance must be a transfer or a formula");
        }
      }

      if (c.trigger && (c.kind == ClaimKind::Primary || c.kind == ClaimKind::Warranty)) {
        throw ModelError(c.block, "claim " + id + " of kind " + to_string(c.kind) +
                                      " cannot have a Trigger");
      }
      if (c.kind != ClaimKind::Compensation && (c.min || c.max || c.compensation)) {
        throw ModelError(c.block, "Min/Max/Compensation only apply to compensation claims");
      }
      model_.claims[id] = std::move(c);
    }
    for (const auto& [id, c] : model_.claims) {
      if (c.trigger && *c.trigger == id) throw ModelError(c.block, "claim " + id + " triggers itself");
    }
  }

  const std::vector<Block>& blocks_;
  const SymbolTable& symbols_;
  std::map<ObjectId, std::string> entity_;
  ContractModel model_;
};

}  // namespace

ContractModel build_model(const std::vector<Block>& blocks, const SymbolTable& symbols,
                          std::string contract_id) {
  return Builder(blocks, symbols, std::move(contract_id)).run();
}

ContractModel load_model(std::string_view document, std::string contract_id) {
  auto blocks = parse_contract(document);
  auto symbols = resolve_references(blocks);
  return build_model(blocks, symbols, std::move(contract_id));
}

std::vector<std::set<std::string>> trigger_sets(const ContractModel& model) {
  std::map<std::string, std::string> parent;
  for (const auto& [id, c] : model.claims) parent[id] = id;
  auto find = [&](std::string x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& [id, c] : model.claims) {
    if (c.trigger) {
      std::string a = find(id), b = find(*c.trigger);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::map<std::string, std::set<std::string>> groups;
  for (const auto& [id, c] : model.claims) groups[find(id)].insert(id);
  std::vector<std::set<std::string>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return *a.begin() < *b.begin(); });
  return out;
}

std::int64_t count_executions(const ContractModel& model) {
  std::int64_t n = 1;
  for (const auto& s : trigger_sets(model)) n *= static_cast<std::int64_t>(s.size());
  return n;
}

std::vector<std::string> independent_claims(const ContractModel& model) {
  std::vector<std::string> out;
  for (const auto& [id, c] : model.claims) {
    if (!c.trigger) out.push_back(id);
  }
  return out;
}

std::vector<std::string> consequences_of(const ContractModel& model, const std::string& id) {
  std::vector<std::string> out;
  for (const auto& [sid, c] : model.claims) {
    if (c.trigger && *c.trigger == id) out.push_back(sid);
  }
  return out;
}

Term Window::contains(const Term& d, bool with_limitation) const {
  std::vector<Term> parts;
  for (const auto& b : lower) parts.push_back(b.strict ? b.term < d : b.term <= d);
  for (const auto& b : upper) {
    if (!with_limitation && b.source == Bound::Source::Limitation) continue;
    parts.push_back(b.strict ? d < b.term : d <= b.term);
  }
  return conj(std::move(parts));
}

namespace {

Term independent_due(const ContractModel& model, const Claim& c) {
  auto anchor_signing = [&](const DateExpr& d) {
    return int_const(d.kind == DateExpr::Kind::Absolute ? d.day : model.signing_day + d.day);
  };
  if (c.due) return anchor_signing(*c.due);
  if (c.arise) return anchor_signing(*c.arise);
  return int_const(model.signing_day);
}

}  // namespace

Term due_term(const ContractModel& model, const Claim& c) {
  if (!c.trigger) return independent_due(model, c);
  Term anchor = int_var(dprime_var(*c.trigger));
  if (!c.due) return anchor;
  if (c.due->kind == DateExpr::Kind::Relative) return anchor + c.due->day;
  return int_const(c.due->day);
}

Window resolve_window(const ContractModel& model, const Claim& c) {
  Window w;
  if (!c.trigger) {
    if (c.kind != ClaimKind::Primary && c.kind != ClaimKind::Warranty && !c.due && !c.arise) {
      if (c.limitation && c.limitation->kind == DateExpr::Kind::Relative) {
        throw ModelError(c.block, "relative date on claim " + c.id + " has no anchor");
      }
    }
    Term due = independent_due(model, c);
    w.lower.push_back({due, false, Bound::Source::Due});
    if (c.limitation) {
      Term lim = c.limitation->kind == DateExpr::Kind::Absolute ? int_const(c.limitation->day)
                                                                 : due + c.limitation->day;
      w.upper.push_back({lim, false, Bound::Source::Limitation});
    }
    return w;
  }
  Term anchor = int_var(dprime_var(*c.trigger));
  w.lower.push_back({anchor, true, Bound::Source::Due});
  if (c.due) {
    if (c.due->kind == DateExpr::Kind::Relative) {
      w.upper.push_back({anchor + c.due->day, false, Bound::Source::Due});
    } else {
      w.lower.push_back({int_const(c.due->day), false, Bound::Source::Due});
    }
  }
  if (c.limitation) {
    Term lim = c.limitation->kind == DateExpr::Kind::Absolute ? int_const(c.limitation->day)
                                                               : anchor + c.limitation->day;
    w.upper.push_back({lim, false, Bound::Source::Limitation});
  }
  return w;
}

std::string model_to_json(const ContractModel& model) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["contract"] = model.contract_id;
  auto opt = [](const std::optional<std::string>& s) -> ordered_json {
    return s ? ordered_json(*s) : ordered_json(nullptr);
  };
  auto date = [](const std::optional<DateExpr>& d) -> ordered_json {
    if (!d) return nullptr;
    return d->kind == DateExpr::Kind::Relative ? ordered_json("+" + std::to_string(d->day))
                                               : ordered_json(d->day);
  };
  j["seller"] = opt(model.seller);
  j["purchaser"] = opt(model.purchaser);
  j["shares"] = opt(model.shares);
  j["price"] = opt(model.price);
  j["signing"] = model.signing_day;
  j["closing"] = model.closing_day ? ordered_json(*model.closing_day) : ordered_json(nullptr);
  j["persons"] = ordered_json::array();
  for (const auto& [id, p] : model.persons) j["persons"].push_back(id);
  j["objects"] = ordered_json::array();
  for (const auto& [id, o] : model.objects) {
    ordered_json e{{"id", id}, {"class", o.type}};
    if (o.amount) e["Amount"] = *o.amount;
    j["objects"].push_back(e);
  }
  j["property_rights"] = ordered_json::array();
  for (const auto& pr : model.property_rights) {
    j["property_rights"].push_back({{"Owner", pr.person}, {"Property", pr.object}, {"block", pr.block}});
  }
  j["claims"] = ordered_json::array();
  for (const auto& [id, c] : model.claims) {
    ordered_json e{{"id", id}, {"class", to_string(c.kind)}, {"block", c.block}};
    e["Debtor"] = c.debtor;
    e["Creditor"] = c.creditor;
    e["DueDate"] = date(c.due);
    e["Limitation"] = date(c.limitation);
    e["Trigger"] = opt(c.trigger);
    e["Precede"] = opt(c.precede);
    switch (c.performance.kind) {
      case PerformanceSpec::Kind::None:
        e["Performance"] = nullptr;
        break;
      case PerformanceSpec::Kind::Transfer:
        e["Performance"] = c.performance.object + ".transfer(" + c.performance.to + ")";
        break;
      case PerformanceSpec::Kind::Formula:
        e["Performance"] = to_string(SlotValue{c.performance.formula});
        break;
    }
    if (c.min) e["Min"] = *c.min;
    if (c.max) e["Max"] = *c.max;
    if (c.compensation) e["Compensation"] = to_string(SlotValue{*c.compensation});
    j["claims"].push_back(e);
  }
  j["integers"] = ordered_json::array();
  for (const auto& [name, p] : model.integers) {
    j["integers"].push_back({{"name", name}, {"value", p.value ? ordered_json(*p.value) : ordered_json(nullptr)}});
  }
  return j.dump(2);
}

}  // namespace contractcheck
