#include "contractcheck/blocks.hpp"

#include <cctype>
#include <regex>
#include <set>
#include <sstream>

#include "contractcheck/ontology.hpp"
#include "json.hpp"

namespace contractcheck {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

/// Raised inside the expression parser; converted to ParseError by callers.
struct SyntaxFail {
  std::size_t position;
  std::string message;
};

enum class Tok { Int, Ident, Dollar, Dot, LParen, RParen, Comma, Plus, Minus, Star, Slash, Cmp, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      out.push_back({Tok::Int, std::string(s.substr(start, i - start)), start});
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Tok::Ident, std::string(s.substr(start, i - start)), start});
      continue;
    }
    Tok kind;
    std::string text(1, c);
    switch (c) {
      case '$': kind = Tok::Dollar; break;
      case '.': kind = Tok::Dot; break;
      case '(': kind = Tok::LParen; break;
      case ')': kind = Tok::RParen; break;
      case ',': kind = Tok::Comma; break;
      case '+': kind = Tok::Plus; break;
      case '-': kind = Tok::Minus; break;
      case '*': kind = Tok::Star; break;
      case '/': kind = Tok::Slash; break;
      case '=': kind = Tok::Cmp; break;
      case '<':
      case '>':
        kind = Tok::Cmp;
        if (i + 1 < s.size() && s[i + 1] == '=') {
          text += '=';
          ++i;
        }
        break;
      default:
        throw SyntaxFail{start, std::string("unexpected character '") + c + "'"};
    }
    ++i;
    out.push_back({kind, std::move(text), start});
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

class ExprParser {
 public:
  explicit ExprParser(std::string_view s) : toks_(tokenize(s)) {}

  ValueExpr parse_all() {
    ValueExpr e = cmp();
    if (peek().kind != Tok::End) fail("trailing input");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token next() { return toks_[pos_++]; }
  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxFail{peek().pos, msg}; }
  void expect(Tok k, const char* what) {
    if (peek().kind != k) fail(std::string("expected ") + what);
    ++pos_;
  }

  ValueExpr cmp() {
    ValueExpr lhs = arith();
    if (peek().kind == Tok::Cmp) {
      std::string op = next().text;
      ValueExpr rhs = arith();
      no_formula(lhs);
      no_formula(rhs);
      return ValueExpr::binary(ValueExpr::Kind::Formula, op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ValueExpr arith() {
    ValueExpr lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      std::string op = next().text;
      ValueExpr rhs = term();
      no_formula(lhs);
      no_formula(rhs);
      lhs = ValueExpr::binary(ValueExpr::Kind::Arith, op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ValueExpr term() {
    ValueExpr lhs = factor();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      std::string op = next().text;
      ValueExpr rhs = factor();
      no_formula(lhs);
      no_formula(rhs);
      lhs = ValueExpr::binary(ValueExpr::Kind::Arith, op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ValueExpr factor() {
    const Token& t = peek();
    if (t.kind == Tok::Int) {
      ++pos_;
      try {
        return ValueExpr::integer(std::stoll(t.text));
      } catch (const std::out_of_range&) {
        throw SyntaxFail{t.pos, "integer literal out of range"};
      }
    }
    if (t.kind == Tok::LParen) {
      ++pos_;
      ValueExpr e = cmp();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (t.kind == Tok::Dollar || t.kind == Tok::Ident) return refish();
    fail("expected operand");
  }

  ValueExpr refish() {
    Ref r;
    r.dollar = peek().kind == Tok::Dollar;
    if (r.dollar) ++pos_;
    if (peek().kind != Tok::Ident) fail("expected identifier after '$'");
    r.token = next().text;
    while (peek().kind == Tok::Dot) {
      ++pos_;
      if (peek().kind != Tok::Ident) fail("expected attribute name");
      r.attributes.push_back(next().text);
    }
    if (peek().kind != Tok::LParen) return ValueExpr::reference(std::move(r));
    if (r.attributes.empty()) fail("operation call needs a receiver");
    ValueExpr call;
    call.kind = ValueExpr::Kind::OpCall;
    call.text = r.attributes.back();
    r.attributes.pop_back();
    call.ref = std::move(r);
    ++pos_;
    if (peek().kind != Tok::RParen) {
      call.operands.push_back(cmp());
      while (peek().kind == Tok::Comma) {
        ++pos_;
        call.operands.push_back(cmp());
      }
    }
    expect(Tok::RParen, "')'");
    return call;
  }

  void no_formula(const ValueExpr& e) const {
    if (e.kind == ValueExpr::Kind::Formula) fail("comparison used as arithmetic operand");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

ValueExpr parse_value_impl(std::string_view raw) {
  std::string_view t = trim(raw);
  if (t.empty()) throw SyntaxFail{0, "empty value"};
  if (t.front() == '+') {
    ValueExpr offset = ExprParser(t.substr(1)).parse_all();
    if (offset.kind != ValueExpr::Kind::Int && offset.kind != ValueExpr::Kind::Arith) {
      throw SyntaxFail{1, "relative date offset must be arithmetic"};
    }
    ValueExpr rel;
    rel.kind = ValueExpr::Kind::Relative;
    rel.operands.push_back(std::move(offset));
    return rel;
  }
  try {
    ValueExpr e = ExprParser(t).parse_all();
    if (e.kind == ValueExpr::Kind::Ref && !e.ref.dollar && e.ref.attributes.empty()) {
      return ValueExpr::string(std::string(t));
    }
    return e;
  } catch (const SyntaxFail&) {
    if (t.find('$') != std::string_view::npos || t.front() == '(') throw;
    return ValueExpr::string(std::string(t));
  }
}

std::size_t split_assignment(std::string_view s) {
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '(' || c == '{') ++depth;
    if (c == ')' || c == '}') --depth;
    if (c == '=' && depth == 0) return i;
  }
  return std::string_view::npos;
}

AttributePath parse_lhs(std::string_view raw) {
  static const std::regex kSelector(
      R"(^\$\{//(\$?)([A-Za-z][A-Za-z0-9_]*)//([A-Za-z][A-Za-z0-9_]*)\}(?:\.([A-Za-z][A-Za-z0-9_]*))?$)");
  static const std::regex kPlain(R"(^(\$?)([A-Za-z][A-Za-z0-9_]*)(?:\.([A-Za-z][A-Za-z0-9_]*))?$)");
  std::string s(trim(raw));
  std::smatch m;
  AttributePath p;
  if (std::regex_match(s, m, kSelector)) {
    p.selector = PathSelector{m[2].str(), m[1].matched && m[1].length() > 0, m[3].str()};
    if (m[4].matched) p.attribute = m[4].str();
    return p;
  }
  if (std::regex_match(s, m, kPlain)) {
    p.base_dollar = m[1].length() > 0;
    p.base = m[2].str();
    if (m[3].matched) p.attribute = m[3].str();
    return p;
  }
  throw SyntaxFail{0, "malformed assignment target '" + s + "'"};
}

void write_value(std::ostream& os, const ValueExpr& e);

void write_ref(std::ostream& os, const Ref& r) {
  if (r.dollar) os << '$';
  os << r.token;
  for (const auto& a : r.attributes) os << '.' << a;
}

void write_value(std::ostream& os, const ValueExpr& e) {
  switch (e.kind) {
    case ValueExpr::Kind::Int:
      os << e.int_value;
      return;
    case ValueExpr::Kind::String:
      os << e.text;
      return;
    case ValueExpr::Kind::Arith:
    case ValueExpr::Kind::Formula:
      os << '(';
      write_value(os, e.operands[0]);
      os << e.text;
      write_value(os, e.operands[1]);
      os << ')';
      return;
    case ValueExpr::Kind::Relative:
      os << '+';
      write_value(os, e.operands[0]);
      return;
    case ValueExpr::Kind::Ref:
      write_ref(os, e.ref);
      return;
    case ValueExpr::Kind::OpCall:
      write_ref(os, e.ref);
      os << '.' << e.text << '(';
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (i) os << ',';
        write_value(os, e.operands[i]);
      }
      os << ')';
      return;
  }
}

}  // namespace

ValueExpr ValueExpr::integer(std::int64_t v) {
  ValueExpr e;
  e.kind = Kind::Int;
  e.int_value = v;
  return e;
}

ValueExpr ValueExpr::string(std::string s) {
  ValueExpr e;
  e.kind = Kind::String;
  e.text = std::move(s);
  return e;
}

ValueExpr ValueExpr::reference(contractcheck::Ref r) {
  ValueExpr e;
  e.kind = Kind::Ref;
  e.ref = std::move(r);
  return e;
}

ValueExpr ValueExpr::binary(Kind kind, std::string op, ValueExpr lhs, ValueExpr rhs) {
  ValueExpr e;
  e.kind = kind;
  e.text = std::move(op);
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  return e;
}

ParseError::ParseError(std::string block_id, std::string field, std::size_t position,
                       std::string what)
    : std::runtime_error((block_id.empty() ? std::string("document") : block_id) + ": " + field +
                         " at " + std::to_string(position) + ": " + what),
      block_id_(std::move(block_id)),
      field_(std::move(field)),
      position_(position) {}

bool is_identifier(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front()))) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

ObjectDecl parse_object_decl(std::string_view entry) {
  std::string_view s = trim(entry);
  auto colon = s.find(':');
  if (colon == std::string_view::npos) throw SyntaxFail{0, "object entry needs 'name:Type'"};
  ObjectDecl d;
  d.name = std::string(trim(s.substr(0, colon)));
  std::string_view type = trim(s.substr(colon + 1));
  if (!type.empty() && type.front() == '$') {
    d.is_reference = true;
    type.remove_prefix(1);
  }
  d.type_name = std::string(type);
  if (!is_identifier(d.name)) throw SyntaxFail{0, "invalid object name '" + d.name + "'"};
  if (!is_identifier(d.type_name)) {
    throw SyntaxFail{colon + 1, "invalid type name '" + d.type_name + "'"};
  }
  if (!ontology::is_known_type(d.type_name)) {
    throw SyntaxFail{colon + 1, "unknown ontology class '" + d.type_name + "'"};
  }
  return d;
}

Assignment parse_assignment(std::string_view entry) {
  auto eq = split_assignment(entry);
  if (eq == std::string_view::npos) throw SyntaxFail{0, "assignment needs 'lhs=rhs'"};
  Assignment a;
  a.lhs = parse_lhs(entry.substr(0, eq));
  try {
    a.rhs = parse_value_impl(entry.substr(eq + 1));
  } catch (SyntaxFail& f) {
    f.position += eq + 1;
    throw;
  }
  return a;
}

ValueExpr parse_value(std::string_view text) {
  try {
    return parse_value_impl(text);
  } catch (const SyntaxFail& f) {
    throw ParseError("", "value", f.position, f.message);
  }
}

std::vector<Block> parse_contract(std::string_view document) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ParseError("", "document", e.byte, e.what());
  }
  if (!doc.is_array()) throw ParseError("", "document", 0, "expected a JSON array of blocks");

  std::vector<Block> blocks;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& entry = doc[i];
    std::string where = "entry " + std::to_string(i);
    if (!entry.is_object()) throw ParseError("", where, 0, "block must be a JSON object");
    if (!entry.contains("ID") || !entry["ID"].is_string()) {
      throw ParseError("", where, 0, "block needs a string ID");
    }
    Block b;
    b.id = entry["ID"].get<std::string>();
    if (!is_identifier(b.id)) throw ParseError(b.id, "ID", 0, "invalid block id");
    if (!seen.insert(b.id).second) throw ParseError(b.id, "ID", 0, "duplicate block id");
    if (entry.contains("Text")) {
      if (!entry["Text"].is_string()) throw ParseError(b.id, "Text", 0, "Text must be a string");
      b.text = entry["Text"].get<std::string>();
    }
    auto strings = [&](const char* field) {
      std::vector<std::string> out;
      if (!entry.contains(field)) return out;
      const json& arr = entry[field];
      if (!arr.is_array()) throw ParseError(b.id, field, 0, "expected an array of strings");
      for (const auto& v : arr) {
        if (!v.is_string()) throw ParseError(b.id, field, 0, "expected an array of strings");
        out.push_back(v.get<std::string>());
      }
      return out;
    };
    auto objects = strings("Object");
    for (std::size_t k = 0; k < objects.size(); ++k) {
      std::string field = "Object[" + std::to_string(k) + "]";
      try {
        b.objects.push_back(parse_object_decl(objects[k]));
      } catch (const SyntaxFail& f) {
        throw ParseError(b.id, field, f.position, f.message);
      }
      for (std::size_t j = 0; j + 1 < b.objects.size(); ++j) {
        if (b.objects[j].name == b.objects.back().name) {
          throw ParseError(b.id, field, 0, "object '" + b.objects.back().name + "' declared twice");
        }
      }
    }
    auto assignments = strings("Assignment");
    for (std::size_t k = 0; k < assignments.size(); ++k) {
      try {
        b.assignments.push_back(parse_assignment(assignments[k]));
      } catch (const SyntaxFail& f) {
        throw ParseError(b.id, "Assignment[" + std::to_string(k) + "]", f.position, f.message);
      }
    }
    blocks.push_back(std::move(b));
  }
  return blocks;
}

namespace {

void check_overflow(bool overflow) {
  if (overflow) throw EvalError("integer overflow in constant expression");
}

}  // namespace

std::int64_t eval_const(const ValueExpr& e) {
  switch (e.kind) {
    case ValueExpr::Kind::Int:
      return e.int_value;
    case ValueExpr::Kind::Arith: {
      std::int64_t a = eval_const(e.operands[0]);
      std::int64_t b = eval_const(e.operands[1]);
      std::int64_t r = 0;
      if (e.text == "+") {
        check_overflow(__builtin_add_overflow(a, b, &r));
        return r;
      }
      if (e.text == "-") {
        check_overflow(__builtin_sub_overflow(a, b, &r));
        return r;
      }
      if (e.text == "*") {
        check_overflow(__builtin_mul_overflow(a, b, &r));
        return r;
      }
      if (b == 0) throw EvalError("division by zero");
      if (a % b != 0) {
        throw EvalError("inexact division " + std::to_string(a) + "/" + std::to_string(b));
      }
      return a / b;
    }
    default:
      throw EvalError("non-constant expression '" + to_string(e) + "'");
  }
}

std::string to_string(const ValueExpr& expr) {
  std::ostringstream os;
  write_value(os, expr);
  return os.str();
}

std::string to_string(const AttributePath& path) {
  std::ostringstream os;
  if (path.selector) {
    os << "${//" << (path.selector->block_dollar ? "$" : "") << path.selector->block_token << "//"
       << path.selector->type_name << '}';
  } else {
    if (path.base_dollar) os << '$';
    os << path.base;
  }
  if (path.attribute) os << '.' << *path.attribute;
  return os.str();
}

std::string to_string(const Assignment& a) { return to_string(a.lhs) + "=" + to_string(a.rhs); }

std::string to_string(const ObjectDecl& d) {
  return d.name + ":" + (d.is_reference ? "$" : "") + d.type_name;
}

std::string serialize_contract(const std::vector<Block>& blocks) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& b : blocks) {
    nlohmann::ordered_json entry;
    entry["ID"] = b.id;
    entry["Text"] = b.text;
    entry["Object"] = nlohmann::ordered_json::array();
    for (const auto& d : b.objects) entry["Object"].push_back(to_string(d));
    entry["Assignment"] = nlohmann::ordered_json::array();
    for (const auto& a : b.assignments) entry["Assignment"].push_back(to_string(a));
    doc.push_back(std::move(entry));
  }
  return doc.dump(2);
}

}  // namespace contractcheck
