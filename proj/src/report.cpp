#include "contractcheck/report.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace contractcheck {

using nlohmann::ordered_json;

const char* to_string(TraceEvent::Action a) {
  switch (a) {
    case TraceEvent::Action::Performed: return "Performed";
    case TraceEvent::Action::Asserted: return "Asserted";
    case TraceEvent::Action::Withdrawn: return "Withdrawn";
    case TraceEvent::Action::Compensated: return "Compensated";
  }
  return "?";
}

bool Report::has_tool_errors() const {
  return std::any_of(analyses.begin(), analyses.end(),
                     [](const AnalysisOutcome& o) { return o.status == "error"; });
}

bool Report::has_inconsistencies() const {
  if (!flags.empty()) return true;
  return std::any_of(findings.begin(), findings.end(),
                     [](const Finding& f) { return f.severity == Severity::Error; });
}

// ---- JSON ------------------------------------------------------------------

namespace {

ordered_json note_json(const TraceNote& n) {
  return {{"claim", n.claim}, {"debtor", n.debtor}, {"creditor", n.creditor}};
}

ordered_json trace_json(const ExecutionTrace& t) {
  ordered_json j;
  j["participants"] = t.participants;
  j["events"] = ordered_json::array();
  for (const auto& e : t.events) {
    ordered_json ej{{"day", e.day},       {"actor", e.actor},
                    {"counterparty", e.counterparty}, {"claim", e.claim},
                    {"action", to_string(e.action)}};
    if (e.amount) ej["amount"] = *e.amount;
    j["events"].push_back(ej);
  }
  j["unperformed"] = ordered_json::array();
  for (const auto& n : t.unperformed) j["unperformed"].push_back(note_json(n));
  j["satisfied"] = ordered_json::array();
  for (const auto& n : t.satisfied) j["satisfied"].push_back(note_json(n));
  return j;
}

TraceEvent::Action action_from(const std::string& s) {
  for (auto a : {TraceEvent::Action::Performed, TraceEvent::Action::Asserted,
                 TraceEvent::Action::Withdrawn, TraceEvent::Action::Compensated}) {
    if (s == to_string(a)) return a;
  }
  throw std::runtime_error("unknown trace action " + s);
}

TraceNote note_from(const ordered_json& j) {
  return {j.at("claim").get<std::string>(), j.at("debtor").get<std::string>(),
          j.at("creditor").get<std::string>()};
}

ExecutionTrace trace_from(const ordered_json& j) {
  ExecutionTrace t;
  t.participants = j.at("participants").get<std::vector<std::string>>();
  for (const auto& e : j.at("events")) {
    TraceEvent ev;
    ev.day = e.at("day").get<std::int64_t>();
    ev.actor = e.at("actor").get<std::string>();
    ev.counterparty = e.at("counterparty").get<std::string>();
    ev.claim = e.at("claim").get<std::string>();
    ev.action = action_from(e.at("action").get<std::string>());
    if (e.contains("amount")) ev.amount = e.at("amount").get<std::int64_t>();
    t.events.push_back(ev);
  }
  for (const auto& n : j.at("unperformed")) t.unperformed.push_back(note_from(n));
  for (const auto& n : j.at("satisfied")) t.satisfied.push_back(note_from(n));
  return t;
}

AnalysisKind kind_from(const std::string& s) {
  auto k = analysis_kind_from_string(s);
  if (!k) throw std::runtime_error("unknown analysis kind " + s);
  return *k;
}

const char* to_string(Expectation e) {
  return e == Expectation::SatIsGood ? "SatIsGood" : "UnsatIsGood";
}

}  // namespace

std::string to_json(const Report& r, const JsonOptions& options) {
  ordered_json j;
  j["version"] = r.version;
  j["contract"] = r.contract_id;
  j["findings"] = ordered_json::array();
  for (const auto& f : r.findings) {
    j["findings"].push_back({{"severity", to_string(f.severity)},
                             {"code", f.code},
                             {"message", f.message},
                             {"blocks", f.block_ids}});
  }
  j["analyses"] = ordered_json::array();
  for (const auto& o : r.analyses) {
    ordered_json a;
    a["id"] = o.id;
    a["kind"] = to_string(o.kind);
    a["targets"] = o.targets;
    a["expectation"] = to_string(o.expectation);
    a["status"] = o.status;
    a["flagged"] = o.flagged;
    a["detail"] = o.detail;
    a["core"] = o.core;
    a["violated_soft"] = o.violated_soft;
    a["vars"] = o.vars;
    a["constraints"] = o.constraints;
    if (options.include_timing) a["seconds"] = o.seconds;
    a["trace"] = o.trace ? trace_json(*o.trace) : ordered_json(nullptr);
    j["analyses"].push_back(a);
  }
  j["flags"] = ordered_json::array();
  for (const auto& f : r.flags) {
    j["flags"].push_back({{"kind", to_string(f.kind)},
                          {"target", f.target},
                          {"blocks", f.block_ids},
                          {"explanation", f.explanation},
                          {"analyses", f.analyses}});
  }
  j["blocks"] = ordered_json::object();
  for (const auto& [id, text] : r.block_texts) j["blocks"][id] = text;
  ordered_json stats{{"vars", r.stats.vars}, {"constraints", r.stats.constraints}};
  if (options.include_timing) {
    stats["solve_seconds"] = r.stats.solve_seconds;
    stats["max_solver_rss_kb"] = r.stats.max_solver_rss_kb;
  }
  j["stats"] = stats;
  return j.dump(options.indent);
}

Report report_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw std::runtime_error(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    Report r;
    r.version = j.at("version").get<int>();
    if (r.version != kReportVersion) {
      throw std::runtime_error("unsupported report version " + std::to_string(r.version));
    }
    r.contract_id = j.at("contract").get<std::string>();
    for (const auto& f : j.at("findings")) {
      r.findings.push_back({f.at("severity").get<std::string>() == "error" ? Severity::Error
                                                                           : Severity::Warning,
                            f.at("code").get<std::string>(), f.at("message").get<std::string>(),
                            f.at("blocks").get<std::vector<std::string>>()});
    }
    for (const auto& a : j.at("analyses")) {
      AnalysisOutcome o;
      o.id = a.at("id").get<std::string>();
      o.kind = kind_from(a.at("kind").get<std::string>());
      o.targets = a.at("targets").get<std::vector<std::string>>();
      o.expectation = a.at("expectation").get<std::string>() == "SatIsGood"
                          ? Expectation::SatIsGood
                          : Expectation::UnsatIsGood;
      o.status = a.at("status").get<std::string>();
      o.flagged = a.at("flagged").get<bool>();
      o.detail = a.at("detail").get<std::string>();
      o.core = a.at("core").get<std::vector<std::string>>();
      o.violated_soft = a.at("violated_soft").get<std::vector<std::string>>();
      o.vars = a.at("vars").get<int>();
      o.constraints = a.at("constraints").get<int>();
      if (a.contains("seconds")) o.seconds = a.at("seconds").get<double>();
      if (!a.at("trace").is_null()) o.trace = trace_from(a.at("trace"));
      r.analyses.push_back(std::move(o));
    }
    for (const auto& f : j.at("flags")) {
      r.flags.push_back({kind_from(f.at("kind").get<std::string>()), f.at("target").get<std::string>(),
                         f.at("blocks").get<std::vector<std::string>>(),
                         f.at("explanation").get<std::string>(),
                         f.at("analyses").get<std::vector<std::string>>()});
    }
    for (const auto& [id, text] : j.at("blocks").items()) r.block_texts[id] = text.get<std::string>();
    const auto& s = j.at("stats");
    r.stats.vars = s.at("vars").get<int>();
    r.stats.constraints = s.at("constraints").get<int>();
    if (s.contains("solve_seconds")) r.stats.solve_seconds = s.at("solve_seconds").get<double>();
    if (s.contains("max_solver_rss_kb")) r.stats.max_solver_rss_kb = s.at("max_solver_rss_kb").get<long>();
    return r;
  } catch (const ordered_json::exception& e) {
    throw std::runtime_error(std::string("report does not match the schema: ") + e.what());
  }
}

// ---- text ------------------------------------------------------------------

namespace {

std::vector<std::string> wrap(const std::string& text, std::size_t width) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string word, line;
  while (in >> word) {
    while (word.size() > width) {
      if (!line.empty()) {
        lines.push_back(line);
        line.clear();
      }
      lines.push_back(word.substr(0, width));
      word = word.substr(width);
    }
    if (line.empty()) line = word;
    else if (line.size() + 1 + word.size() <= width) line += " " + word;
    else {
      lines.push_back(line);
      line = word;
    }
  }
  if (!line.empty()) lines.push_back(line);
  return lines;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

void side_by_side(std::ostringstream& os, const Report& r, const std::vector<std::string>& ids) {
  constexpr std::size_t kWidth = 36;
  for (std::size_t start = 0; start < ids.size(); start += 2) {
    std::vector<std::string> row(ids.begin() + start, ids.begin() + std::min(ids.size(), start + 2));
    std::vector<std::vector<std::string>> cols;
    for (const auto& id : row) {
      auto it = r.block_texts.find(id);
      std::string text = it == r.block_texts.end() ? "(no text)" : it->second;
      if (text.empty()) text = "(no text)";
      cols.push_back(wrap(text, kWidth));
    }
    std::string rule = "      +";
    for (std::size_t c = 0; c < row.size(); ++c) rule += std::string(kWidth + 2, '-') + "+";
    os << rule << "\n      |";
    for (const auto& id : row) os << ' ' << pad(id, kWidth) << " |";
    os << '\n' << rule << '\n';
    std::size_t height = 0;
    for (const auto& c : cols) height = std::max(height, c.size());
    for (std::size_t l = 0; l < height; ++l) {
      os << "      |";
      for (const auto& c : cols) os << ' ' << pad(l < c.size() ? c[l] : "", kWidth) << " |";
      os << '\n';
    }
    os << rule << '\n';
  }
}

}  // namespace

std::string to_text(const Report& r) {
  std::ostringstream os;
  os << "Contract " << r.contract_id << "\n\n";
  if (r.findings.empty()) {
    os << "Static checks: no findings\n";
  } else {
    os << "Static checks:\n";
    for (const auto& f : r.findings) {
      os << "  " << to_string(f.severity) << ' ' << f.code << " [";
      for (std::size_t i = 0; i < f.block_ids.size(); ++i) os << (i ? ", " : "") << f.block_ids[i];
      os << "] " << f.message << '\n';
    }
  }
  if (!r.analyses.empty()) {
    os << "\nAnalyses:\n";
    for (const auto& o : r.analyses) {
      std::string mark = o.status == "error" ? "ERROR" : o.flagged ? "FLAG" : o.status == "unknown" ? "?" : "ok";
      os << "  " << pad(mark, 6) << pad(o.id, 40) << " " << pad(o.status, 8) << "vars=" << o.vars
         << " constraints=" << o.constraints;
      if (!o.detail.empty()) os << "  (" << o.detail << ')';
      os << '\n';
    }
  }
  if (r.flags.empty()) {
    os << '\n' << (r.has_inconsistencies() ? "no red flags, but static checks reported errors\n"
                                           : "no inconsistencies found\n");
  } else {
    os << "\nRed flags (" << r.flags.size() << "):\n";
    for (std::size_t i = 0; i < r.flags.size(); ++i) {
      const RedFlag& f = r.flags[i];
      os << "  [" << i + 1 << "] " << to_string(f.kind) << " on " << f.target << '\n';
      os << "      blocks: ";
      for (std::size_t b = 0; b < f.block_ids.size(); ++b) os << (b ? ", " : "") << f.block_ids[b];
      os << '\n';
      for (const auto& line : wrap(f.explanation, 90)) os << "      " << line << '\n';
      if (f.analyses.size() > 1) {
        os << "      also seen in:";
        for (std::size_t a = 1; a < f.analyses.size(); ++a) os << ' ' << f.analyses[a];
        os << '\n';
      }
      side_by_side(os, r, f.block_ids);
    }
  }
  for (const auto& o : r.analyses) {
    if (o.kind == AnalysisKind::ContractExecutability && o.trace) {
      os << "\nExecution (" << o.id << "):\n";
      for (const auto& e : o.trace->events) {
        os << "  day " << pad(std::to_string(e.day), 5) << pad(e.claim, 24) << to_string(e.action);
        if (e.amount) os << ' ' << *e.amount;
        os << "  " << e.actor << " -> " << e.counterparty << '\n';
      }
      for (const auto& n : o.trace->unperformed) os << "  unperformed  " << n.claim << " (" << n.debtor << ")\n";
      for (const auto& n : o.trace->satisfied) os << "  holds        " << n.claim << '\n';
    }
  }
  return os.str();
}

// ---- sequence diagram --------------------------------------------------------

std::string to_sequence_diagram(const ExecutionTrace& t) {
  std::ostringstream os;
  os << "sequenceDiagram\n";
  for (const auto& p : t.participants) os << "    participant " << p << '\n';
  for (const auto& e : t.events) {
    os << "    " << e.actor << "->>" << e.counterparty << ": day " << e.day << ' ' << e.claim;
    switch (e.action) {
      case TraceEvent::Action::Performed: break;
      case TraceEvent::Action::Asserted: os << " breach asserted"; break;
      case TraceEvent::Action::Withdrawn: os << " withdrawal"; break;
      case TraceEvent::Action::Compensated:
        os << " compensation";
        if (e.amount) os << ' ' << *e.amount;
        break;
    }
    os << '\n';
  }
  auto note = [&](const TraceNote& n, const std::string& what) {
    std::vector<std::string> over;
    for (const auto& p : {n.debtor, n.creditor}) {
      if (!p.empty() && std::find(over.begin(), over.end(), p) == over.end()) over.push_back(p);
    }
    if (over.empty()) return;
    os << "    Note over " << over[0];
    if (over.size() > 1) os << ',' << over[1];
    os << ": " << n.claim << ' ' << what << '\n';
  };
  for (const auto& n : t.unperformed) note(n, "unperformed by " + n.debtor);
  for (const auto& n : t.satisfied) note(n, "holds");
  return os.str();
}

}  // namespace contractcheck
