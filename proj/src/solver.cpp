#include "contractcheck/solver.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <set>
#include <sstream>

namespace contractcheck {

const char* to_string(Verdict::Status s) {
  switch (s) {
    case Verdict::Status::Sat: return "sat";
    case Verdict::Status::Unsat: return "unsat";
    case Verdict::Status::Unknown: return "unknown";
  }
  return "?";
}

// ---- s-expressions ---------------------------------------------------------

namespace {

class SExprReader {
 public:
  explicit SExprReader(std::string_view s) : s_(s) {}

  std::vector<SExpr> all() {
    std::vector<SExpr> out;
    while (skip_ws(), pos_ < s_.size()) out.push_back(read());
    return out;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (c == ';') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  SExpr read() {
    skip_ws();
    if (pos_ >= s_.size()) throw SolverError("unexpected end of solver output");
    char c = s_[pos_];
    if (c == ')') throw SolverError("unbalanced ')' in solver output");
    if (c == '(') {
      ++pos_;
      SExpr e;
      e.is_list = true;
      for (;;) {
        skip_ws();
        if (pos_ >= s_.size()) throw SolverError("unterminated list in solver output");
        if (s_[pos_] == ')') {
          ++pos_;
          return e;
        }
        e.list.push_back(read());
      }
    }
    SExpr e;
    if (c == '"') {
      std::string text = "\"";
      ++pos_;
      for (;;) {
        if (pos_ >= s_.size()) throw SolverError("unterminated string in solver output");
        char d = s_[pos_++];
        text += d;
        if (d == '"') {
          if (pos_ < s_.size() && s_[pos_] == '"') {
            text += s_[pos_++];
            continue;
          }
          break;
        }
      }
      e.atom = text;
      return e;
    }
    if (c == '|') {
      std::size_t end = s_.find('|', pos_ + 1);
      if (end == std::string_view::npos) throw SolverError("unterminated |symbol| in solver output");
      e.atom = std::string(s_.substr(pos_ + 1, end - pos_ - 1));
      pos_ = end + 1;
      return e;
    }
    std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
           s_[pos_] != '(' && s_[pos_] != ')') {
      ++pos_;
    }
    e.atom = std::string(s_.substr(start, pos_ - start));
    return e;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::optional<std::int64_t> as_int(const SExpr& e) {
  auto numeral = [](const std::string& s) -> std::optional<std::int64_t> {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
    try {
      return std::stoll(s);
    } catch (const std::out_of_range&) {
      return std::nullopt;
    }
  };
  if (!e.is_list) return numeral(e.atom);
  if (e.list.size() == 2 && e.list[0].is_atom("-")) {
    if (auto v = as_int(e.list[1])) return -*v;
  }
  return std::nullopt;
}

bool is_error(const SExpr& e) {
  return e.is_list && !e.list.empty() && e.list[0].is_atom("error");
}

bool is_binding_list(const SExpr& e) {
  if (!e.is_list || e.list.empty()) return false;
  for (const auto& b : e.list) {
    if (!b.is_list || b.list.size() != 2) return false;
  }
  return true;
}

bool is_atom_list(const SExpr& e) {
  if (!e.is_list) return false;
  for (const auto& a : e.list) {
    if (a.is_list) return false;
  }
  return true;
}

}  // namespace

std::vector<SExpr> parse_sexprs(std::string_view text) { return SExprReader(text).all(); }

std::string to_string(const SExpr& e) {
  if (!e.is_list) return e.atom;
  std::string out = "(";
  for (std::size_t i = 0; i < e.list.size(); ++i) out += (i ? " " : "") + to_string(e.list[i]);
  return out + ")";
}

// ---- configuration ---------------------------------------------------------

SolverConfig SolverConfig::from_env() {
  SolverConfig c;
  if (const char* exe = std::getenv("CONTRACTCHECK_SOLVER"); exe && *exe) c.executable = exe;
  return c;
}

// ---- emission --------------------------------------------------------------

namespace {

SymbolSet instance_symbols(const AnalysisInstance& instance) {
  SymbolSet s;
  for (const auto& a : instance.assertions) collect_symbols(a.term, s);
  return s;
}

std::string join(const std::set<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : " ") + x;
  return out;
}

}  // namespace

std::string emit_smtlib(const AnalysisInstance& instance, SoftEmission soft) {
  std::set<std::string> names;
  for (const auto& a : instance.assertions) {
    if (!names.insert(a.name).second) throw SolverError("duplicate assertion name " + a.name);
  }
  SymbolSet sym = instance_symbols(instance);
  std::ostringstream os;
  os << "(set-option :produce-unsat-cores true)\n"
     << "(set-option :produce-models true)\n"
     << "(set-logic QF_UFLIA)\n";
  if (!sym.persons.empty()) os << "(declare-sort Person 0)\n";
  if (!sym.objects.empty()) os << "(declare-sort Object 0)\n";
  for (const auto& p : sym.persons) os << "(declare-fun " << p << " () Person)\n";
  for (const auto& o : sym.objects) os << "(declare-fun " << o << " () Object)\n";
  if (!sym.objects.empty()) os << "(declare-fun owner (Object) Person)\n";
  for (const auto& v : sym.int_vars) os << "(declare-fun " << v << " () Int)\n";
  std::string prefix = instance.id() + "__";
  if (sym.persons.size() >= 2) {
    os << "(assert (! (distinct " << join(sym.persons) << ") :named " << prefix
       << "distinct_persons))\n";
  }
  if (sym.objects.size() >= 2) {
    os << "(assert (! (distinct " << join(sym.objects) << ") :named " << prefix
       << "distinct_objects))\n";
  }
  for (const auto& a : instance.assertions) {
    if (a.soft) continue;
    os << "(assert (! " << to_smtlib(a.term) << " :named " << a.name << "))\n";
  }
  if (soft == SoftEmission::Native) {
    for (const auto& a : instance.assertions) {
      if (a.soft) os << "(assert-soft " << to_smtlib(a.term) << " :weight " << a.weight << " :id goal)\n";
    }
  }
  return os.str();
}

ModelQuery query_for(const AnalysisInstance& instance) {
  SymbolSet sym = instance_symbols(instance);
  return {{sym.int_vars.begin(), sym.int_vars.end()},
          {sym.objects.begin(), sym.objects.end()},
          {sym.persons.begin(), sym.persons.end()}};
}

// ---- output parsing --------------------------------------------------------

Verdict parse_solver_output(std::string_view output) {
  std::vector<SExpr> items;
  try {
    items = parse_sexprs(output);
  } catch (const SolverError& e) {
    throw SolverError(std::string(e.what()), std::string(output));
  }
  Verdict v;
  bool have_status = false;
  std::map<std::string, std::string> person_value;  // constant -> solver value
  std::map<std::string, std::string> owner_value;   // object -> solver value
  std::optional<std::vector<std::string>> core;
  for (const auto& e : items) {
    if (!e.is_list) {
      if (have_status) continue;
      if (e.atom == "sat") v.status = Verdict::Status::Sat;
      else if (e.atom == "unsat") v.status = Verdict::Status::Unsat;
      else if (e.atom == "unknown") v.status = Verdict::Status::Unknown;
      else continue;
      have_status = true;
      continue;
    }
    if (is_error(e)) continue;
    if (is_binding_list(e)) {
      for (const auto& b : e.list) {
        const SExpr& key = b.list[0];
        const SExpr& val = b.list[1];
        if (key.is_list) {
          if (key.list.size() == 2 && key.list[0].is_atom("owner") && !val.is_list) {
            owner_value[key.list[1].atom] = val.atom;
          }
        } else if (auto i = as_int(val)) {
          v.model.ints[key.atom] = *i;
        } else if (!val.is_list) {
          person_value[key.atom] = val.atom;
        }
      }
      continue;
    }
    if (is_atom_list(e)) {
      core.emplace();
      for (const auto& a : e.list) core->push_back(a.atom);
    }
  }
  if (!have_status) throw SolverError("solver printed no verdict", std::string(output));
  std::map<std::string, std::string> person_of_value;
  for (const auto& [p, val] : person_value) person_of_value.emplace(val, p);
  for (const auto& [o, val] : owner_value) {
    auto it = person_of_value.find(val);
    v.model.owner[o] = it != person_of_value.end() ? it->second : val;
  }
  if (v.status == Verdict::Status::Unsat && core) v.core = *core;
  if (v.status != Verdict::Status::Sat) v.model = {};
  if (v.status == Verdict::Status::Unknown) v.reason = "solver returned unknown";
  return v;
}

std::string format_get_value(const std::map<std::string, std::int64_t>& ints) {
  std::string out = "(";
  bool first = true;
  for (const auto& [name, value] : ints) {
    if (!first) out += "\n ";
    first = false;
    out += "(" + name + " " + (value < 0 ? "(- " + std::to_string(-value) + ")" : std::to_string(value)) + ")";
  }
  return out + ")";
}

// ---- process ---------------------------------------------------------------

namespace {

struct ProcessResult {
  std::string out;
  std::string err;
  int status = 0;
  bool timed_out = false;
};

class TempFile {
 public:
  explicit TempFile(const std::string& content) {
    const char* dir = std::getenv("TMPDIR");
    path_ = std::string(dir && *dir ? dir : "/tmp") + "/contractcheck-XXXXXX.smt2";
    int fd = mkstemps(path_.data(), 5);
    if (fd < 0) throw SolverError("cannot create temporary file: " + std::string(std::strerror(errno)));
    std::size_t off = 0;
    while (off < content.size()) {
      ssize_t n = ::write(fd, content.data() + off, content.size() - off);
      if (n < 0) {
        ::close(fd);
        ::unlink(path_.c_str());
        throw SolverError("cannot write temporary file");
      }
      off += static_cast<std::size_t>(n);
    }
    ::close(fd);
  }
  ~TempFile() { ::unlink(path_.c_str()); }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

ProcessResult run_process(const std::vector<std::string>& argv, double timeout_seconds) {
  int out_pipe[2], err_pipe[2];
  if (pipe2(out_pipe, O_CLOEXEC) != 0) throw SolverError("pipe failed");
  if (pipe2(err_pipe, O_CLOEXEC) != 0) {
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    throw SolverError("pipe failed");
  }
  std::vector<char*> cargv;
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  pid_t pid = fork();
  if (pid < 0) throw SolverError("fork failed: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    execvp(cargv[0], cargv.data());
    _exit(127);
  }
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);

  ProcessResult r;
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::milliseconds(static_cast<long>(timeout_seconds * 1000));
  pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  int open_fds = 2;
  char buf[4096];
  while (open_fds > 0) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      r.timed_out = true;
      kill(pid, SIGKILL);
      break;
    }
    int n = poll(fds, 2, static_cast<int>(left.count()));
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      ssize_t got = ::read(fds[i].fd, buf, sizeof buf);
      if (got > 0) {
        (i == 0 ? r.out : r.err).append(buf, static_cast<std::size_t>(got));
      } else {
        ::close(fds[i].fd);
        fds[i].fd = -1;
        --open_fds;
      }
    }
  }
  for (auto& f : fds) {
    if (f.fd >= 0) ::close(f.fd);
  }
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  r.status = status;
  return r;
}

std::string query_commands(const ModelQuery& q) {
  std::string s = "(check-sat)\n";
  auto list = [](const std::vector<std::string>& xs, const char* wrap) {
    std::string out;
    for (const auto& x : xs) out += (out.empty() ? "" : " ") + (wrap ? "(" + std::string(wrap) + " " + x + ")" : x);
    return out;
  };
  if (!q.ints.empty()) s += "(get-value (" + list(q.ints, nullptr) + "))\n";
  if (!q.objects.empty()) s += "(get-value (" + list(q.objects, "owner") + "))\n";
  if (!q.persons.empty()) s += "(get-value (" + list(q.persons, nullptr) + "))\n";
  s += "(get-unsat-core)\n";
  return s;
}

}  // namespace

Verdict run_solver(const std::string& text, const SolverConfig& config, const ModelQuery& query) {
  if (config.timeout_seconds <= 0) throw SolverError("solver timeout must be positive");
  std::string script = text;
  if (text.find("(check-sat)") == std::string::npos) script += query_commands(query);
  TempFile file(script);
  std::vector<std::string> argv{config.executable};
  argv.insert(argv.end(), config.args.begin(), config.args.end());
  argv.push_back(file.path());

  auto start = std::chrono::steady_clock::now();
  ProcessResult r = run_process(argv, config.timeout_seconds);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (r.timed_out) {
    Verdict v;
    v.reason = "timeout";
    v.seconds = seconds;
    return v;
  }
  if (WIFEXITED(r.status) && WEXITSTATUS(r.status) == 127 && r.out.empty()) {
    throw SolverError("cannot run solver '" + config.executable + "'", r.err);
  }
  Verdict v;
  try {
    v = parse_solver_output(r.out);
  } catch (const SolverError& e) {
    throw SolverError(std::string(e.what()) + ": " + r.out + r.err, r.out + r.err);
  }
  v.seconds = seconds;
  return v;
}

// ---- instance solving ------------------------------------------------------

namespace {

void fill_violations(const AnalysisInstance& instance, Verdict& v) {
  if (v.status == Verdict::Status::Sat) v.model.violated_soft = violated_soft(instance, v.model.valuation());
}

}  // namespace

Verdict solve(const AnalysisInstance& instance, const SolverConfig& config) {
  Verdict v = run_solver(emit_smtlib(instance), config, query_for(instance));
  fill_violations(instance, v);
  return v;
}

Verdict solve_maxsmt(const AnalysisInstance& instance, const SolverConfig& config) {
  Verdict hard = solve(instance, config);
  if (hard.status != Verdict::Status::Sat || !instance.has_soft()) return hard;
  double total = hard.seconds;
  ModelQuery query = query_for(instance);

  if (config.maxsmt_mode == MaxSmtMode::NativeSoft) {
    Verdict v = run_solver(emit_smtlib(instance, SoftEmission::Native), config, query);
    fill_violations(instance, v);
    v.seconds += total;
    return v.status == Verdict::Status::Sat ? v : hard;
  }

  std::vector<const NamedAssertion*> softs;
  for (const auto& a : instance.assertions) {
    if (a.soft) softs.push_back(&a);
  }
  std::string base = emit_smtlib(instance);
  std::string indicators;
  std::string sum;
  for (std::size_t i = 0; i < softs.size(); ++i) {
    std::string ind = "cc_soft_" + std::to_string(i);
    indicators += "(declare-fun " + ind + " () Int)\n";
    indicators += "(assert (and (<= 0 " + ind + ") (<= " + ind + " 1)))\n";
    indicators += "(assert (=> (= " + ind + " 1) " + to_smtlib(softs[i]->term) + "))\n";
    sum += " " + ind;
  }
  if (softs.size() > 1) sum = "(+" + sum + ")";
  else sum = sum.substr(1);

  Verdict best = hard;
  std::size_t lo = softs.size() - hard.model.violated_soft.size();
  std::size_t hi = softs.size();
  while (lo < hi) {
    std::size_t mid = (lo + hi + 1) / 2;
    std::string text = base + indicators + "(assert (>= " + sum + " " + std::to_string(mid) + "))\n";
    Verdict v = run_solver(text, config, query);
    total += v.seconds;
    if (v.status == Verdict::Status::Sat) {
      fill_violations(instance, v);
      best = v;
      lo = softs.size() - v.model.violated_soft.size();
    } else if (v.status == Verdict::Status::Unsat) {
      hi = mid - 1;
    } else {
      break;
    }
  }
  best.seconds = total;
  return best;
}

AnalysisInstance restrict_to(const AnalysisInstance& instance, const std::vector<std::string>& names) {
  std::set<std::string> keep(names.begin(), names.end());
  AnalysisInstance out;
  out.kind = instance.kind;
  out.targets = instance.targets;
  for (const auto& a : instance.assertions) {
    if (!a.soft && keep.count(a.name)) out.assertions.push_back(a);
  }
  return out;
}

}  // namespace contractcheck
