// contractcheck: analyze block contracts from the command line or serve them over HTTP.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "contractcheck/blocks.hpp"
#include "contractcheck/model.hpp"
#include "contractcheck/orchestrator.hpp"
#include "contractcheck/service.hpp"

namespace fs = std::filesystem;
using namespace contractcheck;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitToolError = 1;
constexpr int kExitInconsistent = 2;

struct AnalyzeArgs {
  std::string path;
  std::vector<std::string> analyses{"all"};
  std::string solver;
  double timeout = 10.0;
  std::string format = "text";
  std::string out_dir;
  std::string maxsmt = "native";
  bool timing = false;
  unsigned workers = 0;
};

bool write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

std::string mermaid_all(const Report& report) {
  std::string out;
  for (const auto& o : report.analyses) {
    if (!o.trace) continue;
    out += "%% " + o.id + "\n" + to_sequence_diagram(*o.trace) + "\n";
  }
  return out;
}

int run_analyze(const AnalyzeArgs& args) {
  std::ifstream in(args.path, std::ios::binary);
  if (!in) {
    std::cerr << "io error: cannot read " << args.path << '\n';
    return kExitToolError;
  }
  std::stringstream ss;
  ss << in.rdbuf();

  RunOptions options;
  options.workers = args.workers;
  for (const auto& a : args.analyses) {
    if (a == "all") continue;
    auto kind = analysis_kind_from_string(a);
    if (!kind) {
      std::cerr << "usage error: unknown analysis '" << a << "'\n";
      return kExitToolError;
    }
    options.kinds.insert(*kind);
  }
  SolverConfig config = SolverConfig::from_env();
  if (!args.solver.empty()) config.executable = args.solver;
  config.timeout_seconds = args.timeout;
  config.maxsmt_mode = args.maxsmt == "iterative" ? MaxSmtMode::IterativeFallback : MaxSmtMode::NativeSoft;

  Report report;
  std::string id = fs::path(args.path).stem().string();
  try {
    report = analyze_document(ss.str(), id, config, options);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitToolError;
  } catch (const ResolveError& e) {
    std::cerr << "reference error: " << e.what() << '\n';
    return kExitToolError;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return kExitToolError;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitToolError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitToolError;
  }

  JsonOptions json_options{args.timing, 2};
  if (args.format == "json") std::cout << to_json(report, json_options) << '\n';
  else if (args.format == "mermaid") std::cout << mermaid_all(report);
  else std::cout << to_text(report);

  if (!args.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(args.out_dir, ec);
    fs::path dir(args.out_dir);
    bool ok = !ec && write_file(dir / (id + ".report.json"), to_json(report, json_options) + "\n") &&
              write_file(dir / (id + ".report.txt"), to_text(report));
    for (const auto& o : report.analyses) {
      if (o.trace) ok = ok && write_file(dir / (id + "." + o.id + ".mmd"), to_sequence_diagram(*o.trace));
    }
    if (!ok) {
      std::cerr << "io error: cannot write to " << args.out_dir << '\n';
      return kExitToolError;
    }
  }

  for (const auto& o : report.analyses) {
    if (o.status == "error") std::cerr << "solver error in " << o.id << ": " << o.detail << '\n';
  }
  if (report.has_tool_errors()) return kExitToolError;
  return report.has_inconsistencies() ? kExitInconsistent : kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consistency checker for block-structured share purchase agreements"};
  app.require_subcommand(1);

  AnalyzeArgs a;
  auto* analyze = app.add_subcommand("analyze", "Check a block file and report red flags");
  analyze->add_option("file", a.path, "Block file (JSON)")->required();
  analyze->add_option("--analysis", a.analyses, "all, I, II, unsat, defense, limitation (repeatable)")
      ->delimiter(',');
  analyze->add_option("--solver", a.solver, "SMT-LIB 2 solver executable (default: $CONTRACTCHECK_SOLVER or z3)");
  analyze->add_option("--timeout", a.timeout, "Per-instance solver timeout in seconds")
      ->check(CLI::PositiveNumber);
  analyze->add_option("--format", a.format, "Output format")
      ->check(CLI::IsMember({"json", "text", "mermaid"}));
  analyze->add_option("--out", a.out_dir, "Also write report and diagrams to this directory");
  analyze->add_option("--maxsmt", a.maxsmt, "Soft-constraint strategy")
      ->check(CLI::IsMember({"native", "iterative"}));
  analyze->add_option("--workers", a.workers, "Concurrent solver processes (0: auto)");
  analyze->add_flag("--timing", a.timing, "Include timings in JSON output");

  std::string host = "127.0.0.1";
  int port = 8080;
  ServiceConfig service;
  std::string store = "store", library = "data/library", service_solver;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--host", host, "Listen address");
  serve_cmd->add_option("--port", port, "Listen port");
  serve_cmd->add_option("--store", store, "Directory for stored contracts");
  serve_cmd->add_option("--library", library, "Directory of block templates");
  serve_cmd->add_option("--solver", service_solver, "SMT-LIB 2 solver executable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitClean : kExitToolError;
  }

  if (*analyze) return run_analyze(a);

  service.store_dir = store;
  service.library_dir = library;
  if (!service_solver.empty()) service.solver.executable = service_solver;
  std::cerr << "listening on " << host << ':' << port << '\n';
  if (!serve(host, port, service)) {
    std::cerr << "io error: cannot listen on " << host << ':' << port << '\n';
    return kExitToolError;
  }
  return kExitClean;
}
