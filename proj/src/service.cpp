#include "contractcheck/service.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "contractcheck/blocks.hpp"
#include "contractcheck/model.hpp"
#include "contractcheck/ontology.hpp"
#include "contractcheck/symbols.hpp"
#include "httplib.h"
#include "json.hpp"

namespace contractcheck {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

ContractStore::ContractStore(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

bool ContractStore::valid_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

fs::path ContractStore::path_of(const std::string& id) const { return dir_ / (id + ".json"); }

std::optional<std::string> ContractStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  std::ifstream in(path_of(id), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool ContractStore::put(const std::string& id, const std::string& document) {
  std::lock_guard lock(mutex_);
  fs::path target = path_of(id);
  bool existed = fs::exists(target);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << document;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
  return existed;
}

bool ContractStore::remove(const std::string& id) {
  std::lock_guard lock(mutex_);
  return fs::remove(path_of(id));
}

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(2), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message,
                ordered_json findings = ordered_json::array()) {
  send_json(res, status, {{"version", kReportVersion}, {"error", message}, {"findings", findings}});
}

ordered_json finding_json(const std::string& code, const std::string& message, std::string block) {
  if (block.empty()) block = "contract";
  return {{"severity", "error"}, {"code", code}, {"message", message}, {"blocks", {block}}};
}

std::optional<std::set<AnalysisKind>> parse_kinds(const std::string& list) {
  std::set<AnalysisKind> kinds;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item == "all") continue;
    auto k = analysis_kind_from_string(item);
    if (!k) return std::nullopt;
    kinds.insert(*k);
  }
  return kinds;
}

// Every declared object is a parameter of its template: references must be
// bound to an object elsewhere, values and class instances are edited in place.
ordered_json parameters_of(const ordered_json& blocks) {
  ordered_json params = ordered_json::array();
  auto parsed = parse_contract(blocks.dump());
  for (const auto& b : parsed) {
    for (const auto& d : b.objects) {
      const char* kind = d.is_reference ? "reference" : ontology::is_scalar(d.type_name) ? "value" : "object";
      params.push_back({{"block", b.id}, {"name", d.name}, {"type", d.type_name}, {"kind", kind}});
    }
  }
  return params;
}

}  // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)), store_(config_.store_dir) {}

std::string Service::library_json() const {
  ordered_json out{{"version", kReportVersion}, {"templates", ordered_json::array()}};
  std::vector<fs::path> files;
  if (fs::is_directory(config_.library_dir)) {
    for (const auto& e : fs::directory_iterator(config_.library_dir)) {
      if (e.path().extension() == ".json") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    ordered_json t = ordered_json::parse(in);
    if (!t.contains("name")) t["name"] = f.stem().string();
    if (!t.contains("parameters")) t["parameters"] = parameters_of(t.value("blocks", ordered_json::array()));
    out["templates"].push_back(std::move(t));
  }
  return out.dump(2);
}

void Service::mount(httplib::Server& server) {
  server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_header("X-Schema-Version", std::to_string(kReportVersion));
  });

  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  server.Get("/library/blocks", [this](const httplib::Request&, httplib::Response& res) {
    try {
      res.set_content(library_json(), kJson);
    } catch (const std::exception& e) {
      send_error(res, 500, std::string("library unreadable: ") + e.what());
    }
  });

  server.Get(R"(/contracts/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    std::string id = req.matches[1];
    if (!ContractStore::valid_id(id)) return send_error(res, 400, "invalid contract id");
    auto doc = store_.get(id);
    if (!doc) return send_error(res, 404, "unknown contract " + id);
    res.set_content(*doc, kJson);
  });

  server.Put(R"(/contracts/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    std::string id = req.matches[1];
    if (!ContractStore::valid_id(id)) return send_error(res, 400, "invalid contract id");
    try {
      parse_contract(req.body);
    } catch (const ParseError& e) {
      return send_error(res, 422, "parse error",
                        ordered_json::array({finding_json("PARSE_ERROR", e.what(), e.block_id())}));
    }
    bool existed = store_.put(id, req.body);
    send_json(res, existed ? 200 : 201, {{"version", kReportVersion}, {"id", id}, {"stored", true}});
  });

  server.Delete(R"(/contracts/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    std::string id = req.matches[1];
    if (!ContractStore::valid_id(id)) return send_error(res, 400, "invalid contract id");
    if (!store_.remove(id)) return send_error(res, 404, "unknown contract " + id);
    std::lock_guard lock(running_mutex_);
    last_.erase(id);
    send_json(res, 200, {{"version", kReportVersion}, {"id", id}, {"deleted", true}});
  });

  // Runs an analysis unless one is in flight for the same contract.
  auto analyze = [this](const std::string& id, const std::string& document,
                        const std::set<AnalysisKind>& kinds, httplib::Response& res) -> std::optional<Report> {
    {
      std::lock_guard lock(running_mutex_);
      if (!running_.insert(id).second) {
        send_error(res, 409, "an analysis is already running for " + id);
        return std::nullopt;
      }
    }
    struct Release {
      Service* s;
      std::string id;
      ~Release() {
        std::lock_guard lock(s->running_mutex_);
        s->running_.erase(id);
      }
    } release{this, id};
    RunOptions options{kinds, config_.workers};
    try {
      Report report = analyze_document(document, id, config_.solver, options);
      if (kinds.empty()) {
        std::lock_guard lock(running_mutex_);
        last_[id] = {document, report};
      }
      return report;
    } catch (const ParseError& e) {
      send_error(res, 422, "parse error", ordered_json::array({finding_json("PARSE_ERROR", e.what(), e.block_id())}));
    } catch (const ResolveError& e) {
      send_error(res, 422, "unresolved reference",
                 ordered_json::array({finding_json("RESOLVE_ERROR", e.what(), e.block_id())}));
    } catch (const ModelError& e) {
      send_error(res, 422, "invalid contract model",
                 ordered_json::array({finding_json("MODEL_ERROR", e.what(), e.block_id())}));
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
    return std::nullopt;
  };

  server.Post(R"(/contracts/([^/]+)/analyze)", [this, analyze](const httplib::Request& req,
                                                               httplib::Response& res) {
    std::string id = req.matches[1];
    if (!ContractStore::valid_id(id)) return send_error(res, 400, "invalid contract id");
    auto doc = store_.get(id);
    if (!doc) return send_error(res, 404, "unknown contract " + id);
    auto kinds = parse_kinds(req.has_param("kinds") ? req.get_param_value("kinds") : "");
    if (!kinds) return send_error(res, 400, "unknown analysis kind in '" + req.get_param_value("kinds") + "'");
    auto report = analyze(id, *doc, *kinds, res);
    if (!report) return;
    bool timing = req.get_param_value("timing") == "1";
    std::string body = to_json(*report, {timing, 2});
    if (std::any_of(report->findings.begin(), report->findings.end(),
                    [](const Finding& f) { return f.severity == Severity::Error; })) {
      ordered_json payload{{"version", kReportVersion},
                           {"error", "static checks failed"},
                           {"findings", ordered_json::parse(body)["findings"]},
                           {"report", ordered_json::parse(body)}};
      return send_json(res, 422, payload);
    }
    res.set_content(body, kJson);
  });

  server.Get(R"(/contracts/([^/]+)/diagram/([^/]+))", [this, analyze](const httplib::Request& req,
                                                                     httplib::Response& res) {
    std::string id = req.matches[1];
    std::string which = req.matches[2];
    if (!ContractStore::valid_id(id)) return send_error(res, 400, "invalid contract id");
    auto doc = store_.get(id);
    if (!doc) return send_error(res, 404, "unknown contract " + id);
    std::optional<Report> report;
    {
      std::lock_guard lock(running_mutex_);
      auto it = last_.find(id);
      if (it != last_.end() && it->second.document == *doc) report = it->second.report;
    }
    if (!report) {
      report = analyze(id, *doc, {}, res);
      if (!report) return;
    }
    auto kind = analysis_kind_from_string(which);
    for (const auto& o : report->analyses) {
      if (!o.trace) continue;
      if (o.id == which || (kind && o.kind == *kind)) {
        return res.set_content(to_sequence_diagram(*o.trace), "text/plain");
      }
    }
    send_error(res, 404, "no execution trace for analysis " + which);
  });
}

bool serve(const std::string& host, int port, ServiceConfig config) {
  httplib::Server server;
  Service service(std::move(config));
  service.mount(server);
  return server.listen(host, port);
}

}  // namespace contractcheck
