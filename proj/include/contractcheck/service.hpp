#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include "contractcheck/orchestrator.hpp"
#include "contractcheck/solver.hpp"

namespace httplib {
class Server;
}

namespace contractcheck {

/// Contract documents kept as `<dir>/<id>.json`.
class ContractStore {
 public:
  explicit ContractStore(std::filesystem::path dir);

  static bool valid_id(const std::string& id);
  std::optional<std::string> get(const std::string& id) const;
  /// Returns true when the contract already existed.
  bool put(const std::string& id, const std::string& document);
  bool remove(const std::string& id);

 private:
  std::filesystem::path path_of(const std::string& id) const;
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

struct ServiceConfig {
  std::filesystem::path store_dir = "store";
  std::filesystem::path library_dir = "data/library";
  SolverConfig solver = SolverConfig::from_env();
  unsigned workers = 0;
};

class Service {
 public:
  explicit Service(ServiceConfig config);

  /// Installs all routes on `server`.
  void mount(httplib::Server& server);

  /// The library endpoint payload.
  std::string library_json() const;

 private:
  struct Cached {
    std::string document;
    Report report;
  };

  ServiceConfig config_;
  ContractStore store_;
  std::mutex running_mutex_;
  std::set<std::string> running_;
  std::map<std::string, Cached> last_;
};

/// Blocks until the server stops. Returns false if the address cannot be bound.
bool serve(const std::string& host, int port, ServiceConfig config);

}  // namespace contractcheck
