#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "contractcheck/model.hpp"
#include "contractcheck/solver.hpp"

namespace testing {

inline std::filesystem::path data_dir() { return CONTRACTCHECK_DATA_DIR; }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fixture(const std::string& name) { return read_file(data_dir() / (name + ".json")); }

inline contractcheck::ContractModel fixture_model(const std::string& name) {
  return contractcheck::load_model(fixture(name), name);
}

inline contractcheck::SolverConfig solver_config() {
  auto config = contractcheck::SolverConfig::from_env();
  config.timeout_seconds = 20;
  return config;
}

}  // namespace testing
