#pragma once

#include <string>
#include <vector>

namespace contractcheck {

enum class Severity { Error, Warning };

/// A syntactic or structural problem found before solving.
struct Finding {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  std::vector<std::string> block_ids;

  bool operator==(const Finding&) const = default;
};

inline const char* to_string(Severity s) { return s == Severity::Error ? "error" : "warning"; }

}  // namespace contractcheck
