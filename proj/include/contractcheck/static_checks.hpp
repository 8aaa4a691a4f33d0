#pragma once

#include <vector>

#include "contractcheck/finding.hpp"
#include "contractcheck/model.hpp"

namespace contractcheck {

/// Seller, purchaser, shares and price must all be present.
std::vector<Finding> check_essentialia(const ContractModel& model);

/// Consequences of primary claims, due dates, parties and triggers.
std::vector<Finding> check_claim_completeness(const ContractModel& model);

/// Build issues followed by both checks above.
std::vector<Finding> run_static_checks(const ContractModel& model);

bool has_errors(const std::vector<Finding>& findings);

}  // namespace contractcheck
