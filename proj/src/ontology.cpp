#include "contractcheck/ontology.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace contractcheck::ontology {

namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 13> kClasses{{
    {"SPA", ""},
    {"Person", ""},
    {"PropertyRight", ""},
    {"Object", ""},
    {"Shares", "Object"},
    {"PurchasePrice", "Object"},
    {"Claim", ""},
    {"PrimaryClaim", "Claim"},
    {"SecondaryClaim", "Claim"},
    {"WarrantyClaim", "SecondaryClaim"},
    {"PerformanceClaim", "WarrantyClaim"},
    {"RestitutionClaim", "WarrantyClaim"},
    {"CompensationClaim", "WarrantyClaim"},
}};

constexpr std::array<std::string_view, 4> kScalars{"Integer", "String", "Date", "Block"};

constexpr std::array<std::string_view, 8> kSpaAttributes{
    "Name", "Seller", "Purchaser", "Object", "Price", "Claim", "Closing", "Signing"};
constexpr std::array<std::string_view, 2> kObjectAttributes{"Name", "Amount"};
constexpr std::array<std::string_view, 3> kPropertyRightAttributes{"Name", "Owner", "Property"};
constexpr std::array<std::string_view, 12> kClaimAttributes{
    "Name",  "Debtor",  "Creditor", "DueDate", "Arise", "Limitation",
    "Trigger", "Precede", "Performance", "Min", "Max", "Compensation"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& arr, std::string_view v) {
  return std::find(arr.begin(), arr.end(), v) != arr.end();
}

}  // namespace

bool is_class(std::string_view type) {
  return std::any_of(kClasses.begin(), kClasses.end(),
                     [&](const auto& c) { return c.first == type; });
}

bool is_scalar(std::string_view type) { return contains(kScalars, type); }

std::optional<std::string_view> parent_of(std::string_view type) {
  for (const auto& [name, parent] : kClasses) {
    if (name == type) {
      if (parent.empty()) return std::nullopt;
      return parent;
    }
  }
  return std::nullopt;
}

bool is_a(std::string_view type, std::string_view base) {
  std::optional<std::string_view> cur = type;
  while (cur) {
    if (*cur == base) return true;
    cur = parent_of(*cur);
  }
  return false;
}

bool has_attribute(std::string_view type, std::string_view attribute) {
  if (is_scalar(type)) return attribute.empty();
  if (type == "SPA") return contains(kSpaAttributes, attribute);
  if (type == "Person") return attribute == "Name";
  if (type == "PropertyRight") return contains(kPropertyRightAttributes, attribute);
  if (is_a(type, "Object")) return contains(kObjectAttributes, attribute);
  if (is_a(type, "Claim")) return contains(kClaimAttributes, attribute);
  return false;
}

bool is_multi_valued(std::string_view type, std::string_view attribute) {
  return type == "SPA" && attribute == "Claim";
}

}  // namespace contractcheck::ontology
