#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace contractcheck::ontology {

// Class names of the share-purchase ontology. Hierarchy:
//   Object <- Shares, PurchasePrice
//   Claim <- PrimaryClaim, SecondaryClaim <- WarrantyClaim
//          <- PerformanceClaim, RestitutionClaim, CompensationClaim
// plus SPA, Person, PropertyRight and the scalars Integer, String, Date, Block.

bool is_class(std::string_view type);
bool is_scalar(std::string_view type);
inline bool is_known_type(std::string_view type) { return is_class(type) || is_scalar(type); }

/// Direct superclass, or nullopt for roots and unknown names.
std::optional<std::string_view> parent_of(std::string_view type);

/// True when `type` equals `base` or inherits from it.
bool is_a(std::string_view type, std::string_view base);

/// Attribute names accepted for objects of `type`. Scalars only carry their
/// own value (the empty attribute name).
bool has_attribute(std::string_view type, std::string_view attribute);

/// Attributes that collect several values instead of holding exactly one.
bool is_multi_valued(std::string_view type, std::string_view attribute);

}  // namespace contractcheck::ontology
