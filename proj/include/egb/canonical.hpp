// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic semantic-equivalence rules used by the simulator when
// matching an invocation against the simulation dictionary.
//
//   string   case-fold, trim, collapse internal whitespace
//   date     YYYY-MM-DD, MM/DD/YYYY or "Month D, YYYY" -> YYYY-MM-DD
//   decimal  strip currency symbols and thousands separators, exact decimal,
//            no trailing zeros ("$35.00" -> "35")
//   integer  decimal rules, must be integral
//   boolean  true/false, either as bool or as text
//
// Every function here is idempotent: canonicalize(canonicalize(x)) == canonicalize(x).

#include <optional>
#include <string>
#include <string_view>

#include "egb/types.hpp"

namespace egb {

/// Throws CanonicalizationError when `value` cannot be read as `type`.
std::string canonicalize(const Literal& value, SemanticType type);

/// Non-throwing variant.
std::optional<std::string> try_canonicalize(const Literal& value, SemanticType type) noexcept;

std::string canonical_string(std::string_view text);
std::string canonical_date(std::string_view text);
std::string canonical_decimal(std::string_view text);
std::string canonical_integer(std::string_view text);
std::string canonical_boolean(std::string_view text);

}  // namespace egb
