#pragma once

#include <string>
#include <string_view>

namespace metal {

/// Random version-4 UUID, lowercase.
std::string make_uuid();
bool is_uuid(std::string_view text);
std::string to_lower(std::string_view text);

/// Absolute identifier: `scheme:rest` with an RFC 3986 scheme and non-empty rest.
bool is_absolute_iri(std::string_view text);

/// Roster ids are opaque tokens of 1..64 printable characters without commas.
bool is_roster_id(std::string_view text);

}  // namespace metal
