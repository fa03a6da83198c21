#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "metal/time.hpp"

namespace metal {

using Json = nlohmann::json;

inline constexpr std::string_view kVoidedVerb = "http://adlnet.gov/expapi/verbs/voided";
inline constexpr Millis kClockSkewAllowance{60'000};

/// Agent reference: a mailbox IRI, an account, or both.
struct Agent {
  std::string mbox;
  std::string home_page;
  std::string account_name;

  bool has_account() const { return !account_name.empty(); }
  /// True when every identifier present in `filter` matches this agent.
  bool matches(const Agent& filter) const;
  friend bool operator==(const Agent&, const Agent&) = default;
};

/// Parses an agent from its wire form (object) or from a filter string that
/// is either JSON text or a bare `mailto:` IRI.
std::optional<Agent> parse_agent(const Json& value);
std::optional<Agent> parse_agent_filter(std::string_view text);

struct StatementObject {
  bool statement_ref = false;
  std::string id;
};

/// A stored xAPI statement. `body` is the canonical wire form, including
/// unknown extension fields verbatim; the other members index into it.
struct Statement {
  std::string id;
  Agent actor;
  std::string verb_id;
  StatementObject object;
  Instant timestamp{};
  Instant stored{};
  bool voided = false;
  Json body;

  bool is_voiding() const { return verb_id == kVoidedVerb; }
  /// Wire form minus server-assigned fields, for identity comparisons.
  Json content() const;
};

/// Validates a candidate and returns its canonical form. The id is lowercased
/// (or left empty when absent); `stored` is not yet assigned.
/// Throws Error(Validation) naming the offending field path.
Statement parse_statement(const Json& candidate);

/// Canonical form without server fields, used to compare re-inserts.
Json strip_server_fields(const Json& body);

}  // namespace metal
