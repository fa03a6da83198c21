#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "metal/sequence_db.hpp"

namespace metal::mining {

/// Sequence item. Id items name a concrete resource; attribute items match
/// any resource carrying the `key=value` label. At equal text, ids sort
/// before attributes (the activity source has priority).
enum class ItemKind : unsigned char { Id = 0, Attr = 1 };

struct Item {
  ItemKind kind = ItemKind::Id;
  std::string text;

  static Item id(std::string r) { return {ItemKind::Id, std::move(r)}; }
  static Item attr(std::string a) { return {ItemKind::Attr, std::move(a)}; }

  bool matches(const std::string& resource, const ResourceAttributes& attrs) const;

  friend bool operator==(const Item&, const Item&) = default;
  friend std::strong_ordering operator<=>(const Item& a, const Item& b) {
    if (auto c = a.text.compare(b.text); c != 0) return c < 0 ? std::strong_ordering::less
                                                              : std::strong_ordering::greater;
    return a.kind <=> b.kind;
  }
};

using Sequence = std::vector<Item>;
using Context = std::vector<std::string>;  // sorted, unique labels

std::string to_string(const Item& item);  // id(R-15) / attr(subject=Mathematics)
std::optional<Item> parse_item(std::string_view text);

struct MultiSourcePattern {
  Context context;
  Sequence sequence;
  std::size_t support = 0;
  std::size_t group = 0;

  friend bool operator==(const MultiSourcePattern&, const MultiSourcePattern&) = default;
};

/// Canonical order: context, then sequence, lexicographically.
bool canonical_less(const MultiSourcePattern& a, const MultiSourcePattern& b);

nlohmann::json to_json(const MultiSourcePattern& p);
MultiSourcePattern pattern_from_json(const nlohmann::json& j);

struct Support {
  std::size_t support = 0;
  std::size_t group = 0;
  friend bool operator==(const Support&, const Support&) = default;
};

/// Learners considered by support counting: every key of `contexts` plus
/// every learner with sessions.
std::set<std::string> learner_universe(const SequenceDB& db, const LearnerContexts& contexts);

/// True when `sequence` occurs as an order-preserving, not necessarily
/// contiguous subsequence of `session`.
bool occurs_in(const Sequence& sequence, const Session& session, const ResourceAttributes& attrs);

/// Group = learners whose context contains the pattern context; support =
/// group members with at least one session containing the sequence.
Support pattern_support(const Context& context, const Sequence& sequence, const SequenceDB& db,
                        const LearnerContexts& contexts);

/// Group members supporting the sequence, id-ordered.
std::vector<std::string> supporting_learners(const Context& context, const Sequence& sequence,
                                             const SequenceDB& db, const LearnerContexts& contexts);

/// support / group >= min_support, evaluated without division.
bool meets_support(std::size_t support, std::size_t group, double min_support);

}  // namespace metal::mining
