#pragma once

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "metal/pattern.hpp"

namespace metal::recommend {

using mining::Context;
using mining::Item;
using mining::Sequence;

/// "Learners with `context` who did `antecedent` next did `consequent`."
struct Rule {
  Context context;
  Sequence antecedent;
  Item consequent;
  double confidence = 0;
  std::size_t support = 0;
  friend bool operator==(const Rule&, const Rule&) = default;
};

nlohmann::json to_json(const Rule& r);
Rule rule_from_json(const nlohmann::json& j);
std::string explain(const Rule& r);

/// One rule per pattern of length >= 2, splitting off the last item.
/// Confidence is recomputed from `pattern_support` on both halves.
std::vector<Rule> derive_rules(const std::vector<mining::MultiSourcePattern>& patterns,
                               const mining::SequenceDB& db,
                               const mining::LearnerContexts& contexts, double min_confidence);

enum class State { Proposed, Approved, Rejected, Amended, Delivered };
enum class Decision { Approve, Reject, Amend, Deliver };

std::string_view to_string(State s);
std::string_view to_string(Decision d);
std::optional<State> parse_state(std::string_view s);
std::optional<Decision> parse_decision(std::string_view s);

/// The review state machine. Empty when `decision` is illegal in `from`.
std::optional<State> next_state(State from, Decision decision);
bool is_terminal(State s);

struct Transition {
  State state = State::Proposed;
  Instant at{};
};

struct Recommendation {
  std::string id;
  std::string learner_id;
  Item consequent;
  std::vector<std::string> resources;  // consequent materialized as resources
  Rule rule;
  std::optional<Item> original_consequent;  // set once amended
  std::optional<int> rating;                 // 1..5
  std::string note;
  State state = State::Proposed;
  std::vector<Transition> history;
};

nlohmann::json to_json(const Recommendation& r);
Recommendation recommendation_from_json(const nlohmann::json& j);

struct ReviewRequest {
  Decision decision = Decision::Approve;
  std::optional<Item> amended_consequent;
  std::vector<std::string> amended_resources;  // materialization of an attr consequent
  std::optional<int> rating;
  std::optional<std::string> note;
};

/// Thread-safe recommendation registry. Each review is an atomic
/// check-and-advance of the state; a stale review gets ILLEGAL_TRANSITION.
/// When `file` is set, the registry is loaded from and saved to it.
class RecommendationBook {
 public:
  explicit RecommendationBook(std::filesystem::path file = {}, Clock clock = system_clock());

  /// Proposes one recommendation per matching rule: the rule context is a
  /// subset of `learner_context`, the antecedent occurs in a recent session
  /// and antecedent+consequent does not. Suppresses a consequent that is
  /// already pending (non-terminal) for the learner.
  std::vector<Recommendation> propose(const std::string& learner_id, const std::vector<Rule>& rules,
                                      const std::set<std::string>& learner_context,
                                      const std::vector<mining::Session>& recent_sessions,
                                      const mining::ResourceAttributes& attributes);

  /// Throws UnknownRecommendation, IllegalTransition or Validation.
  Recommendation review(const std::string& id, const ReviewRequest& request);

  std::optional<Recommendation> get(const std::string& id) const;
  std::vector<Recommendation> list(const std::optional<std::string>& learner,
                                   const std::optional<State>& state) const;
  /// What the learner view may show: delivered items only.
  std::vector<Recommendation> delivered(const std::string& learner) const;

 private:
  void save_locked() const;

  std::filesystem::path file_;
  Clock clock_;
  mutable std::mutex mutex_;
  std::vector<Recommendation> items_;
  std::size_t next_id_ = 1;
};

}  // namespace metal::recommend
