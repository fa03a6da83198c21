#include "metal/recommender.hpp"

#include <algorithm>
#include <fstream>

#include "metal/error.hpp"

namespace metal::recommend {

using nlohmann::json;

namespace {

json items_json(const Sequence& s) {
  json out = json::array();
  for (const auto& i : s) out.push_back(mining::to_string(i));
  return out;
}

Item item_from(const json& j) {
  auto it = mining::parse_item(j.get<std::string>());
  if (!it) throw Error(ErrorCode::Validation, "consequent", "malformed item '" + j.get<std::string>() + "'");
  return *it;
}

bool rule_less(const Rule& a, const Rule& b) {
  if (a.context != b.context) return a.context < b.context;
  if (a.antecedent != b.antecedent) return a.antecedent < b.antecedent;
  return a.consequent < b.consequent;
}

}  // namespace

json to_json(const Rule& r) {
  return {{"context", r.context},
          {"antecedent", items_json(r.antecedent)},
          {"consequent", mining::to_string(r.consequent)},
          {"confidence", r.confidence},
          {"support", r.support}};
}

Rule rule_from_json(const json& j) {
  Rule r;
  r.context = j.at("context").get<Context>();
  for (const auto& i : j.at("antecedent")) r.antecedent.push_back(item_from(i));
  r.consequent = item_from(j.at("consequent"));
  r.confidence = j.at("confidence");
  r.support = j.at("support");
  return r;
}

std::string explain(const Rule& r) {
  std::string ctx, ante;
  for (const auto& c : r.context) ctx += (ctx.empty() ? "" : ", ") + c;
  for (const auto& i : r.antecedent) ante += (ante.empty() ? "" : " ") + mining::to_string(i);
  return "learners {" + ctx + "} who did <" + ante + "> next did " + mining::to_string(r.consequent);
}

std::vector<Rule> derive_rules(const std::vector<mining::MultiSourcePattern>& patterns,
                               const mining::SequenceDB& db, const mining::LearnerContexts& contexts,
                               double min_confidence) {
  std::vector<Rule> rules;
  for (const auto& p : patterns) {
    if (p.sequence.size() < 2) continue;
    Sequence antecedent(p.sequence.begin(), p.sequence.end() - 1);
    auto full = mining::pattern_support(p.context, p.sequence, db, contexts);
    auto base = mining::pattern_support(p.context, antecedent, db, contexts);
    if (base.support == 0) continue;
    double confidence = static_cast<double>(full.support) / static_cast<double>(base.support);
    if (confidence < min_confidence) continue;
    rules.push_back({p.context, std::move(antecedent), p.sequence.back(), confidence, full.support});
  }
  std::sort(rules.begin(), rules.end(), rule_less);
  return rules;
}

std::string_view to_string(State s) {
  switch (s) {
    case State::Proposed: return "proposed";
    case State::Approved: return "approved";
    case State::Rejected: return "rejected";
    case State::Amended: return "amended";
    case State::Delivered: return "delivered";
  }
  return "proposed";
}

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::Approve: return "approve";
    case Decision::Reject: return "reject";
    case Decision::Amend: return "amend";
    case Decision::Deliver: return "deliver";
  }
  return "approve";
}

std::optional<State> parse_state(std::string_view s) {
  for (State st : {State::Proposed, State::Approved, State::Rejected, State::Amended, State::Delivered})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

std::optional<Decision> parse_decision(std::string_view s) {
  for (Decision d : {Decision::Approve, Decision::Reject, Decision::Amend, Decision::Deliver})
    if (to_string(d) == s) return d;
  return std::nullopt;
}

std::optional<State> next_state(State from, Decision d) {
  switch (from) {
    case State::Proposed:
      if (d == Decision::Approve) return State::Approved;
      if (d == Decision::Reject) return State::Rejected;
      if (d == Decision::Amend) return State::Amended;
      return std::nullopt;
    case State::Amended:
      if (d == Decision::Approve) return State::Approved;
      return std::nullopt;
    case State::Approved:
      if (d == Decision::Deliver) return State::Delivered;
      return std::nullopt;
    case State::Rejected:
    case State::Delivered:
      return std::nullopt;
  }
  return std::nullopt;
}

bool is_terminal(State s) { return s == State::Rejected || s == State::Delivered; }

json to_json(const Recommendation& r) {
  json history = json::array();
  for (const auto& t : r.history) history.push_back({{"state", to_string(t.state)}, {"at", format_instant(t.at)}});
  json j = {{"id", r.id},
            {"learner", r.learner_id},
            {"consequent", mining::to_string(r.consequent)},
            {"resources", r.resources},
            {"rule", to_json(r.rule)},
            {"explanation", explain(r.rule)},
            {"state", to_string(r.state)},
            {"note", r.note},
            {"history", history}};
  j["original_consequent"] = r.original_consequent ? json(mining::to_string(*r.original_consequent)) : json();
  j["rating"] = r.rating ? json(*r.rating) : json();
  return j;
}

Recommendation recommendation_from_json(const json& j) {
  Recommendation r;
  r.id = j.at("id");
  r.learner_id = j.at("learner");
  r.consequent = item_from(j.at("consequent"));
  r.resources = j.at("resources").get<std::vector<std::string>>();
  r.rule = rule_from_json(j.at("rule"));
  if (!j.at("original_consequent").is_null()) r.original_consequent = item_from(j.at("original_consequent"));
  if (!j.at("rating").is_null()) r.rating = j.at("rating").get<int>();
  r.note = j.at("note");
  r.state = parse_state(j.at("state").get<std::string>()).value();
  for (const auto& t : j.at("history"))
    r.history.push_back({parse_state(t.at("state").get<std::string>()).value(),
                         parse_instant(t.at("at").get<std::string>()).value()});
  return r;
}

RecommendationBook::RecommendationBook(std::filesystem::path file, Clock clock)
    : file_(std::move(file)), clock_(std::move(clock)) {
  if (file_.empty()) return;
  std::ifstream in(file_);
  if (!in) return;
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Storage, file_.string(), "corrupt recommendation file");
  next_id_ = j.value("next_id", std::size_t{1});
  for (const auto& r : j.at("items")) items_.push_back(recommendation_from_json(r));
}

void RecommendationBook::save_locked() const {
  if (file_.empty()) return;
  json items = json::array();
  for (const auto& r : items_) items.push_back(to_json(r));
  auto tmp = file_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << json{{"next_id", next_id_}, {"items", items}}.dump(1) << "\n";
    if (!out) throw Error(ErrorCode::Storage, file_.string(), "failed to save recommendations");
  }
  std::filesystem::rename(tmp, file_);
}

std::vector<Recommendation> RecommendationBook::propose(
    const std::string& learner_id, const std::vector<Rule>& rules,
    const std::set<std::string>& learner_context, const std::vector<mining::Session>& recent_sessions,
    const mining::ResourceAttributes& attributes) {
  std::vector<Recommendation> created;
  std::lock_guard lock(mutex_);
  for (const auto& rule : rules) {
    bool context_ok = std::all_of(rule.context.begin(), rule.context.end(),
                                  [&](const std::string& l) { return learner_context.contains(l); });
    if (!context_ok) continue;
    Sequence full = rule.antecedent;
    full.push_back(rule.consequent);
    bool antecedent_seen = false, satisfied = false;
    for (const auto& s : recent_sessions) {
      antecedent_seen = antecedent_seen || mining::occurs_in(rule.antecedent, s, attributes);
      satisfied = satisfied || mining::occurs_in(full, s, attributes);
    }
    if (!antecedent_seen || satisfied) continue;
    bool pending = std::any_of(items_.begin(), items_.end(), [&](const Recommendation& r) {
      return r.learner_id == learner_id && r.consequent == rule.consequent && !is_terminal(r.state);
    });
    if (pending) continue;

    Recommendation r;
    r.id = "rec-" + std::to_string(next_id_++);
    r.learner_id = learner_id;
    r.consequent = rule.consequent;
    for (const auto& [res, attrs] : attributes)
      if (rule.consequent.matches(res, attributes)) r.resources.push_back(res);
    r.rule = rule;
    r.history.push_back({State::Proposed, clock_()});
    items_.push_back(r);
    created.push_back(std::move(r));
  }
  if (!created.empty()) save_locked();
  return created;
}

Recommendation RecommendationBook::review(const std::string& id, const ReviewRequest& req) {
  if (req.rating && (*req.rating < 1 || *req.rating > 5))
    throw Error(ErrorCode::Validation, "rating", "rating must be between 1 and 5");
  if (req.decision == Decision::Amend && (!req.amended_consequent || req.amended_consequent->text.empty()))
    throw Error(ErrorCode::Validation, "consequent", "amend needs a non-empty consequent");

  std::lock_guard lock(mutex_);
  auto it = std::find_if(items_.begin(), items_.end(), [&](const Recommendation& r) { return r.id == id; });
  if (it == items_.end())
    throw Error(ErrorCode::UnknownRecommendation, id, "unknown recommendation '" + id + "'");
  auto next = next_state(it->state, req.decision);
  if (!next)
    throw Error(ErrorCode::IllegalTransition, std::string(to_string(it->state)),
                "cannot " + std::string(to_string(req.decision)) + " a recommendation in state " +
                    std::string(to_string(it->state)));
  if (req.decision == Decision::Amend) {
    if (!it->original_consequent) it->original_consequent = it->consequent;
    it->consequent = *req.amended_consequent;
    if (it->consequent.kind == mining::ItemKind::Id)
      it->resources = {it->consequent.text};
    else
      it->resources = req.amended_resources;
  }
  if (req.rating) it->rating = req.rating;
  if (req.note) it->note = *req.note;
  it->state = *next;
  it->history.push_back({*next, clock_()});
  save_locked();
  return *it;
}

std::optional<Recommendation> RecommendationBook::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  for (const auto& r : items_)
    if (r.id == id) return r;
  return std::nullopt;
}

std::vector<Recommendation> RecommendationBook::list(const std::optional<std::string>& learner,
                                                     const std::optional<State>& state) const {
  std::lock_guard lock(mutex_);
  std::vector<Recommendation> out;
  for (const auto& r : items_)
    if ((!learner || r.learner_id == *learner) && (!state || r.state == *state)) out.push_back(r);
  return out;
}

std::vector<Recommendation> RecommendationBook::delivered(const std::string& learner) const {
  return list(learner, State::Delivered);
}

}  // namespace metal::recommend
