#include "metal/pattern.hpp"

#include <algorithm>

namespace metal::mining {

bool Item::matches(const std::string& resource, const ResourceAttributes& attrs) const {
  if (kind == ItemKind::Id) return resource == text;
  auto it = attrs.find(resource);
  return it != attrs.end() && it->second.contains(text);
}

std::string to_string(const Item& item) {
  return (item.kind == ItemKind::Id ? "id(" : "attr(") + item.text + ")";
}

std::optional<Item> parse_item(std::string_view t) {
  if (t.size() > 4 && t.substr(0, 3) == "id(" && t.back() == ')')
    return Item::id(std::string(t.substr(3, t.size() - 4)));
  if (t.size() > 6 && t.substr(0, 5) == "attr(" && t.back() == ')')
    return Item::attr(std::string(t.substr(5, t.size() - 6)));
  return std::nullopt;
}

bool canonical_less(const MultiSourcePattern& a, const MultiSourcePattern& b) {
  if (a.context != b.context) return a.context < b.context;
  return a.sequence < b.sequence;
}

nlohmann::json to_json(const MultiSourcePattern& p) {
  nlohmann::json seq = nlohmann::json::array();
  for (const auto& i : p.sequence) seq.push_back(to_string(i));
  return {{"context", p.context}, {"sequence", seq}, {"support", p.support}, {"group", p.group}};
}

MultiSourcePattern pattern_from_json(const nlohmann::json& j) {
  MultiSourcePattern p;
  p.context = j.at("context").get<Context>();
  for (const auto& s : j.at("sequence")) p.sequence.push_back(parse_item(s.get<std::string>()).value());
  p.support = j.at("support");
  p.group = j.at("group");
  return p;
}

std::set<std::string> learner_universe(const SequenceDB& db, const LearnerContexts& contexts) {
  std::set<std::string> out;
  for (const auto& [id, c] : contexts) out.insert(id);
  for (const auto& [id, s] : db.sessions) out.insert(id);
  return out;
}

bool occurs_in(const Sequence& sequence, const Session& session, const ResourceAttributes& attrs) {
  // Leftmost matching is optimal for subsequence containment.
  std::size_t next = 0;
  for (const auto& e : session) {
    if (next == sequence.size()) break;
    if (sequence[next].matches(e.resource_id, attrs)) ++next;
  }
  return next == sequence.size();
}

namespace {

bool context_matches(const Context& pattern, const LearnerContexts& contexts, const std::string& learner) {
  auto it = contexts.find(learner);
  if (it == contexts.end()) return pattern.empty();
  return std::all_of(pattern.begin(), pattern.end(),
                     [&](const std::string& l) { return it->second.contains(l); });
}

}  // namespace

std::vector<std::string> supporting_learners(const Context& context, const Sequence& sequence,
                                             const SequenceDB& db, const LearnerContexts& contexts) {
  std::vector<std::string> out;
  for (const auto& learner : learner_universe(db, contexts)) {
    if (!context_matches(context, contexts, learner)) continue;
    auto it = db.sessions.find(learner);
    if (it == db.sessions.end()) continue;
    if (std::any_of(it->second.begin(), it->second.end(),
                    [&](const Session& s) { return occurs_in(sequence, s, db.attributes); }))
      out.push_back(learner);
  }
  return out;
}

Support pattern_support(const Context& context, const Sequence& sequence, const SequenceDB& db,
                        const LearnerContexts& contexts) {
  Support s;
  for (const auto& learner : learner_universe(db, contexts)) {
    if (!context_matches(context, contexts, learner)) continue;
    ++s.group;
    auto it = db.sessions.find(learner);
    if (it == db.sessions.end()) continue;
    if (std::any_of(it->second.begin(), it->second.end(),
                    [&](const Session& ses) { return occurs_in(sequence, ses, db.attributes); }))
      ++s.support;
  }
  return s;
}

bool meets_support(std::size_t support, std::size_t group, double min_support) {
  return group > 0 && static_cast<double>(support) >= min_support * static_cast<double>(group);
}

}  // namespace metal::mining
