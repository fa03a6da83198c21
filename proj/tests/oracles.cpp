#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <set>

namespace oracle {

using metal::mining::Context;
using metal::mining::Item;
using metal::mining::ItemKind;
using metal::mining::Sequence;
using metal::mining::Session;

namespace {

bool item_hits(const Item& item, const std::string& resource, const SequenceDB& db) {
  if (item.kind == ItemKind::Id) return item.text == resource;
  auto it = db.attributes.find(resource);
  if (it == db.attributes.end()) return false;
  return std::find(it->second.begin(), it->second.end(), item.text) != it->second.end();
}

// Tries every embedding position, not just the leftmost one.
bool embeds(const Sequence& seq, std::size_t i, const Session& s, std::size_t from, const SequenceDB& db) {
  if (i == seq.size()) return true;
  for (std::size_t p = from; p < s.size(); ++p)
    if (item_hits(seq[i], s[p].resource_id, db) && embeds(seq, i + 1, s, p + 1, db)) return true;
  return false;
}

std::vector<std::string> learners_of(const SequenceDB& db, const LearnerContexts& contexts) {
  std::set<std::string> all;
  for (const auto& [id, c] : contexts) all.insert(id);
  for (const auto& [id, s] : db.sessions) all.insert(id);
  return {all.begin(), all.end()};
}

bool has_context(const std::string& learner, const Context& ctx, const LearnerContexts& contexts) {
  auto it = contexts.find(learner);
  for (const auto& label : ctx)
    if (it == contexts.end() || !it->second.count(label)) return false;
  return true;
}

struct Candidate {
  Context context;
  Sequence sequence;
  std::vector<std::string> supporters;
  std::size_t group = 0;
};

}  // namespace

std::size_t brute_support(const Context& ctx, const Sequence& seq, const SequenceDB& db,
                          const LearnerContexts& contexts) {
  std::size_t n = 0;
  for (const auto& l : learners_of(db, contexts)) {
    if (!has_context(l, ctx, contexts)) continue;
    auto it = db.sessions.find(l);
    if (it == db.sessions.end()) continue;
    for (const auto& s : it->second)
      if (embeds(seq, 0, s, 0, db)) {
        ++n;
        break;
      }
  }
  return n;
}

std::vector<MultiSourcePattern> mine_exhaustive(const SequenceDB& db, const LearnerContexts& contexts,
                                                const MiningParams& params) {
  const auto learners = learners_of(db, contexts);

  std::set<std::string> label_set;
  for (const auto& [id, c] : contexts) label_set.insert(c.begin(), c.end());
  const std::vector<std::string> labels(label_set.begin(), label_set.end());

  std::set<Item> item_set;
  for (const auto& [r, attrs] : db.attributes) {
    item_set.insert(Item::id(r));
    for (const auto& a : attrs) item_set.insert(Item::attr(a));
  }
  const std::vector<Item> items(item_set.begin(), item_set.end());

  // Every label subset up to K, by bitmask.
  std::vector<Context> all_contexts;
  for (std::uint32_t mask = 0; mask < (1u << labels.size()); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > params.max_context) continue;
    Context c;
    for (std::size_t b = 0; b < labels.size(); ++b)
      if (mask & (1u << b)) c.push_back(labels[b]);
    all_contexts.push_back(c);
  }

  // Every sequence of length 1..L over the item alphabet.
  std::vector<Sequence> all_sequences;
  std::function<void(Sequence&)> gen = [&](Sequence& s) {
    if (!s.empty()) all_sequences.push_back(s);
    if (s.size() == params.max_length) return;
    for (const auto& it : items) {
      s.push_back(it);
      gen(s);
      s.pop_back();
    }
  };
  Sequence scratch;
  gen(scratch);

  std::vector<Candidate> frequent;
  for (const auto& ctx : all_contexts) {
    std::vector<std::string> group;
    for (const auto& l : learners)
      if (has_context(l, ctx, contexts)) group.push_back(l);
    if (group.empty() || group.size() < params.min_group) continue;
    for (const auto& seq : all_sequences) {
      std::vector<std::string> sup;
      for (const auto& l : group) {
        auto it = db.sessions.find(l);
        if (it == db.sessions.end()) continue;
        for (const auto& s : it->second)
          if (embeds(seq, 0, s, 0, db)) {
            sup.push_back(l);
            break;
          }
      }
      // support / group >= sigma, cross-multiplied.
      if (sup.empty() || static_cast<double>(sup.size()) < params.min_support * static_cast<double>(group.size()))
        continue;
      frequent.push_back({ctx, seq, sup, group.size()});
    }
  }

  std::map<std::pair<Context, Sequence>, const Candidate*> by_key;
  for (const auto& c : frequent) by_key[{c.context, c.sequence}] = &c;

  auto specialized_twin = [&](const Candidate& c) {
    auto same = [&](const Context& ctx, const Sequence& seq) {
      auto it = by_key.find({ctx, seq});
      return it != by_key.end() && it->second->supporters == c.supporters;
    };
    if (c.context.size() + 1 <= params.max_context)
      for (const auto& l : labels) {
        if (std::find(c.context.begin(), c.context.end(), l) != c.context.end()) continue;
        Context ctx = c.context;
        ctx.push_back(l);
        std::sort(ctx.begin(), ctx.end());
        if (same(ctx, c.sequence)) return true;
      }
    for (std::size_t i = 0; i < c.sequence.size(); ++i) {
      if (c.sequence[i].kind != ItemKind::Attr) continue;
      for (const auto& [r, attrs] : db.attributes) {
        if (std::find(attrs.begin(), attrs.end(), c.sequence[i].text) == attrs.end()) continue;
        Sequence seq = c.sequence;
        seq[i] = Item::id(r);
        if (same(c.context, seq)) return true;
      }
    }
    return false;
  };

  std::vector<MultiSourcePattern> out;
  for (const auto& c : frequent)
    if (!specialized_twin(c)) out.push_back({c.context, c.sequence, c.supporters.size(), c.group});
  std::sort(out.begin(), out.end(), [](const MultiSourcePattern& a, const MultiSourcePattern& b) {
    return std::tie(a.context, a.sequence) < std::tie(b.context, b.sequence);
  });
  return out;
}

MiningInstance random_instance(std::mt19937_64& rng) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  static const std::vector<std::string> attr_pool = {"subject=Mathematics", "subject=History",
                                                     "resource-type=video", "resource-type=quiz"};
  static const std::vector<std::string> label_pool = {"age=14", "age=15", "sex=F", "sex=M", "class=C1"};

  MiningInstance in;
  const std::size_t n_attrs = pick(1, 4);
  const std::size_t n_resources = pick(1, 6);
  std::vector<std::string> resources;
  for (std::size_t r = 0; r < n_resources; ++r) {
    std::string id = "R-" + std::to_string(r + 1);
    resources.push_back(id);
    auto& attrs = in.db.attributes[id];
    for (std::size_t a = 0; a < n_attrs; ++a)
      if (pick(0, 2) == 0) attrs.insert(attr_pool[a]);
  }

  const std::size_t n_learners = pick(1, 8);
  for (std::size_t l = 0; l < n_learners; ++l) {
    std::string id = "L" + std::to_string(l + 1);
    auto& ctx = in.contexts[id];
    for (const auto& label : label_pool)
      if (pick(0, 1) == 0) ctx.insert(label);
    const std::size_t n_events = pick(0, 12);
    if (n_events == 0) continue;
    std::vector<Session> sessions(1);
    metal::Instant t{};
    for (std::size_t e = 0; e < n_events; ++e) {
      if (!sessions.back().empty() && pick(0, 3) == 0) sessions.emplace_back();
      t += std::chrono::minutes(1);
      sessions.back().push_back({resources[pick(0, n_resources - 1)], t, id + "-" + std::to_string(e)});
    }
    in.db.sessions[id] = sessions;
  }

  in.params.min_group = pick(1, 3);
  static const double sigmas[] = {0.5, 0.75, 1.0};
  in.params.min_support = sigmas[pick(0, 2)];
  in.params.max_length = pick(1, 3);
  in.params.max_context = pick(0, 3);
  return in;
}

MiningInstance d1() {
  MiningInstance in;
  auto& a = in.db.attributes;
  for (const char* r : {"R-15", "R-42", "R-77", "R-88"}) a[r] = {"subject=Mathematics"};
  a["R-80"] = {"subject=History"};
  in.contexts["L1"] = {"age=14", "sex=M", "Mathematics-grade-9"};
  in.contexts["L2"] = {"age=14", "sex=M", "Mathematics-grade-9"};
  in.contexts["L3"] = {"age=15", "sex=F", "History-grade-9"};
  auto session = [](const std::string& learner, std::vector<std::string> rs) {
    Session s;
    metal::Instant t{};
    for (const auto& r : rs) {
      t += std::chrono::minutes(5);
      s.push_back({r, t, learner + "-" + r});
    }
    return s;
  };
  in.db.sessions["L1"] = {session("L1", {"R-15", "R-42", "R-77"})};
  in.db.sessions["L2"] = {session("L2", {"R-15", "R-42", "R-88"})};
  in.db.sessions["L3"] = {session("L3", {"R-80"})};
  in.params = {2, 1.0, 3, 3, 1'000'000};
  return in;
}

double f_oracle(const std::vector<double>& values, const std::vector<int>& groups) {
  std::map<int, std::pair<double, double>> sums;  // group -> (sum, count)
  double total = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sums[groups[i]].first += values[i];
    sums[groups[i]].second += 1;
    total += values[i];
  }
  const double n = static_cast<double>(values.size());
  const double k = static_cast<double>(sums.size());
  const double grand = total / n;
  double ssb = 0, ssw = 0;
  for (const auto& [g, s] : sums) ssb += s.second * std::pow(s.first / s.second - grand, 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& s = sums[groups[i]];
    ssw += std::pow(values[i] - s.first / s.second, 2);
  }
  if (ssw == 0) return ssb > 0 ? INFINITY : 0.0;
  return (ssb / (k - 1)) / (ssw / (n - k));
}

double rho_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  auto rank = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      r[i] = 1.0 + static_cast<double>(std::count_if(v.begin(), v.end(), [&](double w) { return w < v[i]; }));
    return r;
  };
  auto rx = rank(x), ry = rank(y);
  const double n = static_cast<double>(x.size());
  double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

std::vector<double> turning_angles(const std::vector<std::pair<double, double>>& pts) {
  std::vector<double> headings;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    double dx = pts[i].first - pts[i - 1].first, dy = pts[i].second - pts[i - 1].second;
    if (dx == 0 && dy == 0) continue;
    headings.push_back(std::atan2(dy, dx));
  }
  std::vector<double> out;
  for (std::size_t i = 1; i < headings.size(); ++i) {
    double d = std::fmod(std::abs(headings[i] - headings[i - 1]), 2 * std::numbers::pi);
    out.push_back(d > std::numbers::pi ? 2 * std::numbers::pi - d : d);
  }
  return out;
}

double path_length(const std::vector<std::pair<double, double>>& pts) {
  double s = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    s += std::sqrt(std::pow(pts[i].first - pts[i - 1].first, 2) + std::pow(pts[i].second - pts[i - 1].second, 2));
  return s;
}

}  // namespace oracle
