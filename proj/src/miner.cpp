#include "metal/miner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <map>
#include <string_view>
#include <unordered_map>

#include "metal/error.hpp"

namespace metal::mining {

void validate(const MiningParams& p) {
  if (p.min_group < 1) throw Error(ErrorCode::Validation, "min_group", "min_group must be >= 1");
  if (!(p.min_support > 0.0 && p.min_support <= 1.0))
    throw Error(ErrorCode::Validation, "min_support", "min_support must lie in (0, 1]");
  if (p.max_length < 1) throw Error(ErrorCode::Validation, "max_length", "max_length must be >= 1");
  if (p.candidate_cap < 1)
    throw Error(ErrorCode::Validation, "candidate_cap", "candidate_cap must be >= 1");
}

namespace {

using Code = std::uint32_t;
using Codes = std::vector<Code>;

// Integer-coded view of the input. Label and item codes are assigned in
// canonical order so comparing code vectors compares the strings.
struct Encoded {
  std::vector<std::string> learners;
  std::vector<std::string> labels;
  std::vector<Codes> postings;  // label -> learners holding it
  std::vector<Item> items;
  std::vector<Codes> specializations;  // attr item -> id items carrying it
  // learner -> sessions -> events -> item codes
  std::vector<std::vector<std::vector<Codes>>> sessions;
};

Encoded encode(const SequenceDB& db, const LearnerContexts& contexts) {
  Encoded enc;
  auto universe = learner_universe(db, contexts);
  enc.learners.assign(universe.begin(), universe.end());

  std::set<std::string> labels;
  for (const auto& [id, ctx] : contexts) labels.insert(ctx.begin(), ctx.end());
  enc.labels.assign(labels.begin(), labels.end());
  enc.postings.resize(enc.labels.size());
  for (Code l = 0; l < enc.learners.size(); ++l) {
    auto it = contexts.find(enc.learners[l]);
    if (it == contexts.end()) continue;
    for (const auto& label : it->second) {
      auto pos = std::lower_bound(enc.labels.begin(), enc.labels.end(), label) - enc.labels.begin();
      enc.postings[pos].push_back(l);
    }
  }

  std::set<Item> items;
  for (const auto& [learner, sessions] : db.sessions)
    for (const auto& s : sessions)
      for (const auto& e : s) {
        items.insert(Item::id(e.resource_id));
        if (auto a = db.attributes.find(e.resource_id); a != db.attributes.end())
          for (const auto& attr : a->second) items.insert(Item::attr(attr));
      }
  enc.items.assign(items.begin(), items.end());
  auto code_of = [&](const Item& it) {
    return static_cast<Code>(std::lower_bound(enc.items.begin(), enc.items.end(), it) - enc.items.begin());
  };

  enc.specializations.resize(enc.items.size());
  for (Code c = 0; c < enc.items.size(); ++c) {
    if (enc.items[c].kind != ItemKind::Id) continue;
    if (auto a = db.attributes.find(enc.items[c].text); a != db.attributes.end())
      for (const auto& attr : a->second) enc.specializations[code_of(Item::attr(attr))].push_back(c);
  }

  enc.sessions.resize(enc.learners.size());
  for (Code l = 0; l < enc.learners.size(); ++l) {
    auto it = db.sessions.find(enc.learners[l]);
    if (it == db.sessions.end()) continue;
    for (const auto& s : it->second) {
      std::vector<Codes> events;
      for (const auto& e : s) {
        Codes ev{code_of(Item::id(e.resource_id))};
        if (auto a = db.attributes.find(e.resource_id); a != db.attributes.end())
          for (const auto& attr : a->second) ev.push_back(code_of(Item::attr(attr)));
        std::sort(ev.begin(), ev.end());
        events.push_back(std::move(ev));
      }
      enc.sessions[l].push_back(std::move(events));
    }
  }
  return enc;
}

Codes intersect(const Codes& a, const Codes& b) {
  Codes out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

struct Found {
  Codes sequence;
  Codes supporters;
};

struct ContextResult {
  Codes context;
  Codes group;
  std::vector<Found> patterns;
};

struct Projection {
  Code learner;
  Code session;
  Code pos;  // first event not yet consumed
};

class Miner {
 public:
  Miner(const Encoded& enc, const MiningParams& params, std::atomic<std::size_t>& candidates)
      : enc_(enc), params_(params), candidates_(candidates) {}

  std::vector<ContextResult> contexts() {
    std::vector<ContextResult> out;
    Codes all(enc_.learners.size());
    for (Code i = 0; i < all.size(); ++i) all[i] = i;
    if (all.size() >= params_.min_group) {
      Codes ctx;
      enumerate(0, ctx, all, out);
    }
    return out;
  }

  // Returns false once the candidate cap is exceeded.
  bool grow(ContextResult& r) {
    std::vector<Projection> proj;
    for (Code l : r.group)
      for (Code s = 0; s < enc_.sessions[l].size(); ++s) proj.push_back({l, s, 0});
    Codes prefix;
    return extend(r, proj, prefix);
  }

 private:
  void enumerate(Code start, Codes& ctx, const Codes& group, std::vector<ContextResult>& out) {
    ++candidates_;
    out.push_back({ctx, group, {}});
    if (ctx.size() >= params_.max_context) return;
    for (Code l = start; l < enc_.labels.size(); ++l) {
      Codes g = intersect(group, enc_.postings[l]);
      if (g.size() < params_.min_group) continue;
      ctx.push_back(l);
      enumerate(l + 1, ctx, g, out);
      ctx.pop_back();
    }
  }

  bool extend(ContextResult& r, const std::vector<Projection>& proj, Codes& prefix) {
    const std::size_t n_items = enc_.items.size();
    std::vector<std::size_t> count(n_items, 0);
    std::vector<Code> last(n_items, std::numeric_limits<Code>::max());
    for (const auto& p : proj) {
      const auto& events = enc_.sessions[p.learner][p.session];
      for (std::size_t e = p.pos; e < events.size(); ++e)
        for (Code item : events[e])
          if (last[item] != p.learner) {
            last[item] = p.learner;
            ++count[item];
          }
    }

    // Source priority: concrete ids are grown before attribute items.
    std::vector<Code> order;
    for (Code c = 0; c < n_items; ++c)
      if (meets_support(count[c], r.group.size(), params_.min_support)) order.push_back(c);
    std::stable_partition(order.begin(), order.end(),
                          [&](Code c) { return enc_.items[c].kind == ItemKind::Id; });

    for (Code item : order) {
      if (candidates_.fetch_add(1) + 1 > params_.candidate_cap) return false;
      std::vector<Projection> next;
      Codes supporters;
      for (const auto& p : proj) {
        const auto& events = enc_.sessions[p.learner][p.session];
        for (std::size_t e = p.pos; e < events.size(); ++e) {
          if (std::binary_search(events[e].begin(), events[e].end(), item)) {
            next.push_back({p.learner, p.session, static_cast<Code>(e + 1)});
            if (supporters.empty() || supporters.back() != p.learner) supporters.push_back(p.learner);
            break;
          }
        }
      }
      prefix.push_back(item);
      r.patterns.push_back({prefix, supporters});
      if (prefix.size() < params_.max_length && !extend(r, next, prefix)) return false;
      prefix.pop_back();
    }
    return true;
  }

  const Encoded& enc_;
  const MiningParams& params_;
  std::atomic<std::size_t>& candidates_;
};

std::string key_of(const Codes& ctx, const Codes& seq) {
  std::string key;
  key.reserve((ctx.size() + seq.size() + 1) * sizeof(Code));
  auto put = [&](Code c) { key.append(reinterpret_cast<const char*>(&c), sizeof c); };
  put(static_cast<Code>(ctx.size()));
  for (Code c : ctx) put(c);
  for (Code c : seq) put(c);
  return key;
}

bool is_redundant(const Encoded& enc, const MiningParams& params, const ContextResult& r,
                  const Found& f, const std::unordered_map<std::string, const Codes*>& index) {
  auto same = [&](const Codes& ctx, const Codes& seq) {
    auto it = index.find(key_of(ctx, seq));
    return it != index.end() && *it->second == f.supporters;
  };
  if (r.context.size() + 1 <= params.max_context) {
    for (Code l = 0; l < enc.labels.size(); ++l) {
      if (std::binary_search(r.context.begin(), r.context.end(), l)) continue;
      Codes ctx = r.context;
      ctx.insert(std::upper_bound(ctx.begin(), ctx.end(), l), l);
      if (same(ctx, f.sequence)) return true;
    }
  }
  for (std::size_t i = 0; i < f.sequence.size(); ++i) {
    for (Code id : enc.specializations[f.sequence[i]]) {
      Codes seq = f.sequence;
      seq[i] = id;
      if (same(r.context, seq)) return true;
    }
  }
  return false;
}

std::vector<MultiSourcePattern> run(const SequenceDB& db, const LearnerContexts& contexts,
                                    const MiningParams& params, bool parallel) {
  validate(params);
  const Encoded enc = encode(db, contexts);
  std::atomic<std::size_t> candidates{0};
  Miner miner(enc, params, candidates);

  std::vector<ContextResult> results = miner.contexts();
  if (candidates.load() > params.candidate_cap)
    throw Error(ErrorCode::LimitExceeded, "candidate_cap",
                "more than " + std::to_string(params.candidate_cap) + " candidate patterns");

  std::atomic<bool> exceeded{false};
  const long n = static_cast<long>(results.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long i = 0; i < n; ++i) {
    if (exceeded.load(std::memory_order_relaxed)) continue;
    if (!miner.grow(results[i])) exceeded = true;
  }
  if (exceeded)
    throw Error(ErrorCode::LimitExceeded, "candidate_cap",
                "more than " + std::to_string(params.candidate_cap) + " candidate patterns");

  std::unordered_map<std::string, const Codes*> index;
  for (const auto& r : results)
    for (const auto& f : r.patterns) index.emplace(key_of(r.context, f.sequence), &f.supporters);

  std::vector<std::vector<MultiSourcePattern>> kept(results.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long i = 0; i < n; ++i) {
    const auto& r = results[i];
    for (const auto& f : r.patterns) {
      if (is_redundant(enc, params, r, f, index)) continue;
      MultiSourcePattern p;
      for (Code l : r.context) p.context.push_back(enc.labels[l]);
      for (Code c : f.sequence) p.sequence.push_back(enc.items[c]);
      p.support = f.supporters.size();
      p.group = r.group.size();
      kept[i].push_back(std::move(p));
    }
  }

  std::vector<MultiSourcePattern> out;
  for (auto& k : kept) std::move(k.begin(), k.end(), std::back_inserter(out));
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

}  // namespace

std::vector<MultiSourcePattern> mine_patterns(const SequenceDB& db, const LearnerContexts& contexts,
                                              const MiningParams& params) {
  return run(db, contexts, params, true);
}

std::vector<MultiSourcePattern> mine_patterns_serial(const SequenceDB& db,
                                                     const LearnerContexts& contexts,
                                                     const MiningParams& params) {
  return run(db, contexts, params, false);
}

}  // namespace metal::mining
