// metal: store administration, batch analytics and the HTTP server.

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "metal/config.hpp"
#include "metal/gaze.hpp"
#include "metal/http_api.hpp"
#include "metal/indicators.hpp"
#include "metal/miner.hpp"
#include "metal/roster_service.hpp"
#include "metal/store.hpp"

namespace {

using nlohmann::json;
using namespace metal;

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

void log(std::string_view level, std::string_view event, json fields = json::object()) {
  fields["level"] = level;
  fields["event"] = event;
  fields["at"] = format_instant(std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now()));
  std::cerr << fields.dump() << '\n';
}

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::ostringstream s;
    s << std::cin.rdbuf();
    return s.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Validation, path, "cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Duration and date options arrive as text and are converted after parsing.
struct RawOptions {
  std::string session_gap = "30m";
  std::string lookback = "30d";
  std::string reference;
};

Millis duration_or_throw(const std::string& text, const std::string& flag) {
  auto d = parse_duration(text);
  if (!d || d->count() <= 0) throw CLI::ValidationError(flag, "expected a positive duration like 30m, 2h or 7d");
  return *d;
}

// Config-file values become option defaults, so environment variables
// (applied by CLI11 only to options without command-line input) and flags
// both override them.
void apply_config_file(CLI::App& app, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  for (const auto& item : CLI::ConfigTOML().from_config(in)) {
    CLI::App* scope = &app;
    for (const auto& parent : item.parents) scope = scope->get_subcommand(parent);
    CLI::Option* opt = scope->get_option_no_throw("--" + item.name);
    if (!opt) throw CLI::ConfigError::Extras(item.fullname());
    std::string value;
    for (const auto& v : item.inputs) value += (value.empty() ? "" : " ") + v;
    opt->default_val(value);
  }
}

std::string find_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string_view a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.starts_with("--config=")) return std::string(a.substr(9));
  }
  if (const char* env = std::getenv("METAL_CONFIG")) return env;
  return {};
}

int print_domain_error(const Error& e) {
  json body = {{"error", to_string(e.code())}, {"subject", e.subject()}, {"message", e.what()}};
  log("error", "failed", body);
  std::cout << body.dump() << '\n';
  return kDomainError;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  RawOptions raw;
  CLI::App app{"METAL learning record store"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "Config file (TOML key = value, keys are flag names)")->envname("METAL_CONFIG");
  auto opt = [&](const std::string& name, auto& target, const std::string& help) {
    std::string env = "METAL_" + name;
    for (auto& c : env) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return app.add_option("--" + name, target, help)->envname(env)->capture_default_str();
  };
  opt("store", cfg.store, "Store directory; omit for a memory-only store");
  opt("host", cfg.host, "Listen address for serve");
  opt("port", cfg.port, "Listen port for serve")->check(CLI::Range(1, 65535));
  opt("token", cfg.token, "Bearer token required by serve; empty disables auth");
  opt("min-group", cfg.miner.min_group, "Minimum context-group size")->check(CLI::PositiveNumber);
  opt("min-support", cfg.miner.min_support, "Minimum support fraction in (0,1]");
  opt("max-length", cfg.miner.max_length, "Longest mined sequence")->check(CLI::PositiveNumber);
  opt("max-context", cfg.miner.max_context, "Largest mined context");
  opt("candidate-cap", cfg.miner.candidate_cap, "Abort mining beyond this many candidates")->check(CLI::PositiveNumber);
  opt("session-gap", raw.session_gap, "Inactivity gap that splits sessions");
  opt("min-confidence", cfg.min_confidence, "Minimum rule confidence")->check(CLI::Range(0.0, 1.0));
  opt("lookback", raw.lookback, "Recent-session window for recommendations");
  opt("permutations", cfg.permutations, "Permutation count M")->check(CLI::PositiveNumber);
  opt("seed", cfg.seed, "Permutation seed");
  opt("reference-date", raw.reference, "Date at which learner ages are computed (YYYY-MM-DD); default today");

  auto* serve = app.add_subcommand("serve", "Run the HTTP services over the store");

  std::string roster_dir, roster_bundle;
  auto* import_roster = app.add_subcommand("import-roster", "Import a CSV roster bundle atomically");
  auto* dir_opt = import_roster->add_option("--dir", roster_dir, "Directory of <entity>.csv files")->check(CLI::ExistingDirectory);
  auto* bundle_opt = import_roster->add_option("--bundle", roster_bundle, "JSON bundle {entity: csv text}");
  dir_opt->excludes(bundle_opt);

  std::string statements_file;
  auto* import_statements = app.add_subcommand("import-statements", "Store a batch of xAPI statements atomically");
  import_statements->add_option("file", statements_file, "JSON array or JSON lines; - for stdin")->required();

  std::string mine_bundle;
  bool mine_rules = false;
  auto* mine = app.add_subcommand("mine", "Mine multi-source patterns, one JSON record per line");
  mine->add_option("--bundle", mine_bundle, "Mine an exported bundle (with activities) instead of the store");
  mine->add_flag("--rules", mine_rules, "Emit derived rules instead of patterns");

  std::string ind_learner, ind_class, ind_from, ind_to, ind_bucket = "1d";
  auto* ind = app.add_subcommand("indicators", "Indicator report for a learner or a class");
  auto* learner_opt = ind->add_option("--learner", ind_learner, "Learner id");
  auto* class_opt = ind->add_option("--class", ind_class, "Class id");
  learner_opt->excludes(class_opt);
  ind->add_option("--from", ind_from, "Window start (instant or date)")->required();
  ind->add_option("--to", ind_to, "Window end, exclusive (instant or date)")->required();
  ind->add_option("--bucket", ind_bucket, "Series bucket width")->capture_default_str();

  std::string gaze_file;
  auto* gaze = app.add_subcommand("gaze", "Gaze features and recall tests from a fixation log");
  gaze->add_option("file", gaze_file, "Fixation CSV; - for stdin")->required();

  std::string export_salt;
  std::vector<std::string> export_entities;
  auto* exp = app.add_subcommand("export", "Pseudonymized bundle on standard output");
  exp->add_option("--salt", export_salt, "Pseudonymization key")->envname("METAL_SALT")->required();
  exp->add_option("--entities", export_entities, "Entities to export; default all")->delimiter(',');

  try {
    if (auto path = find_config(argc, argv); !path.empty()) apply_config_file(app, path);
    app.parse(argc, argv);
    cfg.session_gap = duration_or_throw(raw.session_gap, "--session-gap");
    cfg.lookback = duration_or_throw(raw.lookback, "--lookback");
    if (!raw.reference.empty()) {
      cfg.reference = parse_date(raw.reference);
      if (!cfg.reference || cfg.reference->year_only)
        throw CLI::ValidationError("--reference-date", "expected YYYY-MM-DD");
    }
    if (ind->parsed() && ind_learner.empty() == ind_class.empty())
      throw CLI::ValidationError("--learner/--class", "exactly one is required");
    if (import_roster->parsed() && roster_dir.empty() && roster_bundle.empty())
      throw CLI::ValidationError("--dir/--bundle", "one is required");
    mining::validate(cfg.miner);
  } catch (const CLI::Error& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  } catch (const Error& e) {
    std::string flag = e.subject();
    std::replace(flag.begin(), flag.end(), '_', '-');
    std::cerr << "--" << flag << ": " << e.what() << '\n';
    return kUsageError;
  }

  const CivilDate reference = cfg.reference ? *cfg.reference : date_of(system_clock()());

  try {
    Store store(cfg.store);

    if (serve->parsed()) {
      recommend::RecommendationBook book(cfg.store.empty() ? std::filesystem::path{} : cfg.store / "recommendations.json");
      Api api(store, book, cfg);
      httplib::Server server;
      mount(server, api, cfg.token);
      static httplib::Server* running = &server;
      std::signal(SIGINT, [](int) { running->stop(); });
      std::signal(SIGTERM, [](int) { running->stop(); });
      log("info", "listening", {{"host", cfg.host}, {"port", cfg.port}, {"store", cfg.store.string()}});
      if (!server.listen(cfg.host, cfg.port)) {
        log("error", "listen failed", {{"host", cfg.host}, {"port", cfg.port}});
        return kDomainError;
      }
      log("info", "stopped");
      return kOk;
    }

    if (import_roster->parsed()) {
      Bundle bundle;
      if (!roster_bundle.empty()) {
        bundle = bundle_from_json(json::parse(slurp(roster_bundle)));
      } else {
        for (const auto& entry : std::filesystem::directory_iterator(roster_dir))
          if (entry.path().extension() == ".csv") bundle[entry.path().stem().string()] = slurp(entry.path().string());
      }
      auto report = import_csv_bundle(store, bundle);
      std::cout << to_json(report).dump() << '\n';
      log(report.committed ? "info" : "error", "import-roster", {{"committed", report.committed}});
      return report.committed ? kOk : kDomainError;
    }

    if (import_statements->parsed()) {
      std::string text = slurp(statements_file);
      std::vector<Json> batch;
      json whole = json::parse(text, nullptr, false);
      if (!whole.is_discarded() && whole.is_array()) {
        batch = whole.get<std::vector<Json>>();
      } else if (!whole.is_discarded() && whole.is_object()) {
        batch.push_back(whole);
      } else {
        std::istringstream lines(text);
        std::string line;
        std::size_t n = 0;
        while (std::getline(lines, line)) {
          ++n;
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          json j = json::parse(line, nullptr, false);
          if (j.is_discarded()) throw Error(ErrorCode::Validation, "line " + std::to_string(n), "not valid JSON");
          batch.push_back(std::move(j));
        }
      }
      auto ids = store.insert_statements(batch);
      std::cout << json{{"stored", ids.size()}, {"ids", ids}}.dump() << '\n';
      log("info", "import-statements", {{"stored", ids.size()}});
      return kOk;
    }

    if (mine->parsed()) {
      mining::MiningInput input;
      if (!mine_bundle.empty()) {
        auto staged = stage_bundle(bundle_from_json(json::parse(slurp(mine_bundle))), {}, true);
        if (!staged.report.committed) {
          std::cout << to_json(staged.report).dump() << '\n';
          return kDomainError;
        }
        input = mining::mining_input(staged.tables, staged.activities, reference, cfg.session_gap);
      } else {
        input = mining::mining_input(store.roster(), store.activity_events(), reference, cfg.session_gap);
      }
      auto patterns = mining::mine_patterns(input.db, input.contexts, cfg.miner);
      if (mine_rules) {
        for (const auto& r : recommend::derive_rules(patterns, input.db, input.contexts, cfg.min_confidence))
          std::cout << recommend::to_json(r).dump() << '\n';
      } else {
        for (const auto& p : patterns) std::cout << mining::to_json(p).dump() << '\n';
      }
      log("info", "mine", {{"learners", input.db.sessions.size()}, {"patterns", patterns.size()}});
      return kOk;
    }

    if (ind->parsed()) {
      auto from = parse_instant(ind_from), to = parse_instant(ind_to);
      if (!from)
        if (auto d = parse_date(ind_from)) from = start_of_day(*d);
      if (!to)
        if (auto d = parse_date(ind_to)) to = start_of_day(*d);
      if (!from || !to || *from >= *to) throw Error(ErrorCode::Validation, "from", "window must be from < to");
      indicators::IndicatorConfig icfg;
      icfg.session_gap = cfg.session_gap;
      icfg.bucket = duration_or_throw(ind_bucket, "--bucket");
      auto data = indicators::IndicatorData::from(store);
      indicators::Window w{*from, *to};
      json out = ind_learner.empty() ? indicators::class_report(data, ind_class, w, icfg)
                                     : indicators::learner_report(data, ind_learner, w, icfg);
      std::cout << out.dump() << '\n';
      return kOk;
    }

    if (gaze->parsed()) {
      auto trials = gaze::parse_fixation_log(slurp(gaze_file));
      for (const auto& line : gaze::gaze_report(trials, {cfg.permutations, cfg.seed})) std::cout << line.dump() << '\n';
      log("info", "gaze", {{"trials", trials.size()}, {"permutations", cfg.permutations}, {"seed", cfg.seed}});
      return kOk;
    }

    if (exp->parsed()) {
      std::set<std::string> entities(export_entities.begin(), export_entities.end());
      if (entities.empty()) {
        entities = kRosterEntities;
        entities.insert("activities");
      }
      std::cout << to_json(export_pseudonymized(store, export_salt, entities)).dump() << '\n';
      return kOk;
    }
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    return print_domain_error(e);
  } catch (const json::exception& e) {
    return print_domain_error(Error(ErrorCode::Validation, "input", e.what()));
  }
  return kOk;
}
