#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>

#include "fixtures.hpp"

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& cmd) {
  Run r;
  FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  REQUIRE(pipe);
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  int status = pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const std::string kCli = METAL_CLI;
const std::string kPattern = R"x("sequence":["id(R-15)","id(R-42)","attr(subject=Mathematics)"])x";

}  // namespace

TEST_CASE("cli: mine on an empty store succeeds with no output") {
  fixtures::TempDir dir;
  auto r = run(kCli + " --store " + (dir.path / "s").string() + " mine");
  CHECK(r.status == 0);
  CHECK(r.out.empty());
}

TEST_CASE("cli: usage errors exit 2") {
  CHECK(run(kCli).status == 2);
  CHECK(run(kCli + " --no-such-flag mine").status == 2);
  CHECK(run(kCli + " --min-support 0 mine").status == 2);
  CHECK(run(kCli + " --session-gap soon mine").status == 2);
  CHECK(run(kCli + " indicators --from 2019-01-01 --to 2019-02-01").status == 2);
}

TEST_CASE("cli: a rejected roster import exits 1 with the report") {
  fixtures::TempDir dir;
  std::ofstream(dir.path / "enrollments.csv") << "sourcedId,userId,classId,role\nE1,U1,C1,learner\n";
  auto r = run(kCli + " --store " + (dir.path / "s").string() + " import-roster --dir " + dir.path.string());
  CHECK(r.status == 1);
  auto report = nlohmann::json::parse(r.out);
  CHECK(report["status"] == "rejected");
  CHECK(report["files"]["enrollments"]["errors"][0]["code"] == "DANGLING_REFERENCE");
}

TEST_CASE("cli: import, mine and export") {
  fixtures::TempDir dir;
  std::ofstream(dir.path / "roster.json") << metal::to_json(fixtures::d1_bundle()).dump();
  std::ofstream(dir.path / "statements.json") << nlohmann::json(fixtures::d1_statements()).dump();
  const std::string base = kCli + " --store " + (dir.path / "s").string() + " --reference-date 2019-03-01";
  REQUIRE(run(base + " import-roster --bundle " + (dir.path / "roster.json").string()).status == 0);
  auto st = run(base + " import-statements " + (dir.path / "statements.json").string());
  REQUIRE(st.status == 0);
  CHECK(nlohmann::json::parse(st.out)["stored"] == 7);

  auto mined = run(base + " --min-group 2 mine");
  CHECK(mined.status == 0);
  CHECK(mined.out.find(kPattern) != std::string::npos);

  auto exported = run(base + " export --salt k");
  REQUIRE(exported.status == 0);
  std::ofstream(dir.path / "export.json") << exported.out;
  auto again = run(base + " --min-group 2 mine --bundle " + (dir.path / "export.json").string());
  CHECK(again.status == 0);
  CHECK(again.out.find(kPattern) != std::string::npos);

  auto report = run(base + " indicators --learner L1 --from 2019-02-25 --to 2019-03-04");
  CHECK(report.status == 0);
  CHECK(nlohmann::json::parse(report.out)["effort_minutes"] == 10.0);
  CHECK(run(base + " indicators --learner ghost --from 2019-02-25 --to 2019-03-04").status == 1);
}

TEST_CASE("cli: flags beat environment, environment beats the config file") {
  fixtures::TempDir dir;
  const auto cfg = dir.path / "metal.toml";
  std::ofstream(cfg) << "store = \"" << (dir.path / "from-file").string() << "\"\n";
  const std::string export_cmd = " --config " + cfg.string() + " export --salt k > /dev/null";
  run(kCli + export_cmd);
  CHECK(std::filesystem::exists(dir.path / "from-file"));
  run("METAL_STORE=" + (dir.path / "from-env").string() + " " + kCli + export_cmd);
  CHECK(std::filesystem::exists(dir.path / "from-env"));
  run("METAL_STORE=" + (dir.path / "from-env2").string() + " " + kCli + " --store " + (dir.path / "from-flag").string() +
      export_cmd);
  CHECK(std::filesystem::exists(dir.path / "from-flag"));
  CHECK_FALSE(std::filesystem::exists(dir.path / "from-env2"));

  std::ofstream(dir.path / "bad.toml") << "shoe-size = 9\n";
  CHECK(run(kCli + " --config " + (dir.path / "bad.toml").string() + " mine").status == 2);
}
