#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "uwbrtls/cli.hpp"
#include "uwbrtls/config.hpp"
#include "uwbrtls/error.hpp"

using namespace uwb;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int n = 0;
    path = fs::temp_directory_path() /
           ("uwbrtls_test_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

// Short demo scenario written to disk.
std::string short_config(const TempDir& dir, double duration = 6.0) {
  auto cfg = config::demo_config(7);
  cfg.scenario.duration = duration;
  cfg.eval.warmup = 5;
  const auto path = dir / "scenario.json";
  write(path, config::to_json(cfg).dump(2));
  return path;
}

std::string config_error_field(const std::string& text) {
  try {
    config::parse_text(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("demo config round trips") {
  const auto cfg = config::demo_config(42);
  const auto j = config::to_json(cfg);
  const auto back = config::parse(j);
  CHECK(config::to_json(back) == j);
  CHECK(back.scenario.topology.anchors.size() == 4);
  CHECK(back.scenario.tags.size() == 2);
  CHECK(back.locate.sync.ccp_period == cfg.scenario.ccp_period);
}

TEST_CASE("demo config depends on the seed") {
  CHECK(config::to_json(config::demo_config(1)) != config::to_json(config::demo_config(2)));
  CHECK(config::to_json(config::demo_config(1)) == config::to_json(config::demo_config(1)));
}

TEST_CASE("errors name the field") {
  const std::string head = R"({"anchors":[{"id":"MA1","role":"master","position":[0,0]},)";
  CHECK(config_error_field(head + R"({"id":"SA1","role":"slave","position":[1,0],"follows":["MA9"]}]})") ==
        "anchors[1].follows[0]");
  CHECK(config_error_field(head + R"({"id":"SA1","role":"boss","position":[1,0]}]})") ==
        "anchors[1].role");
  CHECK(config_error_field(head + R"({"id":"SA1","role":"slave","position":[1]}]})") ==
        "anchors[1].position");
  CHECK(config_error_field(R"({"anchors":[], "blink_period":"fast"})") == "blink_period");
  CHECK(config_error_field("{not json") != "<none>");
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("simulate, locate, eval, deploy-check") {
  TempDir dir;
  cli::Options o;
  o.config = short_config(dir);
  o.out = dir.path.string();
  std::ostringstream log;
  REQUIRE(cli::cmd_simulate(o, log) == cli::kExitOk);
  REQUIRE(cli::cmd_locate(o, log) == cli::kExitOk);
  REQUIRE(cli::cmd_eval(o, log) == cli::kExitOk);
  REQUIRE(cli::cmd_deploy_check(o, log) == cli::kExitOk);
  for (const char* f : {"reports.jsonl", "truth.jsonl", "fixes.csv", "tdoa.csv", "summary.json",
                        "errors.csv", "deployment.json", "hdop.csv"}) {
    CHECK(fs::exists(dir.path / f));
  }
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["fix_rmse"].get<double>() < 0.2);
}

TEST_CASE("file pipeline equals in-process pipeline") {
  TempDir dir;
  cli::Options o;
  o.config = short_config(dir);
  o.out = dir.path.string();
  std::ostringstream log;
  REQUIRE(cli::cmd_simulate(o, log) == 0);
  REQUIRE(cli::cmd_locate(o, log) == 0);

  const auto cfg = config::load(o.config);
  const auto sim = simnet::run_scenario(cfg.scenario);
  const auto out = pipeline::locate(sim.reports, cfg.scenario.topology, cfg.locate);
  CHECK(slurp(dir / "fixes.csv") == cli::fixes_csv(out.fixes));
  CHECK(slurp(dir / "tdoa.csv") == cli::tdoa_csv(out.synced));

  const auto back = cli::read_fixes_csv(dir / "fixes.csv");
  REQUIRE(back.size() == out.fixes.size());
  CHECK(back.front().position == out.fixes.front().position);
}

TEST_CASE("same seed, identical files") {
  TempDir a, b;
  std::ostringstream log;
  cli::Options oa, ob;
  oa.config = short_config(a);
  ob.config = oa.config;
  oa.out = a.path.string();
  ob.out = b.path.string();
  oa.seed = ob.seed = 11;
  REQUIRE(cli::cmd_simulate(oa, log) == 0);
  REQUIRE(cli::cmd_simulate(ob, log) == 0);
  CHECK(slurp(a / "reports.jsonl") == slurp(b / "reports.jsonl"));
  CHECK(slurp(a / "truth.jsonl") == slurp(b / "truth.jsonl"));
}

TEST_CASE("malformed report lines are skipped with a warning") {
  TempDir dir;
  cli::Options o;
  o.config = short_config(dir);
  o.out = dir.path.string();
  std::ostringstream log;
  REQUIRE(cli::cmd_simulate(o, log) == 0);
  const auto clean = slurp(dir / "reports.jsonl");
  REQUIRE(cli::cmd_locate(o, log) == 0);
  const auto fixes_clean = slurp(dir / "fixes.csv");

  write(dir / "reports.jsonl", "{garbage\n" + clean + "{\"kind\":\"nope\"}\n");
  std::ostringstream warn;
  REQUIRE(cli::cmd_locate(o, warn) == 0);
  CHECK(warn.str().find("skipped 2 unparseable") != std::string::npos);
  CHECK(slurp(dir / "fixes.csv") == fixes_clean);
}

TEST_CASE("exit codes") {
  TempDir dir;
  std::ostringstream log;
  cli::Options o;
  o.out = dir.path.string();

  SUBCASE("missing config file is an I/O error") {
    o.config = dir / "absent.json";
    CHECK(cli::cmd_simulate(o, log) == cli::kExitIo);
  }
  SUBCASE("bad anchor reference is a config error") {
    o.config = dir / "bad.json";
    write(o.config,
          R"({"anchors":[{"id":"MA1","role":"master","position":[0,0]},)"
          R"({"id":"SA1","role":"slave","position":[4,0],"follows":["MA7"]}]})");
    CHECK(cli::cmd_simulate(o, log) == cli::kExitConfig);
    CHECK(log.str().find("anchors[1].follows[0]") != std::string::npos);
  }
  SUBCASE("no reports is an empty result") {
    o.config = short_config(dir);
    write(dir / "reports.jsonl", "");
    CHECK(cli::cmd_locate(o, log) == cli::kExitEmpty);
  }
  SUBCASE("missing reports file is an I/O error") {
    o.config = short_config(dir);
    o.reports = dir / "none.jsonl";
    CHECK(cli::cmd_locate(o, log) == cli::kExitIo);
  }
  SUBCASE("eval without overlap is an empty result") {
    o.config = short_config(dir);
    REQUIRE(cli::cmd_simulate(o, log) == 0);
    write(dir / "fixes.csv", "tag_id,blink_seq,x,y,vx,vy,pos_std\nZZ,1,0,0,0,0,0\n");
    CHECK(cli::cmd_eval(o, log) == cli::kExitEmpty);
  }
  SUBCASE("usage errors") {
    const char* argv[] = {"uwbrtls", "frobnicate"};
    CHECK(cli::run(2, const_cast<char**>(argv)) == cli::kExitUsage);
  }
}

TEST_CASE("demo writes every artefact") {
  TempDir dir;
  cli::Options o;
  o.out = dir.path.string();
  std::ostringstream log;
  REQUIRE(cli::cmd_demo(o, log) == 0);
  for (const char* f : {"config.json", "reports.jsonl", "fixes.csv", "summary.json", "hdop.csv"}) {
    CHECK(fs::exists(dir.path / f));
  }
}

}  // TEST_SUITE
