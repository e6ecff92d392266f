#include "uwbrtls/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "uwbrtls/config.hpp"
#include "uwbrtls/deploy.hpp"
#include "uwbrtls/error.hpp"
#include "uwbrtls/pipeline.hpp"
#include "uwbrtls/protocol.hpp"
#include "uwbrtls/simnet.hpp"

namespace uwb::cli {

namespace fs = std::filesystem;

namespace {

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyResult : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoFailure("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << text;
  if (!out) throw IoFailure("write failed for " + path.string());
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot read " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw std::invalid_argument("not a number: " + s);
  return v;
}

std::uint32_t to_u32(const std::string& s) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used);
  if (used != s.size() || v > 0xffffffffULL) throw std::invalid_argument("bad seq: " + s);
  return static_cast<std::uint32_t>(v);
}

ScenarioConfig load_config(const Options& opts) {
  if (opts.config.empty()) throw ConfigError("--config", "a scenario file is required");
  auto cfg = config::load(opts.config);
  if (opts.seed) cfg.scenario.seed = *opts.seed;
  return cfg;
}

fs::path out_dir(const Options& opts, const std::optional<ScenarioConfig>& cfg) {
  if (!opts.out.empty()) return opts.out;
  return cfg ? fs::path(cfg->out_dir) : fs::path("out");
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Maps failures onto exit codes; everything below runs inside this guard.
template <class F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoFailure& e) {
    log << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const EmptyResult& e) {
    log << "empty result: " << e.what() << '\n';
    return kExitEmpty;
  } catch (const Error& e) {
    log << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    if (e.code() == ErrorCode::kEmptyEval) return kExitEmpty;
    if (e.code() == ErrorCode::kConfig) return kExitIo;  // unreadable config file
    return kExitConfig;
  }
}

int simulate_into(const ScenarioConfig& cfg, const fs::path& dir, bool verbose, std::ostream& log) {
  const auto sim = simnet::run_scenario(cfg.scenario);
  std::string reports;
  for (const auto& r : sim.reports) reports += encode_report(r) + '\n';
  std::string truth;
  for (const auto& t : sim.truth) truth += simnet::encode_truth(t) + '\n';
  for (const auto& c : sim.clocks) truth += simnet::encode_clock_truth(c) + '\n';
  write_file(dir / "reports.jsonl", reports);
  write_file(dir / "truth.jsonl", truth);
  if (verbose) {
    log << "simulate: " << sim.reports.size() << " reports, " << sim.truth.size()
        << " blinks -> " << dir.string() << '\n';
  }
  return kExitOk;
}

int locate_into(const ScenarioConfig& cfg, const fs::path& reports_path, const fs::path& dir,
                bool verbose, std::ostream& log) {
  std::vector<ToaReport> reports;
  std::size_t skipped = 0;
  for (const auto& line : read_lines(reports_path)) {
    if (line.empty()) continue;
    try {
      reports.push_back(decode_report(line, cfg.scenario.timer));
    } catch (const Error&) {
      ++skipped;
    }
  }
  if (skipped) log << "warning: skipped " << skipped << " unparseable report line(s)\n";
  if (reports.empty()) throw EmptyResult("no reports in " + reports_path.string());

  const auto out = pipeline::locate(reports, cfg.scenario.topology, cfg.locate);
  if (verbose) {
    log << "locate: " << reports.size() << " reports, " << out.blinks << " blinks, "
        << out.fixes.size() << " fixes\n";
    for (const auto& [code, n] : out.diagnostics) log << "  " << code << ": " << n << '\n';
  }
  if (out.fixes.empty()) throw EmptyResult("no fixes produced");
  write_file(dir / "fixes.csv", fixes_csv(out.fixes));
  write_file(dir / "tdoa.csv", tdoa_csv(out.synced));
  return kExitOk;
}

int eval_into(const EvalConfig& ecfg, const Options& opts, const fs::path& dir, bool verbose,
              std::ostream& log) {
  const fs::path fixes_path = opts.fixes.empty() ? dir / "fixes.csv" : fs::path(opts.fixes);
  const fs::path truth_path = opts.truth.empty() ? dir / "truth.jsonl" : fs::path(opts.truth);
  fs::path tdoa_path = opts.tdoa.empty() ? dir / "tdoa.csv" : fs::path(opts.tdoa);

  const auto fixes = read_fixes_csv(fixes_path.string());
  std::vector<BlinkTruth> truth;
  for (const auto& line : read_lines(truth_path)) {
    if (line.empty()) continue;
    try {
      if (auto t = simnet::decode_truth(line)) truth.push_back(*t);
    } catch (const Error& e) {
      throw IoFailure("bad truth line in " + truth_path.string() + ": " + e.what());
    }
  }
  std::vector<SyncedTdoa> synced;
  if (!opts.tdoa.empty() || fs::exists(tdoa_path)) synced = read_tdoa_csv(tdoa_path.string());

  const auto summary = metrics::evaluate(fixes, truth, synced, ecfg);
  write_file(dir / "summary.json", metrics::to_json(summary).dump(2) + '\n');
  write_file(dir / "errors.csv", metrics::errors_csv(metrics::fix_errors(fixes, truth)));
  if (verbose) {
    log << "eval: rmse " << summary.fix_rmse << " m, p95 " << summary.fix_p95_error
        << " m, availability " << summary.availability << '\n';
  }
  return kExitOk;
}

int deploy_into(const ScenarioConfig& cfg, const fs::path& dir, bool verbose, std::ostream& log) {
  const auto report = deploy::evaluate_deployment(cfg.scenario.topology, cfg.site,
                                                  cfg.hdop_resolution, cfg.hdop_reference);
  write_file(dir / "deployment.json", deploy::to_json(report).dump(2) + '\n');
  write_file(dir / "hdop.csv", deploy::grid_csv(report.grid));
  if (verbose) {
    for (const auto& r : report.rules) {
      log << "rule " << r.rule << ": " << to_string(r.status) << " (" << r.detail << ")\n";
    }
  }
  return kExitOk;
}

}  // namespace

std::string fixes_csv(const std::vector<Fix>& fixes) {
  std::string s = "tag_id,blink_seq,x,y,vx,vy,pos_std\n";
  for (const auto& f : fixes) {
    s += f.tag_id + ',' + std::to_string(f.blink_seq) + ',' + num(f.position.x()) + ',' +
         num(f.position.y()) + ',' + num(f.velocity.x()) + ',' + num(f.velocity.y()) + ',' +
         num(f.position_std) + '\n';
  }
  return s;
}

std::vector<Fix> read_fixes_csv(const std::string& path) {
  std::vector<Fix> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto c = split(lines[i]);
    try {
      if (c.size() != 7) throw std::invalid_argument("expected 7 columns");
      Fix f;
      f.tag_id = c[0];
      f.blink_seq = to_u32(c[1]);
      f.position = {to_double(c[2]), to_double(c[3])};
      f.velocity = {to_double(c[4]), to_double(c[5])};
      f.position_std = to_double(c[6]);
      out.push_back(f);
    } catch (const std::exception& e) {
      throw IoFailure(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::string tdoa_csv(const std::vector<SyncedTdoa>& synced) {
  std::string s = "tag_id,blink_seq,anchor_a,anchor_b,tdoa_s,k_used\n";
  for (const auto& t : synced) {
    s += t.tag_id + ',' + std::to_string(t.blink_seq) + ',' + t.anchor_a + ',' + t.anchor_b + ',' +
         num(t.tdoa_sync) + ',' + num(t.k_used) + '\n';
  }
  return s;
}

std::vector<SyncedTdoa> read_tdoa_csv(const std::string& path) {
  std::vector<SyncedTdoa> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto c = split(lines[i]);
    try {
      if (c.size() != 6) throw std::invalid_argument("expected 6 columns");
      out.push_back({c[2], c[3], c[0], to_u32(c[1]), to_double(c[4]), to_double(c[5])});
    } catch (const std::exception& e) {
      throw IoFailure(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

int cmd_simulate(const Options& opts, std::ostream& log) {
  return guarded(log, [&] {
    const auto cfg = load_config(opts);
    return simulate_into(cfg, out_dir(opts, cfg), opts.verbose, log);
  });
}

int cmd_locate(const Options& opts, std::ostream& log) {
  return guarded(log, [&] {
    const auto cfg = load_config(opts);
    const auto dir = out_dir(opts, cfg);
    const fs::path reports = opts.reports.empty() ? dir / "reports.jsonl" : fs::path(opts.reports);
    return locate_into(cfg, reports, dir, opts.verbose, log);
  });
}

int cmd_eval(const Options& opts, std::ostream& log) {
  return guarded(log, [&] {
    std::optional<ScenarioConfig> cfg;
    if (!opts.config.empty()) cfg = load_config(opts);
    return eval_into(cfg ? cfg->eval : EvalConfig{}, opts, out_dir(opts, cfg), opts.verbose, log);
  });
}

int cmd_deploy_check(const Options& opts, std::ostream& log) {
  return guarded(log, [&] {
    const auto cfg = load_config(opts);
    return deploy_into(cfg, out_dir(opts, cfg), opts.verbose, log);
  });
}

int cmd_demo(const Options& opts, std::ostream& log) {
  return guarded(log, [&] {
    auto cfg = config::demo_config(opts.seed.value_or(42));
    const fs::path dir = opts.out.empty() ? fs::path("demo_out") : fs::path(opts.out);
    cfg.out_dir = dir.string();
    write_file(dir / "config.json", config::to_json(cfg).dump(2) + '\n');
    Options sub = opts;
    sub.out = dir.string();
    if (int rc = simulate_into(cfg, dir, opts.verbose, log)) return rc;
    if (int rc = locate_into(cfg, dir / "reports.jsonl", dir, opts.verbose, log)) return rc;
    if (int rc = eval_into(cfg.eval, sub, dir, opts.verbose, log)) return rc;
    if (int rc = deploy_into(cfg, dir, opts.verbose, log)) return rc;
    log << "demo written to " << dir.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int run(int argc, char** argv) {
  CLI::App app{"UWB TDoA real-time location engine"};
  app.require_subcommand(1);
  Options opts;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opts.config, "scenario JSON file");
    if (needs_config) c->required();
    sub->add_option("--out", opts.out, "output directory");
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_flag("--verbose", opts.verbose, "print progress to stderr");
  };
  auto* simulate = app.add_subcommand("simulate", "write reports.jsonl and truth.jsonl");
  common(simulate, true);
  auto* locate = app.add_subcommand("locate", "estimate tag positions from reports");
  common(locate, true);
  locate->add_option("--reports", opts.reports, "report stream (JSON lines)");
  auto* eval = app.add_subcommand("eval", "score fixes against ground truth");
  common(eval, false);
  eval->add_option("--fixes", opts.fixes, "fixes.csv");
  eval->add_option("--truth", opts.truth, "truth.jsonl");
  eval->add_option("--tdoa", opts.tdoa, "tdoa.csv");
  auto* deploy = app.add_subcommand("deploy-check", "deployment rules and HDoP grid");
  common(deploy, true);
  auto* demo = app.add_subcommand("demo", "run the 6 m x 4 m reference scenario end to end");
  common(demo, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;  // --help is not an error
  }
  for (auto* sub : {simulate, locate, eval, deploy, demo}) {
    if (sub->count("--seed")) opts.seed = seed;
  }

  if (*simulate) return cmd_simulate(opts, std::cerr);
  if (*locate) return cmd_locate(opts, std::cerr);
  if (*eval) return cmd_eval(opts, std::cerr);
  if (*deploy) return cmd_deploy_check(opts, std::cerr);
  return cmd_demo(opts, std::cerr);
}

}  // namespace uwb::cli
