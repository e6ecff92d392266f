#include "uwbrtls/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "uwbrtls/error.hpp"

namespace uwb::config {

namespace {

using nlohmann::json;

// A JSON node plus the dotted path that leads to it, for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  Node operator[](const char* key) const {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    if (!j_.contains(key)) throw ConfigError(join(key), "missing");
    return {j_.at(key), join(key)};
  }

  std::vector<Node> items() const {
    if (!j_.is_array()) throw ConfigError(path_, "expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < j_.size(); ++i) {
      out.emplace_back(j_[i], path_ + "[" + std::to_string(i) + "]");
    }
    return out;
  }

  double number() const {
    if (!j_.is_number()) throw ConfigError(path_, "expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path_, "must be finite");
    return v;
  }

  double number(const char* key, double fallback) const {
    return has(key) ? (*this)[key].number() : fallback;
  }

  std::int64_t integer() const {
    if (!j_.is_number_integer()) throw ConfigError(path_, "expected an integer");
    return j_.get<std::int64_t>();
  }

  std::int64_t integer(const char* key, std::int64_t fallback) const {
    return has(key) ? (*this)[key].integer() : fallback;
  }

  std::uint64_t unsigned_integer(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(join(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string string() const {
    if (!j_.is_string()) throw ConfigError(path_, "expected a string");
    return j_.get<std::string>();
  }

  std::string string(const char* key, const std::string& fallback) const {
    return has(key) ? (*this)[key].string() : fallback;
  }

  Point2 point() const {
    if (!j_.is_array() || j_.size() != 2) throw ConfigError(path_, "expected [x, y]");
    const auto xs = items();
    return {xs[0].number(), xs[1].number()};
  }

 private:
  std::string join(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
};

ClockModel parse_clock(const Node& n, double default_jitter) {
  ClockModel c;
  c.offset = n.number("offset", 0.0);
  c.skew = n.number("skew", 0.0);
  c.drift_rate = n.number("drift_rate", 0.0);
  c.jitter_std = n.number("jitter_std", default_jitter);
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(n.path(), e.what());
  }
  return c;
}

Trajectory parse_trajectory(const Node& n, double duration) {
  const std::string kind = n["kind"].string();
  Trajectory t;
  if (kind == "static") {
    t = Trajectory::fixed(n["position"].point());
  } else if (kind == "constant_velocity") {
    t = Trajectory::moving(n["start"].point(), n["velocity"].point());
  } else if (kind == "waypoints") {
    std::vector<std::pair<double, Point2>> pts;
    for (const auto& w : n["points"].items()) pts.emplace_back(w["t"].number(), w["position"].point());
    t = Trajectory::through(std::move(pts));
  } else if (kind == "rectangle_loop") {
    const double speed = n["speed"].number();
    if (!(speed > 0.0)) throw ConfigError(n.path() + ".speed", "must be positive");
    t = Trajectory::rectangle_loop(n["lo"].point(), n["hi"].point(), speed, duration);
  } else {
    throw ConfigError(n.path() + ".kind", "unknown trajectory kind '" + kind + "'");
  }
  try {
    t.validate();
  } catch (const Error& e) {
    throw ConfigError(n.path(), e.what());
  }
  return t;
}

std::vector<Segment> parse_segments(const Node& n) {
  std::vector<Segment> out;
  for (const auto& s : n.items()) out.push_back({s["a"].point(), s["b"].point()});
  return out;
}

}  // namespace

void sync_derived(ScenarioConfig& cfg) {
  cfg.locate.sync.timer = cfg.scenario.timer;
  cfg.locate.sync.ccp_period = cfg.scenario.ccp_period;
  cfg.locate.tracker.blink_period = cfg.scenario.blink_period;
}

ScenarioConfig parse(const json& j) {
  const Node root(j, "");
  if (!j.is_object()) throw ConfigError("<root>", "expected an object");
  ScenarioConfig cfg;
  Scenario& s = cfg.scenario;

  s.seed = root.unsigned_integer("seed", s.seed);
  s.duration = root.number("duration", s.duration);
  s.blink_period = root.number("blink_period", s.blink_period);
  s.ccp_period = root.number("ccp_period", s.ccp_period);
  s.lag = root.number("lag", s.lag);
  s.ccp_phase = root.number("ccp_phase", s.ccp_phase);
  if (root.has("timer")) {
    const Node t = root["timer"];
    s.timer.tick_seconds = t.number("tick_seconds", s.timer.tick_seconds);
    s.timer.counter_bits = static_cast<unsigned>(t.integer("counter_bits", s.timer.counter_bits));
    try {
      s.timer.validate();
    } catch (const Error& e) {
      throw ConfigError("timer", e.what());
    }
  }
  const double default_jitter = root.number("jitter_std", 0.0);

  // Anchors and the master cascade.
  std::set<AnchorId> ids;
  const auto anchors = root["anchors"].items();
  for (const auto& a : anchors) {
    AnchorConfig ac;
    ac.id = a["id"].string();
    if (ac.id.empty()) throw ConfigError(a.path() + ".id", "must not be empty");
    if (!ids.insert(ac.id).second) throw ConfigError(a.path() + ".id", "duplicate id " + ac.id);
    const std::string role = a.string("role", "slave");
    if (role == "master") {
      ac.role = AnchorRole::kMaster;
    } else if (role != "slave") {
      throw ConfigError(a.path() + ".role", "expected master or slave");
    }
    ac.position = a["position"].point();
    if (a.has("height")) ac.height = a["height"].number();
    ac.clock = a.has("clock") ? parse_clock(a["clock"], default_jitter)
                              : parse_clock(Node(json::object(), a.path() + ".clock"), default_jitter);
    if (ac.role == AnchorRole::kMaster) {
      s.topology.master_level[ac.id] = static_cast<int>(a.integer("level", 1));
      s.topology.lag_slots[ac.id] = static_cast<int>(a.integer("lag_slot", 0));
    }
    s.topology.anchors.push_back(ac);
  }
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (!anchors[i].has("follows")) continue;
    const auto follows = anchors[i]["follows"];
    for (const auto& f : follows.items()) {
      const auto target = f.string();
      if (!ids.count(target)) throw ConfigError(f.path(), "unknown anchor '" + target + "'");
      s.topology.follow[s.topology.anchors[i].id].insert(target);
    }
  }
  try {
    s.topology.validate();
  } catch (const Error& e) {
    throw ConfigError("anchors", e.what());
  }

  if (root.has("tags")) {
    for (const auto& t : root["tags"].items()) {
      TagConfig tc;
      tc.id = t["id"].string();
      if (ids.count(tc.id)) throw ConfigError(t.path() + ".id", "duplicate id " + tc.id);
      ids.insert(tc.id);
      tc.phase = t.number("phase", 0.0);
      tc.trajectory = parse_trajectory(t["trajectory"], s.duration);
      s.tags.push_back(std::move(tc));
    }
  }

  if (root.has("reception")) {
    const Node r = root["reception"];
    if (r.has("radius")) s.reception.radius = r["radius"].number();
    if (r.has("adjacency")) {
      const Node adj = r["adjacency"];
      for (const auto& a : anchors) {
        const auto id = a["id"].string();
        if (!adj.has(id.c_str())) continue;
        for (const auto& peer : adj[id.c_str()].items()) {
          s.reception.adjacency[id].insert(peer.string());
        }
      }
    }
  }

  if (root.has("sync")) {
    const Node n = root["sync"];
    auto& p = cfg.locate.sync;
    p.k_tolerance = n.number("k_tolerance", p.k_tolerance);
    p.stale_intervals = n.number("stale_intervals", p.stale_intervals);
    p.resolve_after_rounds = static_cast<int>(n.integer("resolve_after_rounds", p.resolve_after_rounds));
    p.history_rounds = static_cast<int>(n.integer("history_rounds", p.history_rounds));
    const auto policy = n.string("window_policy", "nearest");
    if (policy == "preceding") {
      p.policy = WindowPolicy::kPreceding;
    } else if (policy != "nearest") {
      throw ConfigError("sync.window_policy", "expected nearest or preceding");
    }
  }
  if (root.has("tracker")) {
    const Node n = root["tracker"];
    auto& t = cfg.locate.tracker;
    t.accel_std = n.number("accel_std", t.accel_std);
    t.toa_std = n.number("toa_std", t.toa_std);
    t.init_pos_std = n.number("init_pos_std", t.init_pos_std);
    t.init_vel_std = n.number("init_vel_std", t.init_vel_std);
    t.reset_gap = static_cast<int>(n.integer("reset_gap", t.reset_gap));
    t.substeps = static_cast<int>(n.integer("substeps", t.substeps));
    if (t.substeps < 1) throw ConfigError("tracker.substeps", "must be at least 1");
  }
  if (root.has("smoother")) {
    const Node n = root["smoother"];
    cfg.eval.smoother.process_var = n.number("process_var", cfg.eval.smoother.process_var);
    cfg.eval.smoother.measurement_var =
        n.number("measurement_var", cfg.eval.smoother.measurement_var);
  }
  if (root.has("eval")) {
    const auto w = root["eval"].integer("warmup", static_cast<std::int64_t>(cfg.eval.warmup));
    if (w < 0) throw ConfigError("eval.warmup", "must be non-negative");
    cfg.eval.warmup = static_cast<std::size_t>(w);
  }
  if (root.has("site")) {
    const Node n = root["site"];
    if (n.has("area")) cfg.site.area = {n["area"]["lo"].point(), n["area"]["hi"].point()};
    if (n.has("walls")) cfg.site.walls = parse_segments(n["walls"]);
    if (n.has("obstacles")) cfg.site.obstacles = parse_segments(n["obstacles"]);
  }
  cfg.hdop_resolution = root.number("hdop_resolution", cfg.hdop_resolution);
  if (!(cfg.hdop_resolution > 0.0)) throw ConfigError("hdop_resolution", "must be positive");
  if (root.has("hdop_reference")) {
    cfg.hdop_reference = root["hdop_reference"].string();
    if (!ids.count(*cfg.hdop_reference)) {
      throw ConfigError("hdop_reference", "unknown anchor '" + *cfg.hdop_reference + "'");
    }
  }
  cfg.out_dir = root.string("out_dir", cfg.out_dir);

  try {
    s.validate();
  } catch (const Error& e) {
    const std::string field = e.code() == ErrorCode::kCollisionSchedule ? "anchors.lag_slot"
                              : e.code() == ErrorCode::kInvalidClock    ? "timer"
                                                                        : "scenario";
    throw ConfigError(field, e.what());
  }
  sync_derived(cfg);
  return cfg;
}

ScenarioConfig parse_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return parse(j);
}

ScenarioConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

nlohmann::ordered_json to_json(const ScenarioConfig& cfg) {
  using oj = nlohmann::ordered_json;
  const Scenario& s = cfg.scenario;
  auto pt = [](const Point2& p) { return oj::array({p.x(), p.y()}); };
  oj j;
  j["seed"] = s.seed;
  j["duration"] = s.duration;
  j["blink_period"] = s.blink_period;
  j["ccp_period"] = s.ccp_period;
  j["lag"] = s.lag;
  j["ccp_phase"] = s.ccp_phase;
  j["timer"] = {{"tick_seconds", s.timer.tick_seconds}, {"counter_bits", s.timer.counter_bits}};

  j["anchors"] = oj::array();
  for (const auto& a : s.topology.anchors) {
    oj e;
    e["id"] = a.id;
    e["role"] = a.role == AnchorRole::kMaster ? "master" : "slave";
    e["position"] = pt(a.position);
    if (a.height) e["height"] = *a.height;
    if (a.role == AnchorRole::kMaster) {
      e["level"] = s.topology.level(a.id);
      e["lag_slot"] = s.topology.lag_slot(a.id);
    }
    const auto& f = s.topology.followed(a.id);
    if (!f.empty()) e["follows"] = oj(std::vector<std::string>(f.begin(), f.end()));
    e["clock"] = {{"offset", a.clock.offset},
                  {"skew", a.clock.skew},
                  {"drift_rate", a.clock.drift_rate},
                  {"jitter_std", a.clock.jitter_std}};
    j["anchors"].push_back(e);
  }

  j["tags"] = oj::array();
  for (const auto& t : s.tags) {
    oj e;
    e["id"] = t.id;
    e["phase"] = t.phase;
    oj tr;
    switch (t.trajectory.kind) {
      case Trajectory::Kind::kStatic:
        tr["kind"] = "static";
        tr["position"] = pt(t.trajectory.start);
        break;
      case Trajectory::Kind::kConstantVelocity:
        tr["kind"] = "constant_velocity";
        tr["start"] = pt(t.trajectory.start);
        tr["velocity"] = pt(t.trajectory.velocity);
        break;
      case Trajectory::Kind::kWaypoints:
        tr["kind"] = "waypoints";
        tr["points"] = oj::array();
        for (const auto& [time, p] : t.trajectory.waypoints) {
          tr["points"].push_back({{"t", time}, {"position", pt(p)}});
        }
        break;
    }
    e["trajectory"] = tr;
    j["tags"].push_back(e);
  }

  if (s.reception.radius || !s.reception.adjacency.empty()) {
    oj r = oj::object();
    if (s.reception.radius) r["radius"] = *s.reception.radius;
    if (!s.reception.adjacency.empty()) {
      r["adjacency"] = oj::object();
      for (const auto& [id, peers] : s.reception.adjacency) {
        r["adjacency"][id] = oj(std::vector<std::string>(peers.begin(), peers.end()));
      }
    }
    j["reception"] = r;
  }

  const auto& p = cfg.locate.sync;
  j["sync"] = {{"k_tolerance", p.k_tolerance},
               {"stale_intervals", p.stale_intervals},
               {"resolve_after_rounds", p.resolve_after_rounds},
               {"history_rounds", p.history_rounds},
               {"window_policy", p.policy == WindowPolicy::kNearest ? "nearest" : "preceding"}};
  const auto& t = cfg.locate.tracker;
  j["tracker"] = {{"accel_std", t.accel_std},       {"toa_std", t.toa_std},
                  {"init_pos_std", t.init_pos_std}, {"init_vel_std", t.init_vel_std},
                  {"reset_gap", t.reset_gap},       {"substeps", t.substeps}};
  j["smoother"] = {{"process_var", cfg.eval.smoother.process_var},
                   {"measurement_var", cfg.eval.smoother.measurement_var}};
  j["eval"] = {{"warmup", cfg.eval.warmup}};

  oj site;
  site["area"] = {{"lo", pt(cfg.site.area.lo)}, {"hi", pt(cfg.site.area.hi)}};
  auto segs = [&](const std::vector<Segment>& v) {
    oj a = oj::array();
    for (const auto& sg : v) a.push_back({{"a", pt(sg.a)}, {"b", pt(sg.b)}});
    return a;
  };
  site["walls"] = segs(cfg.site.walls);
  site["obstacles"] = segs(cfg.site.obstacles);
  j["site"] = site;
  j["hdop_resolution"] = cfg.hdop_resolution;
  if (cfg.hdop_reference) j["hdop_reference"] = *cfg.hdop_reference;
  j["out_dir"] = cfg.out_dir;
  return j;
}

ScenarioConfig demo_config(std::uint64_t seed) {
  ScenarioConfig cfg;
  Scenario& s = cfg.scenario;
  s.seed = seed;
  s.duration = 60.0;
  Rng rng(seed ^ 0x5eedc10cULL);
  std::uniform_real_distribution<double> offset(-8e-3, 8e-3);
  std::uniform_real_distribution<double> skew(-40e-6, 40e-6);

  const std::vector<std::pair<AnchorId, Point2>> corners{
      {"MA1", {0.0, 0.0}}, {"SA1", {6.0, 0.0}}, {"SA2", {6.0, 4.0}}, {"SA3", {0.0, 4.0}}};
  for (const auto& [id, pos] : corners) {
    AnchorConfig a;
    a.id = id;
    a.role = id == "MA1" ? AnchorRole::kMaster : AnchorRole::kSlave;
    a.position = pos;
    a.height = 1.8;
    a.clock.offset = offset(rng);
    a.clock.skew = skew(rng);
    a.clock.jitter_std = 100e-12;
    s.topology.anchors.push_back(a);
    if (id != "MA1") s.topology.follow[id] = {"MA1"};
  }
  s.topology.master_level["MA1"] = 1;
  s.topology.lag_slots["MA1"] = 0;

  s.tags.push_back({"T1", Trajectory::fixed({2.5, 1.5}), 0.0});
  s.tags.push_back(
      {"T2", Trajectory::rectangle_loop({1.0, 1.0}, {5.0, 3.0}, 1.0, s.duration), 0.05});

  cfg.site.area = {{0.0, 0.0}, {6.0, 4.0}};
  sync_derived(cfg);
  return cfg;
}

}  // namespace uwb::config
