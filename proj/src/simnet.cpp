#include "uwbrtls/simnet.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "uwbrtls/error.hpp"

namespace uwb {

Trajectory Trajectory::fixed(const Point2& p) {
  Trajectory t;
  t.kind = Kind::kStatic;
  t.start = p;
  return t;
}

Trajectory Trajectory::moving(const Point2& start, const Point2& velocity) {
  Trajectory t;
  t.kind = Kind::kConstantVelocity;
  t.start = start;
  t.velocity = velocity;
  return t;
}

Trajectory Trajectory::through(std::vector<std::pair<double, Point2>> waypoints) {
  Trajectory t;
  t.kind = Kind::kWaypoints;
  t.waypoints = std::move(waypoints);
  if (!t.waypoints.empty()) t.start = t.waypoints.front().second;
  return t;
}

Trajectory Trajectory::rectangle_loop(const Point2& lo, const Point2& hi, double speed,
                                      double duration) {
  const std::vector<Point2> corners{lo, {hi.x(), lo.y()}, hi, {lo.x(), hi.y()}};
  std::vector<std::pair<double, Point2>> pts{{0.0, lo}};
  double t = 0.0;
  std::size_t i = 0;
  while (t <= duration) {
    const Point2& from = corners[i % 4];
    const Point2& to = corners[(i + 1) % 4];
    t += (to - from).norm() / speed;
    pts.emplace_back(t, to);
    ++i;
  }
  return through(std::move(pts));
}

Point2 Trajectory::at(double t) const {
  switch (kind) {
    case Kind::kStatic:
      return start;
    case Kind::kConstantVelocity:
      return start + velocity * t;
    case Kind::kWaypoints: {
      if (waypoints.empty()) return start;
      if (t <= waypoints.front().first) return waypoints.front().second;
      if (t >= waypoints.back().first) return waypoints.back().second;
      auto hi = std::upper_bound(waypoints.begin(), waypoints.end(), t,
                                 [](double v, const auto& w) { return v < w.first; });
      auto lo = std::prev(hi);
      const double u = (t - lo->first) / (hi->first - lo->first);
      return lo->second + u * (hi->second - lo->second);
    }
  }
  return start;
}

void Trajectory::validate() const {
  if (!start.allFinite() || !velocity.allFinite()) {
    throw Error(ErrorCode::kInvalidScenario, "trajectory has non-finite values");
  }
  if (kind == Kind::kWaypoints) {
    if (waypoints.empty()) throw Error(ErrorCode::kInvalidScenario, "trajectory has no waypoints");
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
      if (!waypoints[i].second.allFinite() || !std::isfinite(waypoints[i].first)) {
        throw Error(ErrorCode::kInvalidScenario, "waypoint is not finite");
      }
      if (i > 0 && !(waypoints[i].first > waypoints[i - 1].first)) {
        throw Error(ErrorCode::kInvalidScenario, "waypoint times must strictly increase");
      }
    }
  }
}

bool ReceptionModel::hears(const std::string& rx, const std::string& tx, double distance) const {
  if (!adjacency.empty()) {
    auto a = adjacency.find(rx);
    if (a != adjacency.end() && a->second.count(tx)) return true;
    auto b = adjacency.find(tx);
    return b != adjacency.end() && b->second.count(rx) != 0;
  }
  if (radius) return distance <= *radius;
  return true;
}

namespace simnet {

std::vector<std::pair<AnchorId, double>> schedule_ccp_cascade(const NetworkTopology& topo,
                                                              double round_start, double lag) {
  const AnchorId primary = topo.primary();
  if (primary.empty()) throw Error(ErrorCode::kInvalidTopology, "no primary master");

  std::map<AnchorId, double> tx{{primary, round_start}};
  auto masters = topo.masters();
  std::stable_sort(masters.begin(), masters.end(), [&](const AnchorId& a, const AnchorId& b) {
    return topo.level(a) < topo.level(b);
  });
  for (const auto& m : masters) {
    if (m == primary) continue;
    const auto& up = topo.followed(m);
    if (up.size() != 1) continue;
    auto it = tx.find(*up.begin());
    if (it == tx.end()) continue;  // upper master never fires
    tx[m] = it->second + topo.lag_slot(m) * lag + topo.baseline(m, *up.begin()) / kSpeedOfLight;
  }

  std::vector<std::pair<AnchorId, double>> out(tx.begin(), tx.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second < b.second || (a.second == b.second && a.first < b.first);
  });
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      if (std::abs(out[j].second - out[i].second) < lag / 2.0) {
        throw Error(ErrorCode::kCollisionSchedule,
                    "CCP collision between " + out[i].first + " and " + out[j].first);
      }
    }
  }
  return out;
}

}  // namespace simnet

void Scenario::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidScenario, what); };
  if (!(blink_period > 0.0)) bad("blink_period must be positive");
  if (!(ccp_period > 0.0)) bad("ccp_period must be positive");
  if (!(lag > 0.0)) bad("lag must be positive");
  if (!(duration >= 0.0) || !std::isfinite(duration)) bad("duration must be non-negative");
  if (reception.radius && !(*reception.radius > 0.0)) bad("reception radius must be positive");
  timer.validate();

  if (auto issues = topology.problems(); !issues.empty()) bad("topology: " + issues.front());
  for (const auto& a : topology.anchors) a.clock.validate();

  int max_slot = 0;
  for (const auto& [_, slot] : topology.lag_slots) max_slot = std::max(max_slot, slot);
  if (!(lag * (max_slot + 1) < ccp_period)) bad("lag slots overrun the CCP period");
  const auto schedule = simnet::schedule_ccp_cascade(topology, 0.0, lag);
  if (!(schedule.back().second + lag / 2.0 < ccp_period)) {
    bad("CCP cascade does not finish within one CCP period");
  }

  std::set<std::string> ids;
  for (const auto& a : topology.anchors) ids.insert(a.id);
  for (const auto& t : tags) {
    if (t.id.empty()) bad("tag with empty id");
    if (!ids.insert(t.id).second) bad("duplicate id '" + t.id + "'");
    if (!(t.phase >= 0.0)) bad("tag phase must be non-negative");
    t.trajectory.validate();
  }
}

namespace simnet {

namespace {

struct TxEvent {
  double t;
  int order;  // blink before CCP at identical times
  std::string source;
  bool is_blink;
  std::uint32_t seq;
  Point2 position;
};

struct Emitted {
  double t;
  std::size_t serial;
  ToaReport report;
};

}  // namespace

SimulationResult run_scenario(const Scenario& s) {
  s.validate();
  Rng rng(s.seed);
  const auto& topo = s.topology;
  SimulationResult result;

  std::vector<TxEvent> tx;
  for (const auto& tag : s.tags) {
    std::uint32_t seq = 0;
    for (double t = tag.phase; t < s.duration; t = tag.phase + s.blink_period * (seq)) {
      tx.push_back({t, 0, tag.id, true, seq, tag.trajectory.at(t)});
      result.truth.push_back({tag.id, seq, t, tag.trajectory.at(t)});
      ++seq;
    }
  }

  // CCP rounds. A lower master only fires after actually hearing its upper master.
  std::map<AnchorId, std::uint32_t> ccp_seq;
  for (std::uint64_t n = 0;; ++n) {
    const double start = s.ccp_phase + s.ccp_period * static_cast<double>(n);
    if (!(start < s.duration)) break;
    const auto schedule = schedule_ccp_cascade(topo, start, s.lag);
    std::set<AnchorId> fired;
    for (const auto& [m, t] : schedule) {
      if (m != topo.primary()) {
        const AnchorId& up = *topo.followed(m).begin();
        if (!fired.count(up) || !s.reception.hears(m, up, topo.baseline(m, up))) continue;
      }
      fired.insert(m);
      tx.push_back({t, 1, m, false, ccp_seq[m]++, topo.anchor(m).position});
    }
  }
  std::sort(tx.begin(), tx.end(), [](const TxEvent& a, const TxEvent& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.order != b.order) return a.order < b.order;
    return a.source < b.source;
  });

  std::vector<Emitted> emitted;
  std::size_t serial = 0;
  for (const auto& ev : tx) {
    if (!ev.is_blink) {
      const auto& clock = topo.anchor(ev.source).clock;
      emitted.push_back(
          {ev.t, serial++, ToaReport::ccp_tx(ev.source, ev.seq, read_clock(clock, ev.t, rng, s.timer))});
    }
    for (const auto& a : topo.anchors) {
      if (a.id == ev.source) continue;
      const double d = (a.position - ev.position).norm();
      if (!s.reception.hears(a.id, ev.source, d)) continue;
      const double t_rx = ev.t + d / kSpeedOfLight;
      const Timestamp ts = read_clock(a.clock, t_rx, rng, s.timer);
      emitted.push_back({t_rx, serial++,
                         ev.is_blink ? ToaReport::blink_rx(a.id, ev.source, ev.seq, ts)
                                     : ToaReport::ccp_rx(a.id, ev.source, ev.seq, ts)});
    }
  }
  std::stable_sort(emitted.begin(), emitted.end(), [](const Emitted& a, const Emitted& b) {
    return a.t < b.t || (a.t == b.t && a.serial < b.serial);
  });
  result.reports.reserve(emitted.size());
  for (auto& e : emitted) result.reports.push_back(std::move(e.report));

  for (const auto& a : topo.anchors) result.clocks.push_back({a.id, a.clock});
  return result;
}

std::string encode_truth(const BlinkTruth& truth) {
  nlohmann::ordered_json j;
  j["kind"] = "blink";
  j["tag_id"] = truth.tag_id;
  j["seq"] = truth.seq;
  j["t"] = truth.t;
  j["x"] = truth.position.x();
  j["y"] = truth.position.y();
  return j.dump();
}

std::string encode_clock_truth(const ClockTruth& clock) {
  nlohmann::ordered_json j;
  j["kind"] = "clock";
  j["anchor_id"] = clock.anchor_id;
  j["offset"] = clock.clock.offset;
  j["skew"] = clock.clock.skew;
  j["drift_rate"] = clock.clock.drift_rate;
  j["jitter_std"] = clock.clock.jitter_std;
  return j.dump();
}

std::optional<BlinkTruth> decode_truth(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line.begin(), line.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedJson, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kMalformedJson, "truth line must be an object");
  if (j.value("kind", std::string("blink")) != "blink") return std::nullopt;
  try {
    BlinkTruth t;
    t.tag_id = j.at("tag_id").get<std::string>();
    t.seq = j.at("seq").get<std::uint32_t>();
    t.t = j.at("t").get<double>();
    t.position = Point2(j.at("x").get<double>(), j.at("y").get<double>());
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMissingField, e.what());
  }
}

}  // namespace simnet

}  // namespace uwb
