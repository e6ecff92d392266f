#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "uwbrtls/clock.hpp"
#include "uwbrtls/simnet.hpp"
#include "uwbrtls/topology.hpp"

namespace uwbtest {

using namespace uwb;

// Fine, wide timer that keeps quantization below a few femtoseconds.
inline TimerSpec fine_timer() { return TimerSpec{1e-14, 62}; }

inline AnchorConfig anchor(const std::string& id, AnchorRole role, Point2 p,
                           ClockModel clock = {}) {
  AnchorConfig a;
  a.id = id;
  a.role = role;
  a.position = p;
  a.clock = clock;
  return a;
}

inline ClockModel random_clock(Rng& rng, double jitter = 0.0) {
  std::uniform_real_distribution<double> offset(-8e-3, 8e-3);
  std::uniform_real_distribution<double> skew(-40e-6, 40e-6);
  ClockModel c;
  c.offset = offset(rng);
  c.skew = skew(rng);
  c.jitter_std = jitter;
  return c;
}

// MA1 + SA1..SA3 on the corners of a 6 m x 4 m rectangle.
inline NetworkTopology rectangle(Rng* rng = nullptr, double jitter = 0.0) {
  NetworkTopology t;
  const std::vector<std::pair<std::string, Point2>> corners{
      {"MA1", {0, 0}}, {"SA1", {6, 0}}, {"SA2", {6, 4}}, {"SA3", {0, 4}}};
  for (const auto& [id, p] : corners) {
    ClockModel c;
    if (rng) c = random_clock(*rng, jitter);
    c.jitter_std = jitter;
    t.anchors.push_back(anchor(id, id == "MA1" ? AnchorRole::kMaster : AnchorRole::kSlave, p, c));
    if (id != "MA1") t.follow[id] = {"MA1"};
  }
  t.master_level["MA1"] = 1;
  t.lag_slots["MA1"] = 0;
  return t;
}

// Cascaded masters: MA1 primary; MA2..MA4 secondaries with lag slots 1..3;
// MA5, MA6 third level behind MA4. Slaves sit between cells, some following
// two masters.
inline NetworkTopology cascade(Rng* rng = nullptr, double jitter = 0.0) {
  NetworkTopology t;
  auto add = [&](const std::string& id, AnchorRole role, Point2 p) {
    ClockModel c;
    if (rng) c = random_clock(*rng, jitter);
    c.jitter_std = jitter;
    t.anchors.push_back(anchor(id, role, p, c));
  };
  add("MA1", AnchorRole::kMaster, {0, 0});
  add("MA2", AnchorRole::kMaster, {6, 0});
  add("MA3", AnchorRole::kMaster, {0, 6});
  add("MA4", AnchorRole::kMaster, {-6, 0});
  add("MA5", AnchorRole::kMaster, {-12, 0});
  add("MA6", AnchorRole::kMaster, {-6, 6});
  add("SA1", AnchorRole::kSlave, {3, 3});
  add("SA2", AnchorRole::kSlave, {-3, 3});
  add("SA3", AnchorRole::kSlave, {3, -3});
  add("SA4", AnchorRole::kSlave, {-3, -3});
  add("SA5", AnchorRole::kSlave, {-9, 3});
  add("SA6", AnchorRole::kSlave, {-9, -3});
  t.master_level = {{"MA1", 1}, {"MA2", 2}, {"MA3", 2}, {"MA4", 2}, {"MA5", 3}, {"MA6", 3}};
  t.lag_slots = {{"MA1", 0}, {"MA2", 1}, {"MA3", 2}, {"MA4", 3}, {"MA5", 1}, {"MA6", 2}};
  t.follow = {{"MA2", {"MA1"}},        {"MA3", {"MA1"}}, {"MA4", {"MA1"}},
              {"MA5", {"MA4"}},        {"MA6", {"MA4"}}, {"SA1", {"MA2", "MA3"}},
              {"SA2", {"MA1", "MA4"}}, {"SA3", {"MA2"}}, {"SA4", {"MA4"}},
              {"SA5", {"MA5", "MA6"}}, {"SA6", {"MA5"}}};
  return t;
}

inline Scenario static_scenario(NetworkTopology topo, Point2 tag, double duration,
                                std::uint64_t seed = 42, TimerSpec timer = {}) {
  Scenario s;
  s.topology = std::move(topo);
  s.tags.push_back({"T1", Trajectory::fixed(tag), 0.0});
  s.duration = duration;
  s.seed = seed;
  s.timer = timer;
  return s;
}

// True TDoA of anchor a relative to anchor b for a tag at p, seconds.
inline double geometric_tdoa(const NetworkTopology& t, const Point2& p, const std::string& a,
                             const std::string& b) {
  return ((p - t.anchor(a).position).norm() - (p - t.anchor(b).position).norm()) / kSpeedOfLight;
}

}  // namespace uwbtest
