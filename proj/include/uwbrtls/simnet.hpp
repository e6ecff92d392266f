#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uwbrtls/clock.hpp"
#include "uwbrtls/protocol.hpp"
#include "uwbrtls/topology.hpp"

namespace uwb {

/// Tag motion in the horizontal plane.
struct Trajectory {
  enum class Kind { kStatic, kWaypoints, kConstantVelocity };

  Kind kind = Kind::kStatic;
  Point2 start = Point2::Zero();
  Point2 velocity = Point2::Zero();
  std::vector<std::pair<double, Point2>> waypoints;  // (time, position), linear in between

  static Trajectory fixed(const Point2& p);
  static Trajectory moving(const Point2& start, const Point2& velocity);
  static Trajectory through(std::vector<std::pair<double, Point2>> waypoints);
  /// Repeated counter-clockwise loop around an axis-aligned rectangle at `speed`.
  static Trajectory rectangle_loop(const Point2& lo, const Point2& hi, double speed,
                                   double duration);

  Point2 at(double t) const;
  void validate() const;
};

struct TagConfig {
  std::string id;
  Trajectory trajectory;
  double phase = 0.0;  // first blink time, seconds
};

/// Who hears whom. With neither a radius nor adjacency everybody hears everybody.
struct ReceptionModel {
  std::optional<double> radius;
  std::map<std::string, std::set<std::string>> adjacency;  // symmetric links

  bool hears(const std::string& rx, const std::string& tx, double distance) const;
};

struct Scenario {
  NetworkTopology topology;
  std::vector<TagConfig> tags;
  double blink_period = 0.1;
  double ccp_period = 0.15;
  double lag = 0.01;
  double duration = 10.0;
  double ccp_phase = 0.0;
  std::uint64_t seed = 42;
  ReceptionModel reception;
  TimerSpec timer;

  /// Throws Error(kInvalidScenario / kCollisionSchedule / kInvalidClock).
  void validate() const;
};

struct BlinkTruth {
  std::string tag_id;
  std::uint32_t seq = 0;
  double t = 0.0;
  Point2 position = Point2::Zero();
};

struct ClockTruth {
  AnchorId anchor_id;
  ClockModel clock;
};

struct SimulationResult {
  std::vector<ToaReport> reports;  // in true-time order
  std::vector<BlinkTruth> truth;   // evaluation only
  std::vector<ClockTruth> clocks;
};

namespace simnet {

/// CCP transmit times of one round. Lower-level masters fire their lag slot
/// after receiving the upper master's CCP. Throws kCollisionSchedule when two
/// transmissions are closer than lag / 2.
std::vector<std::pair<AnchorId, double>> schedule_ccp_cascade(const NetworkTopology& topo,
                                                              double round_start, double lag);

SimulationResult run_scenario(const Scenario& scenario);

std::string encode_truth(const BlinkTruth& truth);
std::string encode_clock_truth(const ClockTruth& clock);
/// Parses a truth line; returns nullopt for non-blink records (clock lines).
std::optional<BlinkTruth> decode_truth(std::string_view line);

}  // namespace simnet

}  // namespace uwb
