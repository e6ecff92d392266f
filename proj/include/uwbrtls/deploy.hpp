#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwbrtls/topology.hpp"

namespace uwb {

/// Axis-aligned location area. Empty when lo exceeds hi on either axis.
struct Area {
  Point2 lo = Point2::Zero();
  Point2 hi = Point2::Zero();

  bool empty() const { return lo.x() > hi.x() || lo.y() > hi.y(); }
  double width() const { return hi.x() - lo.x(); }
  double depth() const { return hi.y() - lo.y(); }
};

struct Segment {
  Point2 a = Point2::Zero();
  Point2 b = Point2::Zero();
};

/// Optional site description for the rule checks.
struct Site {
  Area area;
  std::vector<Segment> walls;      // detachment and line-of-sight blockers
  std::vector<Segment> obstacles;  // line-of-sight blockers only
};

enum class RuleStatus { kPass, kFail, kManual, kNotEvaluated };

std::string_view to_string(RuleStatus status);

struct RuleResult {
  char rule = 'a';
  RuleStatus status = RuleStatus::kPass;
  std::string detail;
};

struct HdopSample {
  double x = 0.0;
  double y = 0.0;
  double hdop = 0.0;
};

struct HdopGrid {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<HdopSample> samples;  // row-major, y outer
};

struct DeploymentReport {
  std::vector<RuleResult> rules;
  HdopGrid grid;
  double worst_hdop_in_hull = 0.0;
};

namespace deploy {

inline constexpr double kInfiniteDop = std::numeric_limits<double>::infinity();

/// Rules a-f, each exactly once; b and f are manual checks.
std::vector<RuleResult> check_rules(const NetworkTopology& topo, const Site& site);

/// sqrt(trace((G^T G)^-1)) with rows u_i - u_ref, u pointing from the anchor
/// to `point`. Infinite when the geometry is singular or `point` sits on an
/// anchor. Throws kInsufficientAnchors without three non-reference anchors.
double hdop_at(const Point2& point, const AnchorPositions& anchors, const AnchorId& reference);

/// Samples hdop_at at lo + k * resolution on both axes (hi inclusive).
HdopGrid hdop_grid(const Area& area, double resolution, const AnchorPositions& anchors,
                   const AnchorId& reference);

/// Same, with the reference chosen by the time-base rules for the full receiver set.
HdopGrid hdop_grid(const Area& area, double resolution, const NetworkTopology& topo,
                   const std::optional<AnchorId>& reference = std::nullopt);

/// Convex hull of the anchors, counter-clockwise.
std::vector<Point2> convex_hull(std::vector<Point2> points);
bool inside_hull(const std::vector<Point2>& hull, const Point2& p);

DeploymentReport evaluate_deployment(const NetworkTopology& topo, const Site& site,
                                     double resolution,
                                     const std::optional<AnchorId>& reference = std::nullopt);

std::string grid_csv(const HdopGrid& grid);
nlohmann::ordered_json to_json(const DeploymentReport& report);

}  // namespace deploy

}  // namespace uwb
