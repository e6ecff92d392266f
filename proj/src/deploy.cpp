#include "uwbrtls/deploy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "uwbrtls/error.hpp"
#include "uwbrtls/timebase.hpp"

namespace uwb {

std::string_view to_string(RuleStatus status) {
  switch (status) {
    case RuleStatus::kPass: return "pass";
    case RuleStatus::kFail: return "fail";
    case RuleStatus::kManual: return "manual";
    case RuleStatus::kNotEvaluated: return "not_evaluated";
  }
  return "unknown";
}

namespace deploy {

namespace {

constexpr double kMinAnchorSpacing = 3.0;
constexpr double kMinAreaSide = 3.0;
constexpr double kMaxHeightSpread = 1.0;
constexpr double kMinDetachment = 0.15;
constexpr double kPreferredDetachment = 0.5;
constexpr int kMinLosSlaves = 3;

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
}

// Proper crossing only; touching endpoints do not block.
bool crosses(const Segment& s, const Segment& t) {
  const double d1 = cross(t.a, t.b, s.a);
  const double d2 = cross(t.a, t.b, s.b);
  const double d3 = cross(s.a, s.b, t.a);
  const double d4 = cross(s.a, s.b, t.b);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

double point_segment_distance(const Point2& p, const Segment& s) {
  const Point2 d = s.b - s.a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (p - s.a).norm();
  const double u = std::clamp((p - s.a).dot(d) / len2, 0.0, 1.0);
  return (p - (s.a + u * d)).norm();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

RuleResult rule_a(const NetworkTopology& topo, const Site& site) {
  std::vector<Segment> blockers = site.walls;
  blockers.insert(blockers.end(), site.obstacles.begin(), site.obstacles.end());
  RuleResult r{'a', RuleStatus::kPass, ""};
  for (const auto& m : topo.masters()) {
    int visible = 0;
    int followers = 0;
    for (const auto& a : topo.anchors) {
      if (topo.is_master(a.id) || !topo.followed(a.id).count(m)) continue;
      ++followers;
      const Segment link{topo.anchor(m).position, a.position};
      const bool blocked = std::any_of(blockers.begin(), blockers.end(),
                                       [&](const Segment& w) { return crosses(link, w); });
      if (!blocked) ++visible;
    }
    if (visible < kMinLosSlaves) r.status = RuleStatus::kFail;
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += m + ": line of sight to " + std::to_string(visible) + "/" +
                std::to_string(followers) + " slaves";
  }
  return r;
}

RuleResult rule_c(const NetworkTopology& topo) {
  RuleResult r{'c', RuleStatus::kPass, ""};
  double worst = 0.0;
  bool any = false;
  for (const auto& m : topo.masters()) {
    std::vector<double> h;
    for (const auto& a : topo.anchors) {
      if (a.height && (a.id == m || topo.followed(a.id).count(m))) h.push_back(*a.height);
    }
    if (h.size() < 2) continue;
    any = true;
    const auto [lo, hi] = std::minmax_element(h.begin(), h.end());
    worst = std::max(worst, *hi - *lo);
  }
  if (!any) return {'c', RuleStatus::kNotEvaluated, "no anchor heights given"};
  r.status = worst <= kMaxHeightSpread ? RuleStatus::kPass : RuleStatus::kFail;
  r.detail = "height variation " + fmt(worst) + " m (max 1 m)";
  return r;
}

RuleResult rule_d(const NetworkTopology& topo, const Site& site) {
  if (site.walls.empty()) return {'d', RuleStatus::kNotEvaluated, "no wall geometry given"};
  RuleResult r{'d', RuleStatus::kPass, ""};
  std::vector<std::string> close;
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& a : topo.anchors) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& w : site.walls) d = std::min(d, point_segment_distance(a.position, w));
    nearest = std::min(nearest, d);
    if (d < kMinDetachment) r.status = RuleStatus::kFail;
    if (d < kPreferredDetachment) close.push_back(a.id);
  }
  r.detail = "nearest wall " + fmt(nearest) + " m (min 0.15 m, preferred 0.5 m)";
  if (!close.empty()) {
    r.detail += "; below preferred:";
    for (const auto& id : close) r.detail += " " + id;
  }
  return r;
}

RuleResult rule_e(const NetworkTopology& topo, const Site& site) {
  RuleResult r{'e', RuleStatus::kPass, ""};
  double nearest = std::numeric_limits<double>::infinity();
  const auto& as = topo.anchors;
  for (std::size_t i = 0; i < as.size(); ++i) {
    for (std::size_t j = i + 1; j < as.size(); ++j) {
      double d2 = (as[i].position - as[j].position).squaredNorm();
      if (as[i].height && as[j].height) d2 += std::pow(*as[i].height - *as[j].height, 2);
      nearest = std::min(nearest, std::sqrt(d2));
    }
  }
  Area area = site.area;
  if (area.empty() || (area.width() == 0.0 && area.depth() == 0.0)) {
    area = {Point2::Constant(std::numeric_limits<double>::infinity()),
            Point2::Constant(-std::numeric_limits<double>::infinity())};
    for (const auto& a : as) {
      area.lo = area.lo.cwiseMin(a.position);
      area.hi = area.hi.cwiseMax(a.position);
    }
  }
  const bool spacing_ok = nearest > kMinAnchorSpacing;
  const bool area_ok = !area.empty() && area.width() >= kMinAreaSide && area.depth() >= kMinAreaSide;
  if (!spacing_ok || !area_ok) r.status = RuleStatus::kFail;
  r.detail = "min anchor distance " + fmt(nearest) + " m (> 3 m), area " +
             (area.empty() ? std::string("empty") : fmt(area.width()) + " x " + fmt(area.depth())) +
             " m (>= 3 x 3)";
  return r;
}

}  // namespace

std::vector<RuleResult> check_rules(const NetworkTopology& topo, const Site& site) {
  return {
      rule_a(topo, site),
      {'b', RuleStatus::kManual,
       "mount anchors above the tracked objects and keep tags clear of water, bodies and metal"},
      rule_c(topo),
      rule_d(topo, site),
      rule_e(topo, site),
      {'f', RuleStatus::kManual, "verify antenna orientation against the radiation pattern"},
  };
}

double hdop_at(const Point2& point, const AnchorPositions& anchors, const AnchorId& reference) {
  auto ref = anchors.find(reference);
  if (ref == anchors.end()) {
    throw Error(ErrorCode::kInsufficientAnchors, "reference anchor " + reference + " unknown");
  }
  if (anchors.size() < 4) {
    throw Error(ErrorCode::kInsufficientAnchors, "HDoP needs three non-reference anchors");
  }
  auto unit = [&](const Point2& a) -> std::optional<Point2> {
    const Point2 d = point - a;
    const double n = d.norm();
    if (n < 1e-9) return std::nullopt;
    return Point2(d / n);
  };
  const auto u_ref = unit(ref->second);
  if (!u_ref) return kInfiniteDop;

  Eigen::Matrix2d gtg = Eigen::Matrix2d::Zero();
  for (const auto& [id, pos] : anchors) {
    if (id == reference) continue;
    const auto u = unit(pos);
    if (!u) return kInfiniteDop;
    const Point2 row = *u - *u_ref;
    gtg += row * row.transpose();
  }
  const double det = gtg.determinant();
  const double scale = gtg.trace();
  if (!(scale > 0.0) || det <= 1e-12 * scale * scale) return kInfiniteDop;
  return std::sqrt(gtg.inverse().trace());
}

namespace {

std::vector<double> axis(double lo, double hi, double step) {
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) v.push_back(lo + static_cast<double>(k) * step);
  return v;
}

template <class F>
HdopGrid sample(const Area& area, double resolution, F&& f) {
  if (!(resolution > 0.0)) throw Error(ErrorCode::kConfig, "HDoP resolution must be positive");
  HdopGrid g;
  if (area.empty()) return g;
  const auto xs = axis(area.lo.x(), area.hi.x(), resolution);
  const auto ys = axis(area.lo.y(), area.hi.y(), resolution);
  g.nx = xs.size();
  g.ny = ys.size();
  g.samples.reserve(g.nx * g.ny);
  for (double y : ys) {
    for (double x : xs) g.samples.push_back({x, y, f(Point2(x, y))});
  }
  return g;
}

}  // namespace

HdopGrid hdop_grid(const Area& area, double resolution, const AnchorPositions& anchors,
                   const AnchorId& reference) {
  return sample(area, resolution, [&](const Point2& p) { return hdop_at(p, anchors, reference); });
}

HdopGrid hdop_grid(const Area& area, double resolution, const NetworkTopology& topo,
                   const std::optional<AnchorId>& reference) {
  AnchorId ref;
  if (reference) {
    ref = *reference;
  } else {
    std::set<AnchorId> all;
    for (const auto& a : topo.anchors) all.insert(a.id);
    ref = timebase::select_time_base(all, topo);
  }
  return hdop_grid(area, resolution, topo.positions(), ref);
}

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {  // lower chain
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {  // upper chain
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool inside_hull(const std::vector<Point2>& hull, const Point2& p) {
  if (hull.size() < 3) return false;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (cross(hull[i], hull[(i + 1) % hull.size()], p) < -1e-12) return false;
  }
  return true;
}

DeploymentReport evaluate_deployment(const NetworkTopology& topo, const Site& site,
                                     double resolution, const std::optional<AnchorId>& reference) {
  DeploymentReport report;
  report.rules = check_rules(topo, site);
  report.grid = hdop_grid(site.area, resolution, topo, reference);
  std::vector<Point2> pts;
  for (const auto& a : topo.anchors) pts.push_back(a.position);
  const auto hull = convex_hull(pts);
  for (const auto& s : report.grid.samples) {
    const Point2 p(s.x, s.y);
    const bool on_anchor = std::any_of(pts.begin(), pts.end(),
                                       [&](const Point2& a) { return (a - p).norm() < 1e-9; });
    if (!on_anchor && inside_hull(hull, p)) {
      report.worst_hdop_in_hull = std::max(report.worst_hdop_in_hull, s.hdop);
    }
  }
  return report;
}

std::string grid_csv(const HdopGrid& grid) {
  std::ostringstream os;
  os.precision(17);
  os << "x,y,hdop\n";
  for (const auto& s : grid.samples) {
    os << s.x << ',' << s.y << ',';
    if (std::isinf(s.hdop)) {
      os << "inf";
    } else {
      os << s.hdop;
    }
    os << '\n';
  }
  return os.str();
}

nlohmann::ordered_json to_json(const DeploymentReport& report) {
  nlohmann::ordered_json j;
  j["rule_results"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rules) {
    nlohmann::ordered_json e;
    e["rule"] = std::string(1, r.rule);
    e["status"] = std::string(to_string(r.status));
    e["detail"] = r.detail;
    j["rule_results"].push_back(e);
  }
  j["grid_nx"] = report.grid.nx;
  j["grid_ny"] = report.grid.ny;
  // JSON has no infinity; a degenerate hull shows up as null.
  if (std::isfinite(report.worst_hdop_in_hull)) {
    j["worst_hdop_in_hull"] = report.worst_hdop_in_hull;
  } else {
    j["worst_hdop_in_hull"] = nullptr;
  }
  return j;
}

}  // namespace deploy

}  // namespace uwb
