#include <doctest.h>

#include <Eigen/Geometry>

#include "support.hpp"
#include "uwbrtls/deploy.hpp"
#include "uwbrtls/error.hpp"

using namespace uwb;
using namespace uwbtest;

namespace {

const RuleResult& rule(const std::vector<RuleResult>& rs, char id) {
  return *std::find_if(rs.begin(), rs.end(), [&](const RuleResult& r) { return r.rule == id; });
}

AnchorPositions unit_square() {
  return {{"A", {0, 0}}, {"B", {1, 0}}, {"C", {1, 1}}, {"D", {0, 1}}};
}

}  // namespace

TEST_SUITE("deploy") {

TEST_CASE("every rule is reported once") {
  const auto rs = deploy::check_rules(rectangle(), Site{});
  REQUIRE(rs.size() == 6);
  for (char c = 'a'; c <= 'f'; ++c) {
    CHECK(std::count_if(rs.begin(), rs.end(), [&](const RuleResult& r) { return r.rule == c; }) == 1);
  }
  CHECK(rule(rs, 'b').status == RuleStatus::kManual);
  CHECK(rule(rs, 'f').status == RuleStatus::kManual);
}

TEST_CASE("6 m x 4 m rectangle passes spacing and area") {
  Site site;
  site.area = {{0, 0}, {6, 4}};
  const auto r = rule(deploy::check_rules(rectangle(), site), 'e');
  CHECK(r.status == RuleStatus::kPass);
  CHECK(r.detail.find("4 m") != std::string::npos);
}

TEST_CASE("anchors 2 m apart fail spacing") {
  auto t = rectangle();
  t.anchors[1].position = {2, 0};
  Site site;
  site.area = {{0, 0}, {6, 4}};
  CHECK(rule(deploy::check_rules(t, site), 'e').status == RuleStatus::kFail);
}

TEST_CASE("small area fails") {
  Site site;
  site.area = {{0, 0}, {6, 2.5}};
  CHECK(rule(deploy::check_rules(rectangle(), site), 'e').status == RuleStatus::kFail);
}

TEST_CASE("anchor heights") {
  auto t = rectangle();
  CHECK(rule(deploy::check_rules(t, Site{}), 'c').status == RuleStatus::kNotEvaluated);
  for (auto& a : t.anchors) a.height = 1.8;
  const auto same = rule(deploy::check_rules(t, Site{}), 'c');
  CHECK(same.status == RuleStatus::kPass);
  CHECK(same.detail.find("variation 0 m") != std::string::npos);
  t.anchors[2].height = 3.0;
  CHECK(rule(deploy::check_rules(t, Site{}), 'c').status == RuleStatus::kFail);
}

TEST_CASE("line of sight from the master") {
  Site site;
  CHECK(rule(deploy::check_rules(rectangle(), site), 'a').status == RuleStatus::kPass);
  site.obstacles.push_back({{3, -1}, {3, 5}});  // blocks MA1 -> SA1 and SA2
  CHECK(rule(deploy::check_rules(rectangle(), site), 'a').status == RuleStatus::kFail);
}

TEST_CASE("wall detachment") {
  Site site;
  site.walls = {{{-0.6, -1}, {-0.6, 5}}};
  CHECK(rule(deploy::check_rules(rectangle(), site), 'd').status == RuleStatus::kPass);
  site.walls = {{{-0.3, -1}, {-0.3, 5}}};
  const auto near = rule(deploy::check_rules(rectangle(), site), 'd');
  CHECK(near.status == RuleStatus::kPass);
  CHECK(near.detail.find("below preferred") != std::string::npos);
  site.walls = {{{-0.1, -1}, {-0.1, 5}}};
  CHECK(rule(deploy::check_rules(rectangle(), site), 'd').status == RuleStatus::kFail);
}

TEST_CASE("HDoP oracles") {
  CHECK(deploy::hdop_at({0.5, 0.5}, unit_square(), "A") == doctest::Approx(0.816496580927726).epsilon(1e-12));
  const auto rect = rectangle().positions();
  CHECK(deploy::hdop_at({2, 1.5}, rect, "MA1") == doctest::Approx(0.856918283149585).epsilon(1e-12));
  CHECK(deploy::hdop_at({3, 2}, rect, "MA1") == doctest::Approx(0.884537962671703).epsilon(1e-12));
}

TEST_CASE("HDoP at the square center is invariant under quarter turns") {
  auto sq = unit_square();
  const double h0 = deploy::hdop_at({0.5, 0.5}, sq, "A");
  const Eigen::Rotation2Dd quarter(M_PI / 2);
  const Point2 c(0.5, 0.5);
  for (int k = 0; k < 3; ++k) {
    for (auto& [_, p] : sq) p = quarter * (p - c) + c;
    CHECK(deploy::hdop_at(c, sq, "A") == doctest::Approx(h0).epsilon(1e-12));
  }
}

TEST_CASE("HDoP rigid-motion and scale invariance") {
  const auto rect = rectangle().positions();
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.3, 3.7), ang(0, 6.28), sh(-100, 100), sc(0.1, 50);
  for (int k = 0; k < 50; ++k) {
    const Point2 p(u(rng) * 1.5, u(rng));
    const double h = deploy::hdop_at(p, rect, "MA1");
    const Eigen::Rotation2Dd r(ang(rng));
    const Point2 d(sh(rng), sh(rng));
    const double s = sc(rng);
    AnchorPositions moved, scaled;
    for (const auto& [id, a] : rect) {
      moved[id] = r * a + d;
      scaled[id] = s * a;
    }
    CHECK(std::abs(deploy::hdop_at(r * p + d, moved, "MA1") - h) <= 1e-9 * h);
    CHECK(std::abs(deploy::hdop_at(s * p, scaled, "MA1") - h) <= 1e-9 * h);
  }
}

TEST_CASE("degenerate geometry gives the infinite sentinel") {
  const AnchorPositions line{{"A", {0, 0}}, {"B", {1, 0}}, {"C", {2, 0}}, {"D", {3, 0}}};
  CHECK(std::isinf(deploy::hdop_at({1.5, 0}, line, "A")));
  CHECK(std::isinf(deploy::hdop_at({1, 0}, unit_square(), "A")));
  CHECK_THROWS_AS(deploy::hdop_at({1, 1}, {{"A", {0, 0}}, {"B", {1, 0}}, {"C", {0, 1}}}, "A"), Error);
}

TEST_CASE("grid shape and hull behaviour") {
  const auto g = deploy::hdop_grid(Area{{0, 0}, {6, 4}}, 0.5, rectangle());
  CHECK(g.nx == 13);
  CHECK(g.ny == 9);
  CHECK(g.samples.size() == 117);
  CHECK(g.samples[1].x == 0.5);
  CHECK(g.samples[13].y == 0.5);

  const auto wide = deploy::hdop_grid(Area{{-6, -4}, {12, 8}}, 1.0, rectangle());
  const auto hull = deploy::convex_hull({{0, 0}, {6, 0}, {6, 4}, {0, 4}});
  double worst_inside = 0.0, best_outside = INFINITY;
  for (const auto& s : wide.samples) {
    const Point2 p(s.x, s.y);
    const bool interior = p.x() > 0.5 && p.x() < 5.5 && p.y() > 0.5 && p.y() < 3.5;
    const bool far = !deploy::inside_hull(hull, p) && (p.x() < -2 || p.x() > 8 || p.y() < -2 || p.y() > 6);
    if (interior) worst_inside = std::max(worst_inside, s.hdop);
    if (far) best_outside = std::min(best_outside, s.hdop);
  }
  CHECK(worst_inside < best_outside);
}

TEST_CASE("tiny and empty grids") {
  const auto one = deploy::hdop_grid(Area{{2, 2}, {2, 2}}, 0.5, rectangle());
  CHECK(one.samples.size() == 1);
  const auto none = deploy::hdop_grid(Area{{2, 2}, {1, 1}}, 0.5, rectangle());
  CHECK(none.samples.empty());
  CHECK(deploy::grid_csv(none) == "x,y,hdop\n");
}

TEST_CASE("report and CSV") {
  Site site;
  site.area = {{0, 0}, {6, 4}};
  const auto rep = deploy::evaluate_deployment(rectangle(), site, 0.5);
  CHECK(rep.worst_hdop_in_hull > 0.8);
  CHECK(std::isfinite(rep.worst_hdop_in_hull));
  const auto j = deploy::to_json(rep);
  CHECK(j["rule_results"].size() == 6);
  const auto csv = deploy::grid_csv(rep.grid);
  CHECK(csv.rfind("x,y,hdop\n0,0,inf\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 118);
}

}  // TEST_SUITE
