#include "uwbrtls/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace uwb {

namespace {

// Below this distance the unit vector to an anchor is undefined.
constexpr double kCoincident = 1e-9;

std::string describe(const std::vector<Point2>& pts) {
  std::string s = "ambiguous position, candidates:";
  for (const auto& p : pts) {
    s += " (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) + ")";
  }
  return s;
}

struct PairTerm {
  Point2 a;
  Point2 b;
  double measured;  // d_hat_a - d_hat_b
};

// Expands a TdoaSet into the full set of anchor pairs used by the LS objective.
std::vector<PairTerm> pair_terms(const TdoaSet& meas, const AnchorPositions& anchors) {
  std::vector<std::pair<Point2, double>> pts;
  pts.emplace_back(anchors.at(meas.reference_anchor), 0.0);
  for (const auto& [id, d] : meas.measurements) pts.emplace_back(anchors.at(id), d);
  std::vector<PairTerm> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      out.push_back({pts[i].first, pts[j].first, pts[i].second - pts[j].second});
    }
  }
  return out;
}

double cost(const Point2& p, const std::vector<PairTerm>& terms) {
  double sum = 0.0;
  for (const auto& t : terms) {
    const double r = (p - t.a).norm() - (p - t.b).norm() - t.measured;
    sum += r * r;
  }
  return sum;
}

Point2 unit_from(const Point2& anchor, const Point2& p) {
  const Point2 d = p - anchor;
  const double n = d.norm();
  return n < kCoincident ? Point2::Zero() : Point2(d / n);
}

// Levenberg-Marquardt on the pairwise residuals.
Point2 refine(Point2 p, const std::vector<PairTerm>& terms, const solver::LsOptions& opts) {
  double lambda = 1e-3;
  double current = cost(p, terms);
  for (int it = 0; it < opts.max_iterations; ++it) {
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (const auto& t : terms) {
      const double r = (p - t.a).norm() - (p - t.b).norm() - t.measured;
      const Eigen::Vector2d row = unit_from(t.a, p) - unit_from(t.b, p);
      jtj += row * row.transpose();
      jtr += row * r;
    }
    bool accepted = false;
    for (int tries = 0; tries < 20 && !accepted; ++tries) {
      Eigen::Matrix2d damped = jtj;
      damped.diagonal().array() += lambda * (1.0 + jtj.diagonal().array());
      const Eigen::Vector2d step = damped.ldlt().solve(-jtr);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Point2 candidate = p + step;
      const double next = cost(candidate, terms);
      if (next <= current) {
        p = candidate;
        current = next;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (step.norm() < opts.step_tolerance) return p;
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) return p;
  }
  return p;
}

}  // namespace

AmbiguityError::AmbiguityError(std::vector<Point2> candidates)
    : Error(ErrorCode::kAmbiguousSolution, describe(candidates)),
      candidates_(std::move(candidates)) {}

namespace solver {

Matrix4 process_noise(double accel_std, double dt) {
  const double q = accel_std * accel_std;
  const double dt2 = dt * dt;
  const double dt3 = dt2 * dt;
  const double dt4 = dt3 * dt;
  Matrix4 Q = Matrix4::Zero();
  for (int axis = 0; axis < 2; ++axis) {
    Q(axis, axis) = dt4 / 4.0 * q;
    Q(axis, axis + 2) = dt3 / 2.0 * q;
    Q(axis + 2, axis) = dt3 / 2.0 * q;
    Q(axis + 2, axis + 2) = dt2 * q;
  }
  return Q;
}

Eigen::MatrixXd measurement_noise(std::size_t rows, double toa_std) {
  const double sigma = kSpeedOfLight * toa_std;
  const auto n = static_cast<Eigen::Index>(rows);
  Eigen::MatrixXd R = Eigen::MatrixXd::Constant(n, n, sigma * sigma);
  R.diagonal().array() += sigma * sigma;
  return R;
}

double range_difference(const Point2& p, const Point2& anchor, const Point2& reference) {
  return (p - anchor).norm() - (p - reference).norm();
}

std::optional<Point2> range_difference_gradient(const Point2& p, const Point2& anchor,
                                                const Point2& reference) {
  const double ed_i = (p - anchor).norm();
  const double ed_ref = (p - reference).norm();
  if (ed_i < kCoincident || ed_ref < kCoincident) return std::nullopt;
  return Point2((p - anchor) / ed_i - (p - reference) / ed_ref);
}

EkfState ekf_predict(const EkfState& s) {
  Matrix4 F = Matrix4::Identity();
  F(0, 2) = s.dt;
  F(1, 3) = s.dt;
  EkfState out = s;
  out.x = F * s.x;
  out.P = F * s.P * F.transpose() + s.Q;
  out.P = (0.5 * (out.P + out.P.transpose())).eval();
  return out;
}

UpdateResult ekf_update(const EkfState& s, const TdoaSet& meas, const AnchorPositions& anchors) {
  UpdateResult result;
  result.state = s;
  result.fix.tag_id = meas.tag_id;
  result.fix.blink_seq = meas.blink_seq;

  const Point2 p = s.x.head<2>();
  auto ref_it = anchors.find(meas.reference_anchor);

  struct Row {
    Point2 anchor;
    Point2 grad;
    double measured;
  };
  std::vector<Row> rows;
  if (ref_it != anchors.end()) {
    for (const auto& [id, d] : meas.measurements) {
      auto it = anchors.find(id);
      if (it == anchors.end()) continue;
      auto grad = range_difference_gradient(p, it->second, ref_it->second);
      if (!grad) continue;
      rows.push_back({it->second, *grad, d});
    }
  }

  auto finish_fix = [&](const EkfState& st) {
    result.fix.position = st.x.head<2>();
    result.fix.velocity = st.x.tail<2>();
    result.fix.position_std = std::sqrt(std::max(0.0, st.P(0, 0) + st.P(1, 1)));
    double rss = 0.0;
    if (ref_it != anchors.end()) {
      for (const auto& r : rows) {
        const double res =
            r.measured - range_difference(st.x.head<2>(), r.anchor, ref_it->second);
        rss += res * res;
      }
    }
    result.fix.residual_norm = std::sqrt(rss);
  };

  result.rows_used = rows.size();
  if (rows.empty()) {
    result.applied = false;
    result.diagnostic = ErrorCode::kInsufficientAnchors;
    finish_fix(s);
    return result;
  }

  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, 4);
  Eigen::VectorXd innovation(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    H(i, 0) = r.grad.x();
    H(i, 1) = r.grad.y();
    innovation(i) = r.measured - range_difference(p, r.anchor, ref_it->second);
  }

  const Eigen::MatrixXd S = H * s.P * H.transpose() + measurement_noise(rows.size(), s.toa_std);
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    result.applied = false;
    result.diagnostic = ErrorCode::kSingularInnovation;
    finish_fix(s);
    return result;
  }
  // K = P H^T S^-1, computed as (S^-1 H P)^T with S symmetric.
  const Eigen::MatrixXd gain = llt.solve(H * s.P).transpose();

  EkfState out = s;
  out.x = s.x + gain * innovation;
  out.P = (Matrix4::Identity() - gain * H) * s.P;
  out.P = (0.5 * (out.P + out.P.transpose())).eval();
  result.state = out;
  finish_fix(out);
  return result;
}

double ls_objective(const Point2& p, const TdoaSet& meas, const AnchorPositions& anchors) {
  return cost(p, pair_terms(meas, anchors));
}

Point2 ls_solve(const TdoaSet& meas, const AnchorPositions& anchors,
                const std::optional<Point2>& init, const LsOptions& opts) {
  if (meas.measurements.size() < 3) {
    throw Error(ErrorCode::kInsufficientAnchors, "least squares needs three range differences");
  }
  if (!anchors.count(meas.reference_anchor)) {
    throw Error(ErrorCode::kInsufficientAnchors, "unknown reference anchor");
  }
  for (const auto& [id, _] : meas.measurements) {
    if (!anchors.count(id)) throw Error(ErrorCode::kInsufficientAnchors, "unknown anchor " + id);
  }
  const auto terms = pair_terms(meas, anchors);

  // Bounding box, squared up and padded so mirror images across a line of
  // anchors are still inside the search region.
  Point2 lo = anchors.at(meas.reference_anchor);
  Point2 hi = lo;
  for (const auto& [id, _] : meas.measurements) {
    lo = lo.cwiseMin(anchors.at(id));
    hi = hi.cwiseMax(anchors.at(id));
  }
  const double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1.0});
  for (int axis = 0; axis < 2; ++axis) {
    const double extent = hi[axis] - lo[axis];
    const double grow = std::max(0.0, 0.5 * (span - extent)) + 0.1 * span;
    lo[axis] -= grow;
    hi[axis] += grow;
  }

  const int nx = static_cast<int>(std::floor((hi.x() - lo.x()) / opts.grid_step)) + 1;
  const int ny = static_cast<int>(std::floor((hi.y() - lo.y()) / opts.grid_step)) + 1;
  std::vector<double> grid(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  auto at = [&](int ix, int iy) -> double& {
    return grid[static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) +
                static_cast<std::size_t>(ix)];
  };
  auto point = [&](int ix, int iy) {
    return Point2(lo.x() + ix * opts.grid_step, lo.y() + iy * opts.grid_step);
  };
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) at(ix, iy) = cost(point(ix, iy), terms);
  }

  // Grid cells no worse than their 8 neighbours.
  std::vector<std::pair<double, Point2>> seeds;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const double v = at(ix, iy);
      bool local_min = true;
      for (int dy = -1; dy <= 1 && local_min; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int jx = ix + dx;
          const int jy = iy + dy;
          if (jx < 0 || jy < 0 || jx >= nx || jy >= ny) continue;
          if (at(jx, jy) < v) {
            local_min = false;
            break;
          }
        }
      }
      if (local_min) seeds.emplace_back(v, point(ix, iy));
    }
  }
  std::sort(seeds.begin(), seeds.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  if (seeds.size() > static_cast<std::size_t>(opts.refine_starts)) {
    seeds.resize(static_cast<std::size_t>(opts.refine_starts));
  }
  if (init) seeds.emplace_back(cost(*init, terms), *init);

  std::vector<std::pair<double, Point2>> minima;
  for (const auto& [_, start] : seeds) {
    const Point2 p = refine(start, terms, opts);
    const double c = cost(p, terms);
    bool duplicate = false;
    for (auto& [mc, mp] : minima) {
      if ((mp - p).norm() < opts.ambiguity_separation) {
        if (c < mc) {
          mc = c;
          mp = p;
        }
        duplicate = true;
        break;
      }
    }
    if (!duplicate) minima.emplace_back(c, p);
  }
  std::sort(minima.begin(), minima.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  const double best = minima.front().first;
  std::vector<Point2> close;
  for (const auto& [c, p] : minima) {
    if (c <= 2.0 * best + opts.ambiguity_floor) close.push_back(p);
  }
  if (close.size() > 1) throw AmbiguityError(std::move(close));
  return minima.front().second;
}

Tracker::Tracker(AnchorPositions anchors, TrackerConfig cfg)
    : anchors_(std::move(anchors)), cfg_(cfg) {
  cfg_.substeps = std::max(1, cfg_.substeps);
  state_.dt = cfg_.blink_period / cfg_.substeps;
  state_.Q = process_noise(cfg_.accel_std, state_.dt);
  state_.toa_std = cfg_.toa_std;
}

bool Tracker::initialize(const TdoaSet& set) {
  Point2 p;
  try {
    p = ls_solve(set, anchors_);
  } catch (const Error&) {
    return false;
  }
  state_.x << p.x(), p.y(), 0.0, 0.0;
  state_.P = Matrix4::Zero();
  state_.P(0, 0) = state_.P(1, 1) = cfg_.init_pos_std * cfg_.init_pos_std;
  state_.P(2, 2) = state_.P(3, 3) = cfg_.init_vel_std * cfg_.init_vel_std;
  initialized_ = true;
  last_seq_ = set.blink_seq;
  return true;
}

std::optional<Fix> Tracker::step(const TdoaSet& set) {
  if (initialized_) {
    const std::uint32_t gap = set.blink_seq - last_seq_;
    if (gap == 0 || gap > 0x80000000u) return std::nullopt;  // duplicate or out of order
    if (gap > static_cast<std::uint32_t>(cfg_.reset_gap)) {
      initialized_ = false;
      ++resets_;
    } else {
      for (std::uint32_t i = 0; i < gap * static_cast<std::uint32_t>(cfg_.substeps); ++i) {
        state_ = ekf_predict(state_);
      }
    }
  }
  if (!initialized_ && !initialize(set)) return std::nullopt;

  last_seq_ = set.blink_seq;
  auto result = ekf_update(state_, set, anchors_);
  if (!result.applied) ++skipped_;
  state_ = result.state;
  return result.fix;
}

std::vector<Fix> track(const std::vector<TdoaSet>& blink_stream, const AnchorPositions& anchors,
                       const TrackerConfig& cfg) {
  Tracker tracker(anchors, cfg);
  std::vector<Fix> out;
  for (const auto& set : blink_stream) {
    if (auto fix = tracker.step(set)) out.push_back(std::move(*fix));
  }
  return out;
}

}  // namespace solver

}  // namespace uwb
