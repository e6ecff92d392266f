#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uwbrtls/error.hpp"
#include "uwbrtls/timebase.hpp"
#include "uwbrtls/topology.hpp"

namespace uwb {

using Vector4 = Eigen::Vector4d;
using Matrix4 = Eigen::Matrix4d;

/// Constant-velocity EKF state [x, y, vx, vy].
struct EkfState {
  Vector4 x = Vector4::Zero();
  Matrix4 P = Matrix4::Identity();
  Matrix4 Q = Matrix4::Zero();
  double dt = 0.1;
  // Per-anchor ToA noise (seconds) used to build R for each update.
  double toa_std = 0.2e-9;
};

struct Fix {
  std::string tag_id;
  std::uint32_t blink_seq = 0;
  Point2 position = Point2::Zero();
  Point2 velocity = Point2::Zero();
  double position_std = 0.0;
  double residual_norm = 0.0;
};

/// Errors raised by ls_solve when several well-separated minima fit equally well.
class AmbiguityError : public Error {
 public:
  explicit AmbiguityError(std::vector<Point2> candidates);
  const std::vector<Point2>& candidates() const noexcept { return candidates_; }

 private:
  std::vector<Point2> candidates_;
};

struct TrackerConfig {
  double blink_period = 0.1;   // seconds between consecutive blink seqs
  double accel_std = 1.0;      // m/s^2, white-noise acceleration
  double toa_std = 0.2e-9;     // seconds, effective per-anchor synced ToA noise
  double init_pos_std = 0.3;   // meters
  double init_vel_std = 1.0;   // m/s
  int reset_gap = 10;          // blink periods
  int substeps = 1;            // predict steps per blink period
};

namespace solver {

/// Discrete white-noise-acceleration process covariance.
Matrix4 process_noise(double accel_std, double dt);

/// R = (c * toa_std)^2 (I + 1 1^T): every difference shares the reference ToA.
Eigen::MatrixXd measurement_noise(std::size_t rows, double toa_std);

/// |p - p_i| - |p - p_ref|
double range_difference(const Point2& p, const Point2& anchor, const Point2& reference);

/// Row of the TDoA Jacobian w.r.t. position; nullopt when p sits on either anchor.
std::optional<Point2> range_difference_gradient(const Point2& p, const Point2& anchor,
                                                const Point2& reference);

EkfState ekf_predict(const EkfState& s);

struct UpdateResult {
  EkfState state;
  Fix fix;
  bool applied = true;
  std::optional<ErrorCode> diagnostic;
  std::size_t rows_used = 0;
};

/// Measurement update with the stacked range differences of one TdoaSet.
/// Rows whose anchor coincides with the estimate are dropped; a singular
/// innovation covariance leaves the state unchanged and sets `diagnostic`.
UpdateResult ekf_update(const EkfState& s, const TdoaSet& meas, const AnchorPositions& anchors);

struct LsOptions {
  double grid_step = 0.1;
  double step_tolerance = 1e-6;
  int max_iterations = 100;
  int refine_starts = 8;
  double ambiguity_separation = 0.05;  // meters between distinct minima
  double ambiguity_floor = 1e-9;       // m^2 added to 2x best cost
};

/// Sum over all anchor pairs of (d_ij(p) - d_hat_ij)^2.
double ls_objective(const Point2& p, const TdoaSet& meas, const AnchorPositions& anchors);

/// Global minimizer of ls_objective: coarse grid over the (padded) anchor
/// bounding box, then Levenberg-Marquardt refinement of the best grid cells.
Point2 ls_solve(const TdoaSet& meas, const AnchorPositions& anchors,
                const std::optional<Point2>& init = std::nullopt, const LsOptions& opts = {});

/// One tag's EKF over a chronological stream of TdoaSets.
class Tracker {
 public:
  Tracker(AnchorPositions anchors, TrackerConfig cfg = {});

  /// Returns a fix, or nullopt when the set could not initialize the track.
  std::optional<Fix> step(const TdoaSet& set);

  bool initialized() const { return initialized_; }
  const EkfState& state() const { return state_; }
  std::size_t resets() const { return resets_; }
  std::size_t skipped_updates() const { return skipped_; }

 private:
  bool initialize(const TdoaSet& set);

  AnchorPositions anchors_;
  TrackerConfig cfg_;
  EkfState state_;
  bool initialized_ = false;
  std::uint32_t last_seq_ = 0;
  std::size_t resets_ = 0;
  std::size_t skipped_ = 0;
};

std::vector<Fix> track(const std::vector<TdoaSet>& blink_stream, const AnchorPositions& anchors,
                       const TrackerConfig& cfg = {});

}  // namespace solver

}  // namespace uwb
