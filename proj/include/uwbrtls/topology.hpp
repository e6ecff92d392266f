#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uwbrtls/clock.hpp"

namespace uwb {

using AnchorId = std::string;
using Point2 = Eigen::Vector2d;
using AnchorPositions = std::map<AnchorId, Point2>;

enum class AnchorRole { kMaster, kSlave };

struct AnchorConfig {
  AnchorId id;
  AnchorRole role = AnchorRole::kSlave;
  Point2 position = Point2::Zero();
  std::optional<double> height;  // mounting height, deployment checks only
  ClockModel clock;              // simulator side only
};

/// Anchors plus the master cascade: who follows whom, master levels and
/// CCP lag slots. Level 1 is the primary master.
struct NetworkTopology {
  std::vector<AnchorConfig> anchors;
  std::map<AnchorId, std::set<AnchorId>> follow;
  std::map<AnchorId, int> master_level;
  std::map<AnchorId, int> lag_slots;

  bool has(const AnchorId& id) const;
  const AnchorConfig& anchor(const AnchorId& id) const;
  bool is_master(const AnchorId& id) const;
  std::vector<AnchorId> masters() const;

  // Empty if no master has level 1.
  AnchorId primary() const;

  // Masters followed by `id` (empty when none are configured).
  const std::set<AnchorId>& followed(const AnchorId& id) const;

  int level(const AnchorId& master) const;
  int lag_slot(const AnchorId& master) const;

  double baseline(const AnchorId& a, const AnchorId& b) const;
  AnchorPositions positions() const;

  /// Human-readable invariant violations; empty when the topology is valid.
  std::vector<std::string> problems() const;

  /// Anchors with no follow chain leading to the primary master, sorted.
  std::vector<AnchorId> orphans() const;

  /// Throws UnsyncableError for orphans, then Error(kInvalidTopology) for any
  /// other problem.
  void validate() const;
};

}  // namespace uwb
